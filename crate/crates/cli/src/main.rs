//! Command line front end for asptk-core.
//!
//! Subcommands: `zeros` (variety points), `matrix` (dense Fourier matrix),
//! `factor` (sparse factorization + verification report), `ortho`
//! (orthogonalized C2 transform), `bench` (plan-apply vs dense-apply
//! timings). All output is JSON with floats at 17 significant digits.
//!
//! Exit codes: 0 success, 2 validation failure (bad inputs, unsupported
//! model/method combination), 3 verification failure (a numerical check
//! exceeded tolerance).

use asptk_core::fastfactor::{factor_bottom_up, factor_top_down, recursive_plan, verify_plan};
use asptk_core::models::{build_model, fourier_dense, json_c64, json_f64, model_to_json};
use asptk_core::ortho::orthogonalize_c2;
use asptk_core::{C64, Error, FactorPlan, FactorRole, SignalModel, SparseMatrix, VerifyReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "asptk",
    about = "Fourier transforms on zero-dimensional varieties: models, sparse factorizations, orthogonalization",
    long_about = "Builds Fourier transform matrices for algebraic signal models (dft, dct3, \
hex, a2, c2), synthesizes sparse factorizations (bottom-up, top-down, recursive), and \
produces the orthogonalized C2 transform.\n\nThe environment variable ASPTK_THREADS caps \
worker parallelism; the current implementation is sequential, so any positive value is \
accepted and trivially honored."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the model's variety points as JSON
    Zeros(CommonArgs),
    /// Emit the dense Fourier matrix as JSON
    Matrix(CommonArgs),
    /// Synthesize a sparse factorization and verify it against the dense matrix
    Factor(CommonArgs),
    /// Build the orthogonalized C2 transform and report its residual
    Ortho(CommonArgs),
    /// Time plan-apply vs dense-apply on random vectors over doubling sizes
    Bench(CommonArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Induced-module factorization (dft, hex, a2)
    BottomUp,
    /// Polynomial-decomposition factorization (dft, a2, c2 with even n)
    TopDown,
    /// Repeated factorization down to base size (dft, a2, c2 with n = 2^k)
    Recursive,
}

impl Method {
    fn as_str(&self) -> &'static str {
        match self {
            Method::BottomUp => "bottom-up",
            Method::TopDown => "top-down",
            Method::Recursive => "recursive",
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Signal model: dft, dct3, hex, a2, c2
    #[arg(long)]
    model: String,
    /// Size parameter (hex: power of two >= 4; recursive: power of two)
    #[arg(long)]
    n: usize,
    /// Factorization method (required by factor, optional for bench)
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Verification tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Output file; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for randomized bench inputs
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = check_threads().and_then(|_| match &cli.cmd {
        Cmd::Zeros(a) => cmd_zeros(a),
        Cmd::Matrix(a) => cmd_matrix(a),
        Cmd::Factor(a) => cmd_factor(a),
        Cmd::Ortho(a) => cmd_ortho(a),
        Cmd::Bench(a) => cmd_bench(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Unsupported(_) => ExitCode::from(2),
                Error::Verification(_) => ExitCode::from(3),
            }
        }
    }
}

/// ASPTK_THREADS caps parallelism. The implementation is sequential, so
/// any positive integer is accepted; malformed values are rejected.
fn check_threads() -> Result<(), Error> {
    match std::env::var("ASPTK_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => match v.parse::<usize>() {
            Ok(t) if t >= 1 => Ok(()),
            _ => Err(Error::Validation(format!(
                "ASPTK_THREADS must be a positive integer, got '{v}'"
            ))),
        },
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn cmd_zeros(args: &CommonArgs) -> Result<(), Error> {
    let model = build_model(&args.model, args.n)?;
    let mut body = format!("{{\"model\":\"{}\",\"n\":{},\"points\":[", model.name, model.n);
    for (i, p) in model.variety.iter().enumerate() {
        if i > 0 {
            body.push(',');
        }
        let label: Vec<String> = p.label.iter().map(|v| v.to_string()).collect();
        let xs: Vec<String> = p.xcoords.iter().map(|&z| json_c64(z)).collect();
        body.push_str(&format!("{{\"label\":[{}],\"x\":[{}]}}", label.join(","), xs.join(",")));
    }
    body.push_str("]}");
    emit(&args.out, &body)
}

fn cmd_matrix(args: &CommonArgs) -> Result<(), Error> {
    let model = build_model(&args.model, args.n)?;
    let f = fourier_dense(&model);
    let mut body = format!(
        "{{\"model\":\"{}\",\"n\":{},\"size\":{},\"rows\":[",
        model.name,
        model.n,
        f.nrows()
    );
    for r in 0..f.nrows() {
        if r > 0 {
            body.push(',');
        }
        let row: Vec<String> = (0..f.ncols()).map(|c| json_c64(f[(r, c)])).collect();
        body.push_str(&format!("[{}]", row.join(",")));
    }
    body.push_str("],\"basis\":");
    body.push_str(&model_to_json(&model));
    body.push('}');
    emit(&args.out, &body)
}

fn build_plan(model: &SignalModel, method: Method) -> Result<FactorPlan, Error> {
    match method {
        Method::BottomUp => match model.name.as_str() {
            "dft" | "hex" | "a2" => factor_bottom_up(model, 2),
            other => Err(Error::Unsupported(format!("bottom-up factorization for model '{other}'"))),
        },
        Method::TopDown => match model.name.as_str() {
            "dft" | "a2" | "c2" => factor_top_down(model, 2),
            other => Err(Error::Unsupported(format!("top-down factorization for model '{other}'"))),
        },
        Method::Recursive => recursive_plan(model, 2),
    }
}

fn report_json(model: &str, n: usize, method: Method, rep: &VerifyReport) -> String {
    let speedup = rep.naive_nnz as f64 / rep.nnz_total.max(1) as f64;
    let per: Vec<String> = rep.nnz_per_factor.iter().map(|v| v.to_string()).collect();
    format!(
        "{{\"model\":\"{}\",\"n\":{},\"method\":\"{}\",\"max_abs_error\":{},\"rel_error\":{},\
\"nnz_total\":{},\"nnz_per_factor\":[{}],\"naive_nnz\":{},\"speedup\":{}}}",
        model,
        n,
        method.as_str(),
        json_f64(rep.max_abs_error),
        json_f64(rep.rel_error),
        rep.nnz_total,
        per.join(","),
        rep.naive_nnz,
        json_f64(speedup)
    )
}

fn cmd_factor(args: &CommonArgs) -> Result<(), Error> {
    let method = args
        .method
        .ok_or_else(|| Error::Validation("factor requires --method".into()))?;
    let model = build_model(&args.model, args.n)?;
    let plan = build_plan(&model, method)?;
    let rep = verify_plan(&plan, &fourier_dense(&model));
    if let Some(path) = &args.out {
        emit(&Some(path.clone()), &plan.to_json())?;
    }
    println!("{}", report_json(&model.name, model.n, method, &rep));
    if rep.rel_error > args.tol {
        return Err(Error::Verification(format!(
            "plan error {:.3e} exceeds tolerance {:.3e}",
            rep.rel_error, args.tol
        )));
    }
    Ok(())
}

fn cmd_ortho(args: &CommonArgs) -> Result<(), Error> {
    if args.model != "c2" {
        return Err(Error::Unsupported(format!(
            "orthogonalization is implemented for the c2 model only (the zero count must \
match dim P_{{n-1}}), got '{}'",
            args.model
        )));
    }
    let m = orthogonalize_c2(args.n)?;
    let size = m.nrows();
    let mut residual = 0.0f64;
    let gram = m.transpose() * &m;
    for r in 0..size {
        for c in 0..size {
            let target = if r == c { 1.0 } else { 0.0 };
            residual = residual.max((gram[(r, c)] - target).abs());
        }
    }
    let mut body = format!(
        "{{\"model\":\"c2\",\"n\":{},\"size\":{},\"residual\":{}",
        args.n,
        size,
        json_f64(residual)
    );
    if args.out.is_some() {
        body.push_str(",\"rows\":[");
        for r in 0..size {
            if r > 0 {
                body.push(',');
            }
            let row: Vec<String> = (0..size).map(|c| json_f64(m[(r, c)])).collect();
            body.push_str(&format!("[{}]", row.join(",")));
        }
        body.push(']');
    }
    body.push('}');
    if args.out.is_some() {
        emit(&args.out, &body)?;
        println!(
            "{{\"model\":\"c2\",\"n\":{},\"residual\":{}}}",
            args.n,
            json_f64(residual)
        );
    } else {
        println!("{body}");
    }
    if residual > args.tol {
        return Err(Error::Verification(format!(
            "orthogonality residual {residual:.3e} exceeds tolerance {:.3e}",
            args.tol
        )));
    }
    Ok(())
}

/// Doubling size schedule for the bench command, ending at `n`.
fn bench_sizes(model: &str, n: usize) -> Vec<usize> {
    let start = if model == "hex" { 4 } else { 1 };
    let mut sizes = Vec::new();
    let mut s = start;
    while s <= n {
        sizes.push(s);
        s *= 2;
    }
    if sizes.is_empty() {
        sizes.push(n);
    }
    sizes
}

/// Median per-iteration nanoseconds of `f` over enough repetitions to
/// dominate timer noise.
fn time_ns<F: FnMut()>(mut f: F) -> f64 {
    let mut samples = Vec::new();
    for _ in 0..5 {
        let iters = 16;
        let t0 = Instant::now();
        for _ in 0..iters {
            f();
        }
        samples.push(t0.elapsed().as_nanos() as f64 / iters as f64);
    }
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn cmd_bench(args: &CommonArgs) -> Result<(), Error> {
    let method = args.method.unwrap_or(match args.model.as_str() {
        "hex" => Method::BottomUp,
        _ => Method::Recursive,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for s in bench_sizes(&args.model, args.n) {
        let model = build_model(&args.model, s)?;
        let dense = fourier_dense(&model);
        let size = dense.nrows();
        // A 1x1 transform has nothing to factor; its plan is the matrix.
        let plan = if size == 1 {
            FactorPlan {
                model: model.name.clone(),
                n: s,
                factors: vec![(FactorRole::BlockDiagFourier, SparseMatrix::from_dense(&dense))],
            }
        } else {
            build_plan(&model, method)?
        };
        let rep = verify_plan(&plan, &dense);
        if rep.rel_error > args.tol {
            return Err(Error::Verification(format!(
                "bench plan for {} n={s} has error {:.3e} above tolerance",
                model.name, rep.rel_error
            )));
        }
        let x: Vec<C64> = (0..size)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let dense_sparse = SparseMatrix::from_dense(&dense);
        let dense_ns = time_ns(|| {
            std::hint::black_box(dense_sparse.apply(std::hint::black_box(&x)));
        });
        let plan_ns = time_ns(|| {
            std::hint::black_box(plan.apply(std::hint::black_box(&x)));
        });
        let ratio = rep.naive_nnz as f64 / rep.nnz_total.max(1) as f64;
        rows.push(format!(
            "{{\"n\":{},\"size\":{},\"dense_apply_ns\":{},\"plan_apply_ns\":{},\"nnz_ratio\":{}}}",
            s,
            size,
            json_f64(dense_ns),
            json_f64(plan_ns),
            json_f64(ratio)
        ));
    }
    let body = format!(
        "{{\"model\":\"{}\",\"method\":\"{}\",\"seed\":{},\"rows\":[{}]}}",
        args.model,
        method.as_str(),
        args.seed,
        rows.join(",")
    );
    emit(&args.out, &body)
}
