//! Release gate: one check per advertised property, each printing a single
//! pass line with its runtime. Run with `--nocapture` to see the lines.

use asptk_core::chebyshev::{cheb_eval_direct, ChebTable};
use asptk_core::fastfactor::{
    appendix_eval_error, factor_bottom_up, factor_top_down, recursive_plan, verify_plan,
    FactorRole, SparseMatrix,
};
use asptk_core::models::{fourier_dense, model_a2, model_c2, model_dft, model_hex};
use asptk_core::ortho::{orthogonalize_c2, CDContext};
use asptk_core::polycore::MultiPoly;
use asptk_core::weyl::{coords, FundamentalPoint, RootKind, RootSystemData};
use asptk_core::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use twofloat::TwoFloat;

fn timed<F: FnOnce()>(label: &str, budget: Duration, body: F) {
    let start = Instant::now();
    body();
    let elapsed = start.elapsed();
    println!("criterion {label}: PASS in {:.3} ms", elapsed.as_secs_f64() * 1e3);
    assert!(elapsed < budget, "criterion {label} exceeded its {budget:?} runtime budget: {elapsed:?}");
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Random torus parameter strictly inside the fundamental alcove.
fn random_alcove_point(data: &RootSystemData, rng: &mut ChaCha8Rng) -> FundamentalPoint {
    let d = data.rank;
    let cs: Vec<f64> = (0..d)
        .map(|j| (0.05 + 0.9 * rng.gen::<f64>()) / (data.marks[j] as f64 * d as f64 * 1.05))
        .collect();
    FundamentalPoint::new(cs)
}

/// Evaluate an expanded polynomial in double-double precision.
///
/// The monomial coefficients of T_λ reach absolute sums near 1e7 at
/// m-degree 12, so a plain f64 term sum carries roundoff above the 1e-10
/// agreement tolerance being verified. Extended precision removes the
/// evaluation noise; what remains is the genuine expansion-vs-orbit gap.
fn eval_expansion_dd(p: &MultiPoly, x: &[C64]) -> C64 {
    #[derive(Clone, Copy)]
    struct Cdd {
        re: TwoFloat,
        im: TwoFloat,
    }
    impl Cdd {
        fn from_c64(z: C64) -> Self {
            Cdd { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
        }
        fn mul(self, o: Cdd) -> Self {
            Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
        }
    }
    let xd: Vec<Cdd> = x.iter().map(|&v| Cdd::from_c64(v)).collect();
    let mut s = Cdd::from_c64(C64::new(0.0, 0.0));
    for (exps, coeff) in &p.terms {
        let mut t = Cdd::from_c64(*coeff);
        for (v, &k) in xd.iter().zip(exps.iter()) {
            for _ in 0..k {
                t = t.mul(*v);
            }
        }
        s = Cdd { re: s.re + t.re, im: s.im + t.im };
    }
    C64::new(f64::from(s.re), f64::from(s.im))
}

fn assert_entry_exact(got: &DMatrix<C64>, want: &[[C64; 4]; 4], what: &str) {
    for r in 0..4 {
        for col in 0..4 {
            assert_eq!(got[(r, col)], want[r][col], "{what} entry ({r},{col})");
        }
    }
}

fn golden_dft4() {
    let model = model_dft(4);
    let dense = fourier_dense(&model);
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    let i = c(0.0, 1.0);

    let up = factor_bottom_up(&model, 2).unwrap();
    let routing = [[o, z, o, z], [z, o, z, -i], [o, z, -o, z], [z, o, z, i]];
    let middle = [[o, o, z, z], [o, -o, z, z], [z, z, o, o], [z, z, o, -o]];
    let perm = [[o, z, z, z], [z, z, o, z], [z, o, z, z], [z, z, z, o]];
    assert_entry_exact(&up.factors[0].1.to_dense(), &routing, "bottom-up routing");
    assert_entry_exact(&up.factors[1].1.to_dense(), &middle, "bottom-up middle");
    assert_entry_exact(&up.factors[2].1.to_dense(), &perm, "bottom-up permutation");

    let down = factor_top_down(&model, 2).unwrap();
    let dperm = [[o, z, z, z], [z, z, z, o], [z, o, z, z], [z, z, o, z]];
    let blocks = [[o, o, z, z], [o, -o, z, z], [z, z, o, i], [z, z, o, -i]];
    let tensor = [[o, z, o, z], [z, o, z, o], [o, z, -o, z], [z, o, z, -o]];
    assert_entry_exact(&down.factors[0].1.to_dense(), &dperm, "top-down permutation");
    assert_entry_exact(&down.factors[1].1.to_dense(), &blocks, "top-down blocks");
    assert_entry_exact(&down.factors[2].1.to_dense(), &tensor, "top-down tensor");

    for plan in [&up, &down] {
        let prod = plan.to_dense();
        for r in 0..4 {
            for col in 0..4 {
                assert_eq!(prod[(r, col)], dense[(r, col)], "product entry ({r},{col})");
            }
        }
    }
}

fn chebyshev_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (kind, weights) in [(RootKind::A2, [1i64, 1]), (RootKind::C2, [1, 2])] {
        let data = RootSystemData::new(kind);
        let mut table = ChebTable::new(kind);

        // starting values, exact
        let t11 = table.poly(&[1, 1]);
        let expect: Vec<(Vec<u32>, f64)> = match kind {
            RootKind::A2 => vec![(vec![0, 0], -0.5), (vec![1, 1], 1.5)],
            RootKind::C2 => vec![(vec![1, 0], -1.0), (vec![1, 1], 2.0)],
            RootKind::A1 => unreachable!(),
        };
        assert_eq!(t11.terms.len(), expect.len());
        for (exps, coeff) in expect {
            assert_eq!(t11.terms[&exps], c(coeff, 0.0), "{kind:?} T_(1,1) term {exps:?}");
        }

        let thetas: Vec<FundamentalPoint> =
            (0..20).map(|_| random_alcove_point(&data, &mut rng)).collect();
        let points: Vec<Vec<C64>> =
            thetas.iter().map(|t| coords(&data, t).unwrap()).collect();
        for k in 0..=12i64 {
            for l in 0..=12i64 {
                if k * weights[0] + l * weights[1] > 12 {
                    continue;
                }
                let p = table.poly(&[k, l]);
                for (theta, x) in thetas.iter().zip(&points) {
                    let via_expansion = eval_expansion_dd(&p, x);
                    let via_orbit = cheb_eval_direct(&data, &[k, l], theta);
                    assert!(
                        (via_expansion - via_orbit).norm() < 1e-10,
                        "{kind:?} T_({k},{l}) disagrees: {via_expansion} vs {via_orbit}"
                    );
                }
            }
        }
    }
}

fn variety_counts() {
    let a2 = RootSystemData::new(RootKind::A2);
    for n in 1..=16usize {
        let model = model_a2(n);
        assert_eq!(model.variety.len(), n * n, "a2 n={n} point count");
        for p in &model.variety {
            let theta = p.theta.as_ref().unwrap();
            for glabel in [[n as i64, 0], [0, n as i64]] {
                let r = cheb_eval_direct(&a2, &glabel, theta).norm();
                assert!(r < 1e-9, "a2 n={n} generator {glabel:?} residual {r:.2e}");
            }
        }
    }
    let c2 = RootSystemData::new(RootKind::C2);
    for n in 1..=32usize {
        let model = model_c2(n);
        assert_eq!(model.variety.len(), n * (n + 1) / 2, "c2 n={n} point count");
        for p in &model.variety {
            let theta = p.theta.as_ref().unwrap();
            for l in 0..=n as i64 {
                let r = cheb_eval_direct(&c2, &[n as i64 - l, l], theta).norm();
                assert!(r < 1e-9, "c2 n={n} generator ({},{l}) residual {r:.2e}", n as i64 - l);
            }
        }
    }
}

/// Sizes of the diagonal blocks of a block-diagonal sparse matrix.
fn block_sizes(f: &SparseMatrix) -> Vec<usize> {
    assert_eq!(f.nrows, f.ncols);
    let mut row_max = vec![0usize; f.nrows];
    let mut col_max = vec![0usize; f.ncols];
    for &(r, cidx, _) in &f.triples {
        row_max[r] = row_max[r].max(cidx);
        col_max[cidx] = col_max[cidx].max(r);
    }
    let mut sizes = Vec::new();
    let (mut start, mut hi) = (0usize, 0usize);
    for i in 0..f.nrows {
        hi = hi.max(i).max(row_max[i]).max(col_max[i]);
        if hi == i {
            sizes.push(i - start + 1);
            start = i + 1;
        }
    }
    sizes
}

fn factorization_correctness() {
    for n in [2usize, 4, 8] {
        let model = model_a2(n);
        let dense = fourier_dense(&model);
        for (plan, way) in [
            (factor_bottom_up(&model, 2).unwrap(), "bottom-up"),
            (factor_top_down(&model, 2).unwrap(), "top-down"),
        ] {
            let rep = verify_plan(&plan, &dense);
            assert!(rep.rel_error < 1e-9, "a2 n={n} {way} rel error {:.2e}", rep.rel_error);
        }
    }
    for n in [2usize, 4, 8, 16] {
        let model = model_c2(n);
        let dense = fourier_dense(&model);
        let plan = factor_top_down(&model, 2).unwrap();
        let rep = verify_plan(&plan, &dense);
        assert!(rep.rel_error < 1e-9, "c2 n={n} top-down rel error {:.2e}", rep.rel_error);

        let m = n / 2;
        let blocks = plan
            .factors
            .iter()
            .find(|(role, _)| matches!(role, FactorRole::BlockDiagFourier))
            .map(|(_, f)| f)
            .unwrap();
        let mut sizes = block_sizes(blocks);
        sizes.sort_unstable();
        let tri = m * (m + 1) / 2;
        let mut want = vec![tri, tri, m * m];
        want.sort_unstable();
        assert_eq!(sizes, want, "c2 n={n} skew block dimensions");
    }
    for kind in [RootKind::A2, RootKind::C2] {
        for m in 1..=3usize {
            let err = appendix_eval_error(kind, m);
            assert!(err < 1e-9, "{kind:?} closed-form basis change m={m}: {err:.2e}");
        }
    }
}

fn complexity_scaling() {
    // Measured cost of the fully recursive plans, normalized by N log2 N.
    // A "trend violation" is a jump of more than 25% across one doubling:
    // at these sizes the ratio carries lower-order terms, so small wobbles
    // are not evidence of super-(N log N) growth, a sustained 25%-per-
    // doubling climb is.
    let families: [(&str, Vec<usize>); 2] = [
        ("dft", (3..=10).map(|k| 1usize << k).collect()),
        ("a2", vec![4, 8, 16]),
    ];
    for (name, sizes) in families {
        let mut ratios = Vec::new();
        for n in sizes {
            let model = if name == "dft" { model_dft(n) } else { model_a2(n) };
            let plan = recursive_plan(&model, 2).unwrap();
            let npoints = model.variety.len() as f64;
            let ratio = plan.nnz() as f64 / (npoints * npoints.log2());
            assert!(ratio <= 32.0, "{name} n={n}: nnz ratio {ratio:.3} above bound");
            ratios.push(ratio);
        }
        let violations =
            ratios.windows(2).filter(|w| w[1] > 1.25 * w[0]).count();
        assert!(violations <= 1, "{name}: trend violations {violations} (ratios {ratios:?})");
    }
}

fn christoffel_darboux() {
    let data = RootSystemData::new(RootKind::C2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1usize, 2, 4, 8] {
        let ctx = CDContext::new(n);
        let mut done = 0;
        while done < 50 {
            let tx = random_alcove_point(&data, &mut rng);
            let ty = random_alcove_point(&data, &mut rng);
            let x: Vec<f64> = coords(&data, &tx).unwrap().iter().map(|v| v.re).collect();
            let y: Vec<f64> = coords(&data, &ty).unwrap().iter().map(|v| v.re).collect();
            // keep clear of the divided-difference singularity
            if (x[0] - y[0]).abs() < 1e-6 || (x[1] - y[1]).abs() < 1e-6 {
                continue;
            }
            let explicit = ctx.kernel_sum(&x, &y);
            let scale = explicit.abs().max(1.0);
            let k1 = ctx.kernel(&x, &y, 1).unwrap();
            let k2 = ctx.kernel(&x, &y, 2).unwrap();
            assert!((k1 - explicit).abs() < 1e-9 * scale, "n={n} two-term vs sum: {k1} vs {explicit}");
            assert!((k1 - k2).abs() < 1e-9 * scale, "n={n} direction dependence: {k1} vs {k2}");
            done += 1;
        }
    }
}

fn orthogonality() {
    for n in 1..=16usize {
        let f = orthogonalize_c2(n).unwrap();
        let gram = f.transpose() * &f;
        let mut residual = 0.0f64;
        for r in 0..gram.nrows() {
            for cidx in 0..gram.ncols() {
                let want = if r == cidx { 1.0 } else { 0.0 };
                residual = residual.max((gram[(r, cidx)] - want).abs());
            }
        }
        assert!(residual < 1e-9, "c2 n={n} orthogonality residual {residual:.2e}");
    }
}

fn hexagonal_model() {
    for n in [4usize, 8] {
        let model = model_hex(n);
        let f = fourier_dense(&model);
        let gram = f.adjoint() * &f;
        let scale = gram[(0, 0)].re;
        assert!(scale > 0.0);
        for r in 0..gram.nrows() {
            for cidx in 0..gram.ncols() {
                let want = if r == cidx { c(scale, 0.0) } else { c(0.0, 0.0) };
                assert!(
                    (gram[(r, cidx)] - want).norm() < 1e-9 * scale,
                    "hex n={n}: F^H F not proportional to identity at ({r},{cidx})"
                );
            }
        }
        let plan = factor_bottom_up(&model, 2).unwrap();
        let rep = verify_plan(&plan, &f);
        assert!(rep.rel_error < 1e-9, "hex n={n} plan rel error {:.2e}", rep.rel_error);
        for (role, factor) in &plan.factors {
            if matches!(role, FactorRole::RoutingScaled) {
                assert!(factor.max_row_nnz() <= 4, "hex n={n} routing row density");
            }
        }
    }
}

#[test]
fn acceptance() {
    // warm-up outside any budget: first-touch allocator and lazy init
    let _ = fourier_dense(&model_dft(4));

    timed("1 (golden 4-point plans)", Duration::from_millis(1), golden_dft4);
    timed("2 (Chebyshev consistency)", Duration::from_secs(5), chebyshev_consistency);
    timed("3 (variety counts and residuals)", Duration::from_secs(5), variety_counts);
    timed("4 (factorization correctness)", Duration::from_secs(30), factorization_correctness);
    timed("5 (plan cost scaling)", Duration::from_secs(60), complexity_scaling);
    timed("6 (Christoffel-Darboux forms)", Duration::from_secs(10), christoffel_darboux);
    timed("7 (orthogonalized transforms)", Duration::from_secs(10), orthogonality);
    timed("8 (hexagonal model)", Duration::from_secs(20), hexagonal_model);
}
