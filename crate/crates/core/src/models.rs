//! Concrete signal models: variety point sets, ordered module bases and
//! dense Fourier matrices.
//!
//! A model is a triple (algebra, module, evaluation map) presented
//! concretely: an ordered list of variety points, an ordered polynomial
//! basis, and ideal generators kept only for verification. The dense
//! Fourier matrix has rows indexed by variety points and columns by basis
//! polynomials; the entry is the basis polynomial evaluated at the point.
//!
//! Builders:
//! - [`model_dft`]: ℂ[x]/⟨xⁿ−1⟩, monomial basis, roots of unity e^{−2πij/n}
//! - [`model_dct3`]: Chebyshev T₀…T_{n−1} on the zeros of T_n
//! - [`model_hex`]: directed hexagonal lattice model of size 3N²
//! - [`model_a2`], [`model_c2`]: multivariate Chebyshev models
//!
//! Ordering conventions are frozen; factor plans and golden values depend
//! on them.

use crate::chebyshev::ChebTable;
use crate::polycore::{poly_eval, MultiPoly};
use crate::weyl::{coords, FundamentalPoint, RootKind, RootSystemData};
use crate::{C64, Error};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Absolute tolerance for "this point lies on the variety".
pub const ZERO_TOL: f64 = 1e-9;
/// Tolerance for identifying variety points by their coordinates.
pub const POINT_MATCH_TOL: f64 = 1e-8;

/// A point of the variety.
#[derive(Debug, Clone)]
pub struct VarietyPoint {
    /// Integer multi-index identifying the point's parameters.
    pub label: Vec<i64>,
    /// Coordinates in the polynomial variables.
    pub xcoords: Vec<C64>,
    /// Torus preimage in barycentric coordinates, when one exists.
    pub theta: Option<FundamentalPoint>,
}

/// A concrete signal model.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub name: String,
    pub n: usize,
    pub nvars: usize,
    /// Ideal generators, used for verification only.
    pub generators: Vec<MultiPoly>,
    pub variety: Vec<VarietyPoint>,
    pub basis: Vec<MultiPoly>,
    pub basis_labels: Vec<Vec<i64>>,
}

fn unit(angle: f64) -> C64 {
    C64::new(angle.cos(), angle.sin())
}

/// e^{2πi·p/q} with exact values at quarter turns (±1, ±i), so that
/// small transforms built from roots of unity are entry-exact.
pub fn unit_fraction(p: i64, q: i64) -> C64 {
    assert!(q > 0);
    let r = p.rem_euclid(q);
    if (4 * r) % q == 0 {
        return match 4 * r / q {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    unit(2.0 * PI * r as f64 / q as f64)
}

/// ℂ[x]/⟨xⁿ−1⟩ with monomial basis 1, x, …, x^{n−1} on the n-th roots of
/// unity ordered as α_j = e^{−2πij/n}.
pub fn model_dft(n: usize) -> SignalModel {
    assert!(n >= 1);
    let mut gen = MultiPoly::zero(1);
    gen.add_term(vec![n as u32], C64::new(1.0, 0.0));
    gen.add_term(vec![0], C64::new(-1.0, 0.0));
    let variety = (0..n)
        .map(|j| VarietyPoint {
            label: vec![j as i64],
            xcoords: vec![unit_fraction(-(j as i64), n as i64)],
            theta: None,
        })
        .collect();
    let basis = (0..n)
        .map(|j| {
            let mut p = MultiPoly::zero(1);
            p.add_term(vec![j as u32], C64::new(1.0, 0.0));
            p
        })
        .collect();
    SignalModel {
        name: "dft".into(),
        n,
        nvars: 1,
        generators: vec![gen],
        variety,
        basis,
        basis_labels: (0..n).map(|j| vec![j as i64]).collect(),
    }
}

/// Chebyshev model on the zeros of T_n: basis T₀…T_{n−1}, variety
/// cos(π(2j+1)/(2n)) ordered by j ascending. Its Fourier matrix is a
/// DCT-3 up to the basis scaling.
pub fn model_dct3(n: usize) -> SignalModel {
    assert!(n >= 1);
    let mut table = ChebTable::new(RootKind::A1);
    let variety = (0..n)
        .map(|j| {
            let c = (2 * j + 1) as f64 / (4 * n) as f64;
            VarietyPoint {
                label: vec![j as i64],
                xcoords: vec![C64::new((PI * (2 * j + 1) as f64 / (2 * n) as f64).cos(), 0.0)],
                theta: Some(FundamentalPoint::new(vec![c])),
            }
        })
        .collect();
    let basis: Vec<MultiPoly> = (0..n).map(|j| table.poly(&[j as i64])).collect();
    SignalModel {
        name: "dct3".into(),
        n,
        nvars: 1,
        generators: vec![table.poly(&[n as i64])],
        variety,
        basis,
        basis_labels: (0..n).map(|j| vec![j as i64]).collect(),
    }
}

/// Directed hexagonal lattice model of size 3N². Points are indexed by
/// (k₁,k₂) ∈ [0,3N)×[0,N) lex; the basis index (n₁,n₂) runs over the same
/// ranges. Matrix entries come from the closed form
/// exp(−πi((2n₁−n₂)(2k₁−k₂) + 3n₂k₂)/(3N)); the stored coordinates
/// (x, y) = (e^{−πi(2k₁−k₂)/(3N)}, e^{−πik₂/N}) are chosen so that
/// monomial evaluation of x^{(2n₁−n₂) mod 6N} y^{n₂} agrees with it.
/// (With coefficient 6 in place of 3 the matrix is singular for N
/// divisible by 4: the column index map then double-covers half of the
/// character group.)
pub fn model_hex(n_param: usize) -> SignalModel {
    let nn = n_param;
    assert!(nn >= 2 && nn % 2 == 0, "hexagonal model needs even N ≥ 2");
    let size = 3 * nn * nn;
    let mut variety = Vec::with_capacity(size);
    for k1 in 0..3 * nn {
        for k2 in 0..nn {
            let x = unit_fraction(-(2 * k1 as i64 - k2 as i64), 6 * nn as i64);
            let y = unit_fraction(-(k2 as i64), 2 * nn as i64);
            variety.push(VarietyPoint {
                label: vec![k1 as i64, k2 as i64],
                xcoords: vec![x, y],
                theta: None,
            });
        }
    }
    let mut basis = Vec::with_capacity(size);
    let mut basis_labels = Vec::with_capacity(size);
    for n1 in 0..3 * nn {
        for n2 in 0..nn {
            let e1 = (2 * n1 as i64 - n2 as i64).rem_euclid(6 * nn as i64) as u32;
            let mut p = MultiPoly::zero(2);
            p.add_term(vec![e1, n2 as u32], C64::new(1.0, 0.0));
            basis.push(p);
            basis_labels.push(vec![n1 as i64, n2 as i64]);
        }
    }
    // x^{3N} − y^N and y^{2N} − 1
    let mut g1 = MultiPoly::zero(2);
    g1.add_term(vec![3 * nn as u32, 0], C64::new(1.0, 0.0));
    g1.add_term(vec![0, nn as u32], C64::new(-1.0, 0.0));
    let mut g2 = MultiPoly::zero(2);
    g2.add_term(vec![0, 2 * nn as u32], C64::new(1.0, 0.0));
    g2.add_term(vec![0, 0], C64::new(-1.0, 0.0));
    SignalModel {
        name: "hex".into(),
        n: nn,
        nvars: 2,
        generators: vec![g1, g2],
        variety,
        basis,
        basis_labels,
    }
}

/// A2 Chebyshev model: ℂ[x,y]/⟨T_{n,0}, T_{0,n}⟩ with basis
/// {T_{k,ℓ} : 0 ≤ k,ℓ < n} (lex by (k,ℓ)) on the n² common zeros. Points
/// come in two families of torus parameters, each ordered lex by (j,k);
/// labels are (family, j, k).
pub fn model_a2(n: usize) -> SignalModel {
    assert!(n >= 1);
    let data = RootSystemData::new(RootKind::A2);
    let mut table = ChebTable::new(RootKind::A2);
    let mut variety = Vec::new();
    let denom = (3 * n) as f64;
    for j in 0..n as i64 {
        for k in 0..n as i64 {
            if 2 + 3 * (j + k) < 3 * n as i64 {
                let theta = FundamentalPoint::new(vec![
                    (1 + 3 * j) as f64 / denom,
                    (1 + 3 * k) as f64 / denom,
                ]);
                let xcoords = coords(&data, &theta).expect("torus parameter lies in the alcove");
                variety.push(VarietyPoint { label: vec![1, j, k], xcoords, theta: Some(theta) });
            }
        }
    }
    for j in 0..n as i64 {
        for k in 0..n as i64 {
            if 4 + 3 * (j + k) < 3 * n as i64 {
                let theta = FundamentalPoint::new(vec![
                    (2 + 3 * j) as f64 / denom,
                    (2 + 3 * k) as f64 / denom,
                ]);
                let xcoords = coords(&data, &theta).expect("torus parameter lies in the alcove");
                variety.push(VarietyPoint { label: vec![2, j, k], xcoords, theta: Some(theta) });
            }
        }
    }
    let mut basis = Vec::new();
    let mut basis_labels = Vec::new();
    for k in 0..n as i64 {
        for l in 0..n as i64 {
            basis.push(table.poly(&[k, l]));
            basis_labels.push(vec![k, l]);
        }
    }
    SignalModel {
        name: "a2".into(),
        n,
        nvars: 2,
        generators: vec![table.poly(&[n as i64, 0]), table.poly(&[0, n as i64])],
        variety,
        basis,
        basis_labels,
    }
}

/// C2 Chebyshev model: ℝ[x₁,x₂]/⟨𝕋_n⟩ with basis {T_{k,ℓ} : k+ℓ < n}
/// ordered by graded degree (weights 1,2) then lex, on the n(n+1)/2
/// common zeros θ = ((2j+1)/(4n), k/n) with j+k < n, ordered lex (j,k).
pub fn model_c2(n: usize) -> SignalModel {
    assert!(n >= 1);
    let data = RootSystemData::new(RootKind::C2);
    let mut table = ChebTable::new(RootKind::C2);
    let mut variety = Vec::new();
    for j in 0..n as i64 {
        for k in 0..n as i64 {
            if j + k < n as i64 {
                let theta = FundamentalPoint::new(vec![
                    (2 * j + 1) as f64 / (4 * n) as f64,
                    k as f64 / n as f64,
                ]);
                let xcoords = coords(&data, &theta).expect("torus parameter lies in the alcove");
                // C2 coordinates are real on these points
                let xcoords = xcoords.iter().map(|v| C64::new(v.re, 0.0)).collect();
                variety.push(VarietyPoint { label: vec![j, k], xcoords, theta: Some(theta) });
            }
        }
    }
    let basis_labels = c2_basis_labels(n);
    let basis = basis_labels.iter().map(|kl| table.poly(kl)).collect();
    let generators = (0..=n as i64).map(|l| table.poly(&[n as i64 - l, l])).collect();
    SignalModel {
        name: "c2".into(),
        n,
        nvars: 2,
        generators,
        variety,
        basis,
        basis_labels,
    }
}

/// C2 basis index set {(k,ℓ) : k+ℓ < n} in graded (weights 1,2) then lex
/// order.
pub fn c2_basis_labels(n: usize) -> Vec<Vec<i64>> {
    let mut labels: Vec<Vec<i64>> = Vec::new();
    for k in 0..n as i64 {
        for l in 0..n as i64 - k {
            labels.push(vec![k, l]);
        }
    }
    labels.sort_by_key(|kl| (kl[0] + 2 * kl[1], kl[0], kl[1]));
    labels
}

/// Dense Fourier matrix: rows = variety points, columns = basis
/// polynomials. For the hexagonal model entries come from the closed-form
/// exponential to avoid Laurent-monomial arithmetic.
pub fn fourier_dense(model: &SignalModel) -> DMatrix<C64> {
    let size = model.variety.len();
    assert_eq!(size, model.basis.len(), "model is not square");
    if model.name == "hex" {
        let nn = model.n as i64;
        return DMatrix::from_fn(size, size, |r, c| {
            let (k1, k2) = (model.variety[r].label[0], model.variety[r].label[1]);
            let (n1, n2) = (model.basis_labels[c][0], model.basis_labels[c][1]);
            unit_fraction(-((2 * n1 - n2) * (2 * k1 - k2) + 3 * n2 * k2), 6 * nn)
        });
    }
    // Chebyshev models: evaluate through the orbit-of-exponentials form at
    // the stored torus parameter. The expanded monomial coefficients of T_λ
    // grow exponentially with degree, so evaluating the expansions loses
    // all precision beyond n ≈ 8.
    if model.name == "a2" || model.name == "c2" {
        let data = RootSystemData::new(if model.name == "a2" { RootKind::A2 } else { RootKind::C2 });
        return DMatrix::from_fn(size, size, |r, c| {
            let theta = model.variety[r]
                .theta
                .as_ref()
                .expect("Chebyshev variety points carry torus parameters");
            crate::chebyshev::cheb_eval_direct(&data, &model.basis_labels[c], theta)
        });
    }
    DMatrix::from_fn(size, size, |r, c| poly_eval(&model.basis[c], &model.variety[r].xcoords))
}

/// Check the model's invariants; returns the condition number of the
/// dense Fourier matrix.
///
/// Verified: every ideal generator vanishes at every variety point
/// (within [`ZERO_TOL`]), variety points are pairwise distinct (beyond
/// [`POINT_MATCH_TOL`]), and the dense matrix is numerically invertible.
pub fn validate(model: &SignalModel) -> Result<f64, Error> {
    for p in &model.variety {
        for g in &model.generators {
            let r = poly_eval(g, &p.xcoords).norm();
            if r >= ZERO_TOL {
                return Err(Error::Verification(format!(
                    "model {}: generator residual {r:.3e} at point {:?}",
                    model.name, p.label
                )));
            }
        }
    }
    for i in 0..model.variety.len() {
        for j in i + 1..model.variety.len() {
            let d = model.variety[i]
                .xcoords
                .iter()
                .zip(&model.variety[j].xcoords)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if d <= POINT_MATCH_TOL {
                return Err(Error::Verification(format!(
                    "model {}: points {:?} and {:?} coincide",
                    model.name, model.variety[i].label, model.variety[j].label
                )));
            }
        }
    }
    let f = fourier_dense(model);
    let svd = f.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || !smax.is_finite() {
        return Err(Error::Verification(format!(
            "model {}: dense Fourier matrix is singular",
            model.name
        )));
    }
    Ok(smax / smin)
}

/// Format a float with 17 significant digits (round-trip safe).
pub fn json_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Format a complex number as a JSON pair [re, im].
pub fn json_c64(z: C64) -> String {
    format!("[{},{}]", json_f64(z.re), json_f64(z.im))
}

/// JSON export: {name, n, variety: [{label, x: [[re,im],…]}], basis_labels}.
pub fn model_to_json(model: &SignalModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("{{\"name\":\"{}\",\"n\":{},\"variety\":[", model.name, model.n));
    for (i, p) in model.variety.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let label: Vec<String> = p.label.iter().map(|v| v.to_string()).collect();
        let xs: Vec<String> = p.xcoords.iter().map(|&z| json_c64(z)).collect();
        out.push_str(&format!(
            "{{\"label\":[{}],\"x\":[{}]}}",
            label.join(","),
            xs.join(",")
        ));
    }
    out.push_str("],\"basis_labels\":[");
    for (i, l) in model.basis_labels.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let parts: Vec<String> = l.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("[{}]", parts.join(",")));
    }
    out.push_str("]}");
    out
}

/// Build a model by name; `n` is the per-model size parameter.
pub fn build_model(name: &str, n: usize) -> Result<SignalModel, Error> {
    match name {
        "dft" => Ok(model_dft(n)),
        "dct3" => Ok(model_dct3(n)),
        "hex" => {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::Validation(format!(
                    "hexagonal model requires N a power of two ≥ 4, got {n}"
                )));
            }
            Ok(model_hex(n))
        }
        "a2" => Ok(model_a2(n)),
        "c2" => Ok(model_c2(n)),
        other => Err(Error::Validation(format!("unknown model '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: C64, b: C64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn dft4_matches_golden_matrix() {
        let f = fourier_dense(&model_dft(4));
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let rows = [
            [one, one, one, one],
            [one, -i, -one, i],
            [one, -one, one, -one],
            [one, i, -one, -i],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_close(f[(r, c)], rows[r][c], 1e-14);
            }
        }
    }

    #[test]
    fn dft2() {
        let f = fourier_dense(&model_dft(2));
        let one = C64::new(1.0, 0.0);
        assert_close(f[(0, 0)], one, 1e-15);
        assert_close(f[(0, 1)], one, 1e-15);
        assert_close(f[(1, 0)], one, 1e-15);
        assert_close(f[(1, 1)], -one, 1e-15);
    }

    #[test]
    fn dct3_rows_and_residuals() {
        let m = model_dct3(2);
        let f = fourier_dense(&m);
        assert_close(f[(0, 1)], C64::new((PI / 4.0).cos(), 0.0), 1e-14);
        assert_close(f[(1, 1)], C64::new((3.0 * PI / 4.0).cos(), 0.0), 1e-14);
        for n in [1, 3, 8] {
            let m = model_dct3(n);
            for p in &m.variety {
                assert!(poly_eval(&m.generators[0], &p.xcoords).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hex_model_is_scaled_unitary() {
        let m = model_hex(4);
        assert_eq!(m.variety.len(), 48);
        let f = fourier_dense(&m);
        let g = f.adjoint() * &f;
        let scale = g[(0, 0)].re;
        assert!(scale > 0.0);
        for r in 0..48 {
            for c in 0..48 {
                let want = if r == c { C64::new(scale, 0.0) } else { C64::new(0.0, 0.0) };
                assert!((g[(r, c)] - want).norm() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn hex_monomial_evaluation_matches_closed_form() {
        let m = model_hex(4);
        let f = fourier_dense(&m);
        for (r, p) in m.variety.iter().enumerate() {
            for (c, b) in m.basis.iter().enumerate() {
                assert!((poly_eval(b, &p.xcoords) - f[(r, c)]).norm() < 1e-11);
            }
        }
        // constant basis element gives a row ... column of ones
        let c0 = m.basis_labels.iter().position(|l| l == &vec![0, 0]).unwrap();
        for r in 0..48 {
            assert_close(f[(r, c0)], C64::new(1.0, 0.0), 1e-12);
        }
    }

    #[test]
    fn a2_variety_counts_and_residuals() {
        for n in 1..=5usize {
            let m = model_a2(n);
            assert_eq!(m.variety.len(), n * n, "n={n}");
            assert_eq!(m.basis.len(), n * n);
            for p in &m.variety {
                for g in &m.generators {
                    assert!(poly_eval(g, &p.xcoords).norm() < 1e-9);
                }
            }
        }
        let f = fourier_dense(&model_a2(1));
        assert_close(f[(0, 0)], C64::new(1.0, 0.0), 1e-12);
    }

    #[test]
    fn c2_variety_counts_and_residuals() {
        for n in 1..=6usize {
            let m = model_c2(n);
            assert_eq!(m.variety.len(), n * (n + 1) / 2, "n={n}");
            assert_eq!(m.basis.len(), n * (n + 1) / 2);
            for p in &m.variety {
                for g in &m.generators {
                    assert!(poly_eval(g, &p.xcoords).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn c2_level_two_points() {
        let m = model_c2(2);
        let s = 2f64.sqrt() / 2.0;
        let want = [
            (vec![0, 0], (s, 0.5)),
            (vec![0, 1], (0.0, -0.5)),
            (vec![1, 0], (-s, 0.5)),
        ];
        for (label, (x1, x2)) in want {
            let p = m.variety.iter().find(|p| p.label == label).unwrap();
            assert_close(p.xcoords[0], C64::new(x1, 0.0), 1e-12);
            assert_close(p.xcoords[1], C64::new(x2, 0.0), 1e-12);
        }
        let f = fourier_dense(&m);
        assert!(f.determinant().norm() > 1e-8);
    }

    #[test]
    fn c2_basis_order_is_graded() {
        assert_eq!(
            c2_basis_labels(3),
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2],
            ]
        );
    }

    #[test]
    fn validate_small_models() {
        for m in [
            model_dft(6),
            model_dct3(5),
            model_hex(4),
            model_a2(3),
            model_c2(4),
        ] {
            let cond = validate(&m).unwrap();
            assert!(cond.is_finite() && cond >= 1.0, "{}", m.name);
        }
    }

    #[test]
    fn json_shape() {
        let s = model_to_json(&model_dft(2));
        assert!(s.starts_with("{\"name\":\"dft\",\"n\":2,"));
        assert!(s.contains("\"variety\":["));
        assert!(s.contains("\"basis_labels\":[[0],[1]]"));
        // 17 significant digits
        assert!(s.contains("1.0000000000000000e0"));
    }

    #[test]
    fn build_model_validation() {
        assert!(build_model("hex", 6).is_err());
        assert!(build_model("nope", 4).is_err());
        assert!(build_model("a2", 2).is_ok());
    }
}
