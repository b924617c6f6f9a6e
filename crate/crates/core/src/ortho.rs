//! Orthogonalization of the C2 transform via the multivariate
//! Christoffel-Darboux kernel.
//!
//! The reproducing kernel of the degree-≤n C2 Chebyshev space has a
//! closed two-term form built from the stacked recurrence matrices
//! ([`crate::chebyshev::shift_matrices`]) and the moment matrices H_k.
//! Its confluent values at the variety points give Gauss-Jacobi weights;
//! scaling the dense transform by the square roots of those weights and
//! of the H_k⁻¹ blocks yields a matrix with orthonormal columns.

use crate::chebyshev::{cheb_eval_direct, h_matrices, shift_matrices, ChebTable, RecurrenceMatrices};
use crate::models::model_c2;
use crate::polycore::{poly_diff, poly_eval, MultiPoly};
use crate::weyl::{FundamentalPoint, RootKind, RootSystemData};
use crate::{C64, Error};
use nalgebra::{DMatrix, DVector};

/// Two evaluation points closer than this along the division coordinate
/// are rejected by the divided-difference branch of the kernel.
pub const CONFLUENCE_TOL: f64 = 1e-10;
/// Gauss-Jacobi weights below this magnitude are treated as a failure.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Hard cap on the orthogonality residual of the rescaled transform.
pub const ORTHO_RESIDUAL_CAP: f64 = 1e-6;

/// Precomputed data for the degree-n Christoffel-Darboux kernel of C2:
/// the stacked polynomial vectors 𝕋₀…𝕋_{n+1}, their partial derivatives,
/// the diagonal H blocks, and the level-n recurrence matrices A_{n,i}.
pub struct CDContext {
    pub n: usize,
    h: Vec<DMatrix<f64>>,
    /// stacks[k][j] = T_{k−j, j}
    stacks: Vec<Vec<MultiPoly>>,
    /// dstacks[i−1][k][j] = ∂T_{k−j,j}/∂x_i
    dstacks: [Vec<Vec<MultiPoly>>; 2],
    /// a[i−1] = A_{n,i}
    a: [DMatrix<f64>; 2],
}

fn eval_real(p: &MultiPoly, x: &[f64]) -> f64 {
    let pt: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    poly_eval(p, &pt).re
}

impl CDContext {
    pub fn new(n: usize) -> Self {
        let data = RootSystemData::new(RootKind::C2);
        let mut table = ChebTable::new(RootKind::C2);
        let stacks: Vec<Vec<MultiPoly>> = (0..=n + 1)
            .map(|k| (0..=k).map(|j| table.poly(&[(k - j) as i64, j as i64])).collect())
            .collect();
        let dstacks = [0usize, 1].map(|i| {
            stacks
                .iter()
                .map(|st| st.iter().map(|p| poly_diff(p, i)).collect())
                .collect()
        });
        let a = [1usize, 2].map(|i| shift_matrices(&data, n, i).a);
        CDContext { n, h: h_matrices(&data, n), stacks, dstacks, a }
    }

    fn stack_eval(&self, k: usize, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(k + 1, self.stacks[k].iter().map(|p| eval_real(p, x)))
    }

    fn stack_eval_diff(&self, k: usize, i: usize, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(k + 1, self.dstacks[i - 1][k].iter().map(|p| eval_real(p, x)))
    }

    fn h_inv(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k + 1, k + 1, |r, c| if r == c { 1.0 / self.h[k][(r, c)] } else { 0.0 })
    }

    /// Kernel as the explicit sum Σ_{k≤n} 𝕋_kᵀ(x) H_k⁻¹ 𝕋_k(y).
    pub fn kernel_sum(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..=self.n)
            .map(|k| {
                let tx = self.stack_eval(k, x);
                let ty = self.stack_eval(k, y);
                (tx.transpose() * self.h_inv(k) * ty)[(0, 0)]
            })
            .sum()
    }

    /// Kernel in two-term form, divided along coordinate `i` ∈ {1, 2}.
    ///
    /// Equal points take the confluent (derivative) branch; distinct
    /// points with |x_i − y_i| < [`CONFLUENCE_TOL`] are rejected.
    pub fn kernel(&self, x: &[f64], y: &[f64], i: usize) -> Result<f64, Error> {
        assert!(i == 1 || i == 2, "division coordinate must be 1 or 2");
        let n = self.n;
        let a = &self.a[i - 1];
        let hinv = self.h_inv(n);
        if x == y {
            let tn = self.stack_eval(n, x);
            let tn1 = self.stack_eval(n + 1, x);
            let dtn = self.stack_eval_diff(n, i, x);
            let dtn1 = self.stack_eval_diff(n + 1, i, x);
            let val = (tn.transpose() * &hinv * (a * dtn1))[(0, 0)]
                - ((a * tn1).transpose() * &hinv * dtn)[(0, 0)];
            return Ok(val);
        }
        if (x[i - 1] - y[i - 1]).abs() < CONFLUENCE_TOL {
            return Err(Error::Validation(format!(
                "points are too close along coordinate {i} for the divided-difference kernel"
            )));
        }
        let tnx = self.stack_eval(n, x);
        let tny = self.stack_eval(n, y);
        let tn1x = self.stack_eval(n + 1, x);
        let tn1y = self.stack_eval(n + 1, y);
        let num = ((a * tn1x).transpose() * &hinv * tny)[(0, 0)]
            - (tnx.transpose() * &hinv * (a * tn1y))[(0, 0)];
        Ok(num / (x[i - 1] - y[i - 1]))
    }
}

/// Stacked values 𝕋₀(α)…𝕋_n(α) from the trigonometric orbit form
/// (numerically exact at any degree, unlike expanded coefficients).
fn stacks_direct(data: &RootSystemData, n: usize, theta: &FundamentalPoint) -> Vec<DVector<f64>> {
    (0..=n)
        .map(|k| {
            DVector::from_iterator(
                k + 1,
                (0..=k).map(|j| cheb_eval_direct(data, &[(k - j) as i64, j as i64], theta).re),
            )
        })
        .collect()
}

/// Stacked first-coordinate derivatives ∂₁𝕋₀(α)…∂₁𝕋_n(α), obtained by
/// differentiating the three-term recurrence for both variables and
/// solving the stacked (overdetermined, full-rank) linear system level by
/// level. Avoids the cancellation of differentiated monomial expansions.
fn dstacks1_direct(
    n: usize,
    x: &[f64],
    tvals: &[DVector<f64>],
    rec: &[[RecurrenceMatrices; 2]],
) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    out.push(DVector::zeros(1));
    if n == 0 {
        return out;
    }
    out.push(DVector::from_vec(vec![1.0, 0.0]));
    for k in 2..=n {
        // x_i·𝕋_{k−1} = A𝕋_k + B𝕋_{k−1} + C𝕋_{k−2}, differentiated in x₁
        let mut lhs = DMatrix::zeros(2 * k, k + 1);
        let mut rhs = DVector::zeros(2 * k);
        for i in 0..2 {
            let RecurrenceMatrices { a, b, c } = &rec[k - 1][i];
            let mut r = if i == 0 { tvals[k - 1].clone() } else { DVector::zeros(k) };
            r += x[i] * &out[k - 1] - b * &out[k - 1] - c * &out[k - 2];
            for row in 0..k {
                rhs[i * k + row] = r[row];
                for col in 0..=k {
                    lhs[(i * k + row, col)] = a[(row, col)];
                }
            }
        }
        let sol = lhs
            .svd(true, true)
            .solve(&rhs, 1e-13)
            .expect("stacked recurrence system is full rank");
        out.push(sol);
    }
    out
}

/// Gauss-Jacobi weights of the n-level C2 variety: the reciprocal of the
/// degree-(n−1) confluent kernel at each variety point, in variety order.
/// All weights must be positive.
pub fn gj_diagonal(n: usize) -> Result<Vec<f64>, Error> {
    assert!(n >= 1);
    let data = RootSystemData::new(RootKind::C2);
    let model = model_c2(n);
    let h = h_matrices(&data, n - 1);
    let hinv = DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 / h[n - 1][(r, c)] } else { 0.0 });
    let rec: Vec<[RecurrenceMatrices; 2]> =
        (0..n).map(|k| [shift_matrices(&data, k, 1), shift_matrices(&data, k, 2)]).collect();
    let mut out = Vec::with_capacity(model.variety.len());
    for p in &model.variety {
        let theta = p.theta.as_ref().expect("variety points carry torus parameters");
        let x: Vec<f64> = p.xcoords.iter().map(|z| z.re).collect();
        let tvals = stacks_direct(&data, n, theta);
        let dvals = dstacks1_direct(n - 1, &x, &tvals, &rec);
        // A_{n−1,1}·∂₁𝕋_n from the differentiated recurrence at level n−1
        let RecurrenceMatrices { a, b, c } = &rec[n - 1][0];
        let mut a_dtn = tvals[n - 1].clone() + x[0] * &dvals[n - 1] - b * &dvals[n - 1];
        if n >= 2 {
            a_dtn -= c * &dvals[n - 2];
        }
        let k = (tvals[n - 1].transpose() * &hinv * &a_dtn)[(0, 0)]
            - ((a * &tvals[n]).transpose() * &hinv * &dvals[n - 1])[(0, 0)];
        if k < WEIGHT_TOL {
            return Err(Error::Verification(format!(
                "confluent kernel {k:.3e} at point {:?} does not give a positive weight",
                p.label
            )));
        }
        out.push(1.0 / k);
    }
    Ok(out)
}

/// Orthogonal version of the C2 transform: rows are the basis elements
/// in stacked order 𝕋₀…𝕋_{n−1}, scaled by H_k^{−1/2}; columns are the
/// variety points scaled by the square roots of the Gauss-Jacobi
/// weights. The result has orthonormal columns and rows; the residual
/// ‖MᵀM − I‖_max is verified against [`ORTHO_RESIDUAL_CAP`].
pub fn orthogonalize_c2(n: usize) -> Result<DMatrix<f64>, Error> {
    assert!(n >= 1);
    let model = model_c2(n);
    let weights = gj_diagonal(n)?;
    let data = RootSystemData::new(RootKind::C2);
    let h = h_matrices(&data, n - 1);
    let size = model.variety.len();
    let mut m = DMatrix::zeros(size, size);
    let mut row = 0usize;
    for k in 0..n {
        for j in 0..=k {
            let lambda = [(k - j) as i64, j as i64];
            let hkj = h[k][(j, j)];
            for (col, p) in model.variety.iter().enumerate() {
                let theta = p.theta.as_ref().expect("variety points carry torus parameters");
                // One sqrt of the combined ratio keeps w/H = 1 cases exact.
                m[(row, col)] =
                    (weights[col] / hkj).sqrt() * cheb_eval_direct(&data, &lambda, theta).re;
            }
            row += 1;
        }
    }
    let gram = m.transpose() * &m;
    let mut residual = 0.0f64;
    for r in 0..size {
        for c in 0..size {
            let want = if r == c { 1.0 } else { 0.0 };
            residual = residual.max((gram[(r, c)] - want).abs());
        }
    }
    if residual > ORTHO_RESIDUAL_CAP {
        return Err(Error::Verification(format!(
            "orthogonality residual {residual:.3e} exceeds {ORTHO_RESIDUAL_CAP:.1e} at n = {n}"
        )));
    }
    Ok(m)
}
