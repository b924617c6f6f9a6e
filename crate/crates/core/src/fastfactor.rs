//! Sparse factorizations of the dense transform matrices.
//!
//! A [`FactorPlan`] is an ordered list of sparse factors whose product (in
//! listed order, applied right-to-left to a signal) equals the model's
//! dense Fourier matrix. Two synthesis routes are provided:
//!
//! - [`factor_bottom_up`]: induction step. F_n = D · (1_w ⊗ F_m) · B where
//!   D routes each variety point to its image under the subalgebra map and
//!   scales by the transversal elements, and B rewrites the module basis
//!   into transversal × sub-basis products.
//! - [`factor_top_down`]: decomposition step. F_n = P · blkdiag(F̄_i) · T · B
//!   where the variety splits along the zeros of a quotient algebra, the
//!   blocks are skew transforms on the sub-varieties, and T is the
//!   pseudo-tensor of the quotient transform.
//!
//! [`recursive_plan`] chains bottom-up steps to full O(n log n)-style
//! plans where the sub-blocks are again plain transforms of the same
//! family. [`basischange_a2`] / [`basischange_c2`] build the explicit
//! closed-form basis-change matrices for the n = 2m Chebyshev models;
//! they are cross-checked against evaluation by [`appendix_eval_error`].

use crate::chebyshev::ChebTable;
use crate::models::{
    fourier_dense, json_f64, model_a2, model_c2, model_hex, unit_fraction, POINT_MATCH_TOL,
};
use crate::polycore::poly_eval;
use crate::weyl::RootKind;
use crate::{C64, Error, SignalModel, VarietyPoint};
use nalgebra::DMatrix;
use std::collections::HashMap;

/// Entries below this magnitude are dropped when building sparse matrices.
pub const SPARSE_PRUNE: f64 = 1e-14;
/// Relative prune threshold for basis-change factors obtained by solving.
const SOLVE_PRUNE: f64 = 1e-12;

/// Structural role of a factor inside a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRole {
    Permutation,
    BasisChange,
    BlockDiagFourier,
    RoutingScaled,
    BlockT,
    Diag,
}

impl FactorRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactorRole::Permutation => "permutation",
            FactorRole::BasisChange => "basis_change",
            FactorRole::BlockDiagFourier => "block_diag_fourier",
            FactorRole::RoutingScaled => "routing_scaled",
            FactorRole::BlockT => "block_T",
            FactorRole::Diag => "diag",
        }
    }
}

/// COO sparse matrix with sorted, deduplicated, pruned triples.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// (row, col, value), sorted by (row, col), no duplicates, no entries
    /// below [`SPARSE_PRUNE`].
    pub triples: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize, mut triples: Vec<(usize, usize, C64)>) -> Self {
        triples.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triples.len());
        for (r, c, v) in triples {
            assert!(r < nrows && c < ncols, "triple out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v.norm() >= SPARSE_PRUNE);
        SparseMatrix { nrows, ncols, triples: merged }
    }

    pub fn identity(n: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        SparseMatrix::new(n, n, (0..n).map(|i| (i, i, one)).collect())
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut triples = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                triples.push((r, c, m[(r, c)]));
            }
        }
        SparseMatrix::new(m.nrows(), m.ncols(), triples)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.triples {
            out[(r, c)] = v;
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.triples.len()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        for &(r, c, v) in &self.triples {
            out[r] += v * x[c];
        }
        out
    }

    pub fn mul_dense(&self, rhs: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(self.ncols, rhs.nrows());
        let mut out = DMatrix::zeros(self.nrows, rhs.ncols());
        for &(r, c, v) in &self.triples {
            for j in 0..rhs.ncols() {
                out[(r, j)] += v * rhs[(c, j)];
            }
        }
        out
    }

    pub fn mul_sparse(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows);
        let mut rhs_rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); rhs.nrows];
        for &(r, c, v) in &rhs.triples {
            rhs_rows[r].push((c, v));
        }
        let mut triples = Vec::new();
        for &(r, k, v) in &self.triples {
            for &(c, w) in &rhs_rows[k] {
                triples.push((r, c, v * w));
            }
        }
        SparseMatrix::new(self.nrows, rhs.ncols, triples)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[SparseMatrix]) -> Self {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut triples = Vec::with_capacity(blocks.iter().map(|b| b.nnz()).sum());
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for &(r, c, v) in &b.triples {
                triples.push((ro + r, co + c, v));
            }
            ro += b.nrows;
            co += b.ncols;
        }
        SparseMatrix::new(nrows, ncols, triples)
    }

    /// True if the matrix has exactly one entry per row and per column,
    /// each equal to 1.
    pub fn is_permutation(&self) -> bool {
        if self.nrows != self.ncols || self.triples.len() != self.nrows {
            return false;
        }
        let mut cols = vec![false; self.ncols];
        for &(_, c, v) in &self.triples {
            if (v - C64::new(1.0, 0.0)).norm() > 0.0 || cols[c] {
                return false;
            }
            cols[c] = true;
        }
        true
    }

    /// Largest number of nonzeros in any row.
    pub fn max_row_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.nrows];
        for &(r, _, _) in &self.triples {
            counts[r] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }
}

/// An ordered factorization F = factors[0] · factors[1] · … .
#[derive(Debug, Clone)]
pub struct FactorPlan {
    pub model: String,
    pub n: usize,
    pub factors: Vec<(FactorRole, SparseMatrix)>,
}

impl FactorPlan {
    pub fn to_dense(&self) -> DMatrix<C64> {
        let last = self.factors.last().expect("plan has at least one factor");
        let mut acc = last.1.to_dense();
        for (_, f) in self.factors.iter().rev().skip(1) {
            acc = f.mul_dense(&acc);
        }
        acc
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        for (_, f) in self.factors.iter().rev() {
            v = f.apply(&v);
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.factors.iter().map(|(_, f)| f.nnz()).sum()
    }

    /// JSON export: {model, n, factors: [{role, shape, coo: [[r,c,re,im],…]}]}.
    pub fn to_json(&self) -> String {
        let mut out = format!("{{\"model\":\"{}\",\"n\":{},\"factors\":[", self.model, self.n);
        for (i, (role, f)) in self.factors.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"role\":\"{}\",\"shape\":[{},{}],\"coo\":[",
                role.as_str(),
                f.nrows,
                f.ncols
            ));
            for (j, &(r, c, v)) in f.triples.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("[{},{},{},{}]", r, c, json_f64(v.re), json_f64(v.im)));
            }
            out.push_str("]}");
        }
        out.push_str("]}");
        out
    }
}

/// Result of checking a plan against the dense matrix.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub max_abs_error: f64,
    pub rel_error: f64,
    pub nnz_total: usize,
    pub nnz_per_factor: Vec<usize>,
    /// Nonzeros of the dense matrix, for comparison.
    pub naive_nnz: usize,
}

/// Multiply the plan out and compare against the dense matrix entrywise.
pub fn verify_plan(plan: &FactorPlan, dense: &DMatrix<C64>) -> VerifyReport {
    let prod = plan.to_dense();
    assert_eq!(prod.nrows(), dense.nrows());
    assert_eq!(prod.ncols(), dense.ncols());
    let mut max_abs = 0.0f64;
    let mut dense_max = 0.0f64;
    let mut naive = 0usize;
    for r in 0..dense.nrows() {
        for c in 0..dense.ncols() {
            max_abs = max_abs.max((prod[(r, c)] - dense[(r, c)]).norm());
            dense_max = dense_max.max(dense[(r, c)].norm());
            if dense[(r, c)].norm() >= SPARSE_PRUNE {
                naive += 1;
            }
        }
    }
    VerifyReport {
        max_abs_error: max_abs,
        rel_error: if dense_max > 0.0 { max_abs / dense_max } else { max_abs },
        nnz_total: plan.nnz(),
        nnz_per_factor: plan.factors.iter().map(|(_, f)| f.nnz()).collect(),
        naive_nnz: naive,
    }
}

/// Index of the unique variety point within [`POINT_MATCH_TOL`] of `target`.
fn match_point(points: &[VarietyPoint], target: &[C64]) -> Result<usize, Error> {
    let mut hit = None;
    for (i, p) in points.iter().enumerate() {
        let d = p
            .xcoords
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if d < POINT_MATCH_TOL {
            if hit.is_some() {
                return Err(Error::Verification("point match is not unique".into()));
            }
            hit = Some(i);
        }
    }
    hit.ok_or_else(|| Error::Verification("no sub-variety point matches".into()))
}

/// Dense DFT_m as a sparse factor, entry-exact at quarter turns.
fn dft_sparse(m: usize) -> SparseMatrix {
    let mut triples = Vec::with_capacity(m * m);
    for j in 0..m as i64 {
        for k in 0..m as i64 {
            triples.push((j as usize, k as usize, unit_fraction(-j * k, m as i64)));
        }
    }
    SparseMatrix::new(m, m, triples)
}

fn solve_basis_change(
    rest: &[&SparseMatrix],
    dense: &DMatrix<C64>,
) -> Result<SparseMatrix, Error> {
    let mut acc = rest.last().unwrap().to_dense();
    for f in rest.iter().rev().skip(1) {
        acc = f.mul_dense(&acc);
    }
    let b = acc
        .lu()
        .solve(dense)
        .ok_or_else(|| Error::Verification("plan prefix is singular; cannot solve for the basis change".into()))?;
    let scale = b.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let mut triples = Vec::new();
    for r in 0..b.nrows() {
        for c in 0..b.ncols() {
            if b[(r, c)].norm() >= SOLVE_PRUNE * scale {
                triples.push((r, c, b[(r, c)]));
            }
        }
    }
    Ok(SparseMatrix::new(b.nrows(), b.ncols(), triples))
}

fn bottom_up_dft(n: usize, r: usize) -> Result<FactorPlan, Error> {
    if r < 2 || n % r != 0 {
        return Err(Error::Validation(format!("bottom-up dft needs r ≥ 2 dividing n, got n={n}, r={r}")));
    }
    let m = n / r;
    let one = C64::new(1.0, 0.0);
    // D: row j picks column t·m + (j mod m) with weight α_j^t
    let mut d_triples = Vec::new();
    for j in 0..n {
        for t in 0..r {
            d_triples.push((j, t * m + j % m, unit_fraction(-((j * t) as i64), n as i64)));
        }
    }
    let routing = SparseMatrix::new(n, n, d_triples);
    let middle = SparseMatrix::direct_sum(&vec![dft_sparse(m); r]);
    // B: basis x^{t + r·a} goes to slot t·m + a
    let mut b_triples = Vec::new();
    for t in 0..r {
        for a in 0..m {
            b_triples.push((t * m + a, t + r * a, one));
        }
    }
    let basis = SparseMatrix::new(n, n, b_triples);
    Ok(FactorPlan {
        model: "dft".into(),
        n,
        factors: vec![
            (FactorRole::RoutingScaled, routing),
            (FactorRole::BlockDiagFourier, middle),
            (FactorRole::Permutation, basis),
        ],
    })
}

fn bottom_up_hex(model: &SignalModel) -> Result<FactorPlan, Error> {
    let nn = model.n;
    if nn % 4 != 0 {
        return Err(Error::Validation(format!("bottom-up hex needs N divisible by 4, got {nn}")));
    }
    let sub = model_hex(nn / 2);
    let subsize = sub.variety.len();
    let size = model.variety.len();
    let one = C64::new(1.0, 0.0);
    // transversal 1, x², xy, x⁻¹y as (u, v) exponents in (x, y)
    let trans: [(i64, i64); 4] = [(0, 0), (2, 0), (1, 1), (-1, 1)];
    let mut d_triples = Vec::new();
    for (rho, p) in model.variety.iter().enumerate() {
        let (k1, k2) = (p.label[0], p.label[1]);
        // character-level routing: sub-point (κ1, κ2) is the unique label
        // with (2m1−m2)(2κ1−κ2) + 3m2κ2 ≡ (2m1−m2)(2k1−k2) + 3m2k2
        // (mod 3N) for every sub-basis label (m1, m2)
        let half = nn as i64 / 2;
        let (kap1, kap2) = if k2 < half {
            (k1.rem_euclid(3 * half), k2)
        } else {
            ((k1 + half).rem_euclid(3 * half), k2 - half)
        };
        let sigma = (kap1 * half + kap2) as usize;
        debug_assert_eq!(sub.variety[sigma].label, vec![kap1, kap2]);
        for (t_idx, &(u, v)) in trans.iter().enumerate() {
            let val = unit_fraction(-(u * (2 * k1 - k2) + 3 * v * k2), 6 * nn as i64);
            d_triples.push((rho, t_idx * subsize + sigma, val));
        }
    }
    let routing = SparseMatrix::new(size, 4 * subsize, d_triples);
    let sub_f = SparseMatrix::from_dense(&fourier_dense(&sub));
    let middle = SparseMatrix::direct_sum(&vec![sub_f; 4]);
    // B: x^{2n₁−n₂}y^{n₂} = t_u · (x²)^{2m₁−m₂}(y²)^{m₂} with the
    // transversal element picked by the parities of (n₁, n₂)
    let mut b_triples = Vec::new();
    for n1 in 0..3 * nn {
        for n2 in 0..nn {
            let t_idx = match (n1 % 2, n2 % 2) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            };
            let new = t_idx * subsize + (n1 / 2) * (nn / 2) + n2 / 2;
            b_triples.push((new, n1 * nn + n2, one));
        }
    }
    let basis = SparseMatrix::new(4 * subsize, size, b_triples);
    Ok(FactorPlan {
        model: "hex".into(),
        n: nn,
        factors: vec![
            (FactorRole::RoutingScaled, routing),
            (FactorRole::BlockDiagFourier, middle),
            (FactorRole::Permutation, basis),
        ],
    })
}

/// Pieces of the A2 induction step, reused by the recursive planner.
struct A2Split {
    routing: SparseMatrix,
    sub: SignalModel,
    basis: SparseMatrix,
}

/// Expansion of T_{k,ℓ} in the induced products T_{t,p}·T_{ra,rb}
/// (t,p < r): peel the residue (t,p) = (k,ℓ) mod r off with the orbit
/// product identity T_μT_λ = (1/|W|) Σ_w T_{dom(λ+wμ)} and recurse on the
/// remainder terms, which all have strictly smaller coordinate sum.
/// Returns (coefficient, transversal label, sub-basis label) triples.
fn a2_product_rewrite(
    data: &crate::weyl::RootSystemData,
    r: i64,
    kk: i64,
    ll: i64,
    memo: &mut HashMap<(i64, i64), Vec<(f64, (i64, i64), (i64, i64))>>,
) -> Vec<(f64, (i64, i64), (i64, i64))> {
    if let Some(hit) = memo.get(&(kk, ll)) {
        return hit.clone();
    }
    let (t, p) = (kk % r, ll % r);
    let lam = (kk - t, ll - p);
    let result = if t == 0 && p == 0 {
        vec![(1.0, (0, 0), (kk / r, ll / r))]
    } else if lam == (0, 0) {
        vec![(1.0, (kk, ll), (0, 0))]
    } else {
        let mut counts: HashMap<(i64, i64), usize> = HashMap::new();
        for nu in data.orbit(&[t, p]) {
            let dom = data.normalize_dominant(&[lam.0 + nu[0], lam.1 + nu[1]]);
            *counts.entry((dom[0], dom[1])).or_insert(0) += 1;
        }
        let ct = counts.remove(&(kk, ll)).expect("leading term present") as f64;
        let w = data.weyl_elements().len() as f64;
        let mut terms = vec![(w / ct, (t, p), (lam.0 / r, lam.1 / r))];
        for ((k2, l2), c) in counts {
            debug_assert!(k2 + l2 < kk + ll, "rewrite must descend");
            for (co, tp, ab) in a2_product_rewrite(data, r, k2, l2, memo) {
                terms.push((-(c as f64) / ct * co, tp, ab));
            }
        }
        let mut merged: HashMap<((i64, i64), (i64, i64)), f64> = HashMap::new();
        for (co, tp, ab) in terms {
            *merged.entry((tp, ab)).or_insert(0.0) += co;
        }
        let mut out: Vec<_> = merged
            .into_iter()
            .filter(|&(_, co)| co.abs() > 1e-12)
            .map(|((tp, ab), co)| (co, tp, ab))
            .collect();
        out.sort_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)));
        out
    };
    memo.insert((kk, ll), result.clone());
    result
}

/// Reduce T_{a,b} into the m-level basis {T_{a',b'} : a',b' < m} modulo
/// ⟨T_{m,0}, T_{0,m}⟩: expanding 0 = T_λ·T_{m,0} (or ·T_{0,m}) by the orbit
/// product identity isolates the out-of-range leading term.
fn a2_mod_reduce(
    data: &crate::weyl::RootSystemData,
    m: i64,
    a: i64,
    b: i64,
    memo: &mut HashMap<(i64, i64), Vec<(f64, (i64, i64))>>,
) -> Vec<(f64, (i64, i64))> {
    if a < m && b < m {
        return vec![(1.0, (a, b))];
    }
    if let Some(hit) = memo.get(&(a, b)) {
        return hit.clone();
    }
    let (lam, mu) = if a >= m { ((a - m, b), [m, 0]) } else { ((a, b - m), [0, m]) };
    let mut counts: HashMap<(i64, i64), usize> = HashMap::new();
    for nu in data.orbit(&mu) {
        let dom = data.normalize_dominant(&[lam.0 + nu[0], lam.1 + nu[1]]);
        *counts.entry((dom[0], dom[1])).or_insert(0) += 1;
    }
    let ct = counts.remove(&(a, b)).expect("leading term present") as f64;
    let mut terms = Vec::new();
    for ((a2, b2), c) in counts {
        debug_assert!(a2 + b2 < a + b, "reduction must descend");
        for (co, s) in a2_mod_reduce(data, m, a2, b2, memo) {
            terms.push((-(c as f64) / ct * co, s));
        }
    }
    let mut merged: HashMap<(i64, i64), f64> = HashMap::new();
    for (co, s) in terms {
        *merged.entry(s).or_insert(0.0) += co;
    }
    let mut out: Vec<_> = merged
        .into_iter()
        .filter(|&(_, co)| co.abs() > 1e-12)
        .map(|(s, co)| (co, s))
        .collect();
    out.sort_by(|x, y| x.1.cmp(&y.1));
    memo.insert((a, b), out.clone());
    out
}

/// Exact basis change for the induction split at n = rm: column (k,ℓ) of
/// the old basis expanded in products T_{t,p}·T_{a,b}(T_{r,0}, T_{0,r}),
/// with out-of-range sub-labels reduced modulo the sub-model's ideal.
fn a2_split_basis_change(n: usize, r: usize) -> SparseMatrix {
    let data = crate::weyl::RootSystemData::new(RootKind::A2);
    let m = n / r;
    let subsize = m * m;
    let mut memo = HashMap::new();
    let mut redmemo = HashMap::new();
    let mut triples = Vec::new();
    for k in 0..n as i64 {
        for l in 0..n as i64 {
            let col = k as usize * n + l as usize;
            for (co, (t, p), (a, b)) in a2_product_rewrite(&data, r as i64, k, l, &mut memo) {
                for (co2, (ra, rb)) in a2_mod_reduce(&data, m as i64, a, b, &mut redmemo) {
                    let row =
                        (t as usize * r + p as usize) * subsize + ra as usize * m + rb as usize;
                    triples.push((row, col, C64::new(co * co2, 0.0)));
                }
            }
        }
    }
    SparseMatrix::new(n * n, n * n, triples)
}

fn a2_split(model: &SignalModel, r: usize) -> Result<A2Split, Error> {
    let n = model.n;
    if r < 2 || n % r != 0 {
        return Err(Error::Validation(format!("bottom-up a2 needs r ≥ 2 dividing n, got n={n}, r={r}")));
    }
    let m = n / r;
    let sub = model_a2(m);
    let subsize = m * m;
    let size = n * n;
    let mut table = ChebTable::new(RootKind::A2);
    let trans: Vec<_> = (0..r as i64)
        .flat_map(|t| (0..r as i64).map(move |p| (t, p)))
        .map(|(t, p)| table.poly(&[t, p]))
        .collect();
    let rp1 = table.poly(&[r as i64, 0]);
    let rp2 = table.poly(&[0, r as i64]);
    let mut d_triples = Vec::new();
    let mut hits = vec![0usize; subsize];
    for (rho, p) in model.variety.iter().enumerate() {
        let image = [poly_eval(&rp1, &p.xcoords), poly_eval(&rp2, &p.xcoords)];
        let sigma = match_point(&sub.variety, &image)?;
        hits[sigma] += 1;
        for (t_idx, tp) in trans.iter().enumerate() {
            let val = poly_eval(tp, &p.xcoords);
            if val.norm() >= SPARSE_PRUNE {
                d_triples.push((rho, t_idx * subsize + sigma, val));
            }
        }
    }
    if hits.iter().any(|&h| h != r * r) {
        return Err(Error::Verification("subalgebra map is not an (r²)-fold cover of the sub-variety".into()));
    }
    let routing = SparseMatrix::new(size, r * r * subsize, d_triples);
    let basis = a2_split_basis_change(n, r);
    Ok(A2Split { routing, sub, basis })
}

fn bottom_up_a2(model: &SignalModel, r: usize) -> Result<FactorPlan, Error> {
    let split = a2_split(model, r)?;
    let middle = SparseMatrix::direct_sum(&vec![
        SparseMatrix::from_dense(&fourier_dense(&split.sub));
        r * r
    ]);
    Ok(FactorPlan {
        model: "a2".into(),
        n: model.n,
        factors: vec![
            (FactorRole::RoutingScaled, split.routing),
            (FactorRole::BlockDiagFourier, middle),
            (FactorRole::BasisChange, split.basis),
        ],
    })
}

/// Induction step F_n = D · (1_w ⊗ F_m) · B.
///
/// `r` is the subalgebra index: the sub-model has parameter n/r (for the
/// hexagonal model `r` must be 2 and the sub-model lives at N/2).
pub fn factor_bottom_up(model: &SignalModel, r: usize) -> Result<FactorPlan, Error> {
    match model.name.as_str() {
        "dft" => bottom_up_dft(model.n, r),
        "hex" => {
            if r != 2 {
                return Err(Error::Validation("bottom-up hex supports r = 2 only".into()));
            }
            bottom_up_hex(model)
        }
        "a2" => bottom_up_a2(model, r),
        other => Err(Error::Unsupported(format!("bottom-up factorization for model '{other}'"))),
    }
}

fn top_down_dft(n: usize, r: usize) -> Result<FactorPlan, Error> {
    if r < 2 || n % r != 0 {
        return Err(Error::Validation(format!("top-down dft needs r ≥ 2 dividing n, got n={n}, r={r}")));
    }
    let m = n / r;
    let one = C64::new(1.0, 0.0);
    // block j carries the points ζ_n^{j+rk}; the model lists α_i = ζ_n^{−i}
    let mut p_triples = Vec::new();
    let mut blk_triples = Vec::new();
    for j in 0..r {
        for k in 0..m {
            let row = (-((j + r * k) as i64)).rem_euclid(n as i64) as usize;
            p_triples.push((row, j * m + k, one));
            for s in 0..m {
                blk_triples.push((j * m + k, j * m + s, unit_fraction(((j + r * k) * s) as i64, n as i64)));
            }
        }
    }
    let perm = SparseMatrix::new(n, n, p_triples);
    let blocks = SparseMatrix::new(n, n, blk_triples);
    // T: pseudo-tensor DFT_r ⊗ 1_m
    let mut t_triples = Vec::new();
    for i in 0..r {
        for j in 0..r {
            let c = unit_fraction((i * j) as i64, r as i64);
            for k in 0..m {
                t_triples.push((i * m + k, j * m + k, c));
            }
        }
    }
    let tensor = SparseMatrix::new(n, n, t_triples);
    Ok(FactorPlan {
        model: "dft".into(),
        n,
        factors: vec![
            (FactorRole::Permutation, perm),
            (FactorRole::BlockDiagFourier, blocks),
            (FactorRole::BlockT, tensor),
            (FactorRole::BasisChange, SparseMatrix::identity(n)),
        ],
    })
}

fn top_down_cheb(model: &SignalModel) -> Result<FactorPlan, Error> {
    let n = model.n;
    if n % 2 != 0 {
        return Err(Error::Validation(format!("top-down step needs even n, got {n}")));
    }
    let m = n / 2;
    let kind = match model.name.as_str() {
        "a2" => RootKind::A2,
        "c2" => RootKind::C2,
        other => return Err(Error::Unsupported(format!("top-down factorization for model '{other}'"))),
    };
    let q = match kind {
        RootKind::A2 => model_a2(2),
        _ => model_c2(2),
    };
    let mut table = ChebTable::new(kind);
    let rp1 = table.poly(&[m as i64, 0]);
    let rp2 = table.poly(&[0, m as i64]);
    // route every variety point to a zero of the quotient algebra
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); q.variety.len()];
    for (rho, p) in model.variety.iter().enumerate() {
        let image = [poly_eval(&rp1, &p.xcoords), poly_eval(&rp2, &p.xcoords)];
        let qi = match_point(&q.variety, &image)?;
        groups[qi].push(rho);
    }
    // blocks ordered by ascending dimension, ties by quotient-zero label
    let mut block_order: Vec<usize> = (0..q.variety.len()).collect();
    block_order.sort_by_key(|&i| (groups[i].len(), q.variety[i].label.clone()));
    // per-block sub-basis
    let sub_labels: Vec<Vec<Vec<i64>>> = match kind {
        RootKind::A2 => {
            let square: Vec<Vec<i64>> = (0..m as i64)
                .flat_map(|k| (0..m as i64).map(move |l| vec![k, l]))
                .collect();
            block_order.iter().map(|_| square.clone()).collect()
        }
        _ => {
            let triangle = crate::models::c2_basis_labels(m);
            let mut square = triangle.clone();
            let mut rest: Vec<Vec<i64>> = (0..m as i64)
                .flat_map(|k| (0..m as i64).map(move |l| vec![k, l]))
                .filter(|kl| kl[0] + kl[1] >= m as i64)
                .collect();
            rest.sort_by_key(|kl| (kl[0] + 2 * kl[1], kl[0], kl[1]));
            square.extend(rest);
            block_order
                .iter()
                .map(|&qi| {
                    if groups[qi].len() == triangle.len() {
                        triangle.clone()
                    } else {
                        square.clone()
                    }
                })
                .collect()
        }
    };
    let dims: Vec<usize> = block_order.iter().map(|&qi| groups[qi].len()).collect();
    for (d, labels) in dims.iter().zip(&sub_labels) {
        if *d != labels.len() {
            return Err(Error::Verification("block dimension does not match its sub-basis size".into()));
        }
    }
    let total: usize = dims.iter().sum();
    if total != model.variety.len() {
        return Err(Error::Verification("blocks do not partition the variety".into()));
    }
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0usize, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    // quotient basis values at the quotient zeros; when the blocks have
    // unequal dimensions the basis element paired with a wide block is
    // shifted to vanish at the narrow blocks' zeros (keeps the truncated
    // pseudo-tensor exact)
    let all_equal = dims.iter().all(|&d| d == dims[0]);
    let nblocks = block_order.len();
    let mut cmat = DMatrix::<C64>::zeros(nblocks, nblocks);
    for (bi, &qi) in block_order.iter().enumerate() {
        for (bj, _) in block_order.iter().enumerate() {
            cmat[(bi, bj)] = match kind {
                RootKind::A2 => poly_eval(&q.basis[bj], &q.variety[qi].xcoords),
                _ => {
                    // quotient basis 1, x₁, x₂ (last shifted when needed)
                    let x = &q.variety[qi].xcoords;
                    match bj {
                        0 => C64::new(1.0, 0.0),
                        1 => x[0],
                        _ => {
                            if all_equal {
                                x[1]
                            } else {
                                let narrow = block_order
                                    .iter()
                                    .find(|&&b| groups[b].len() == dims[0])
                                    .unwrap();
                                x[1] - q.variety[*narrow].xcoords[1]
                            }
                        }
                    }
                }
            };
        }
    }
    // P: permute stacked block rows back to variety order
    let one = C64::new(1.0, 0.0);
    let mut p_triples = Vec::new();
    for (bi, &qi) in block_order.iter().enumerate() {
        for (pos, &rho) in groups[qi].iter().enumerate() {
            p_triples.push((rho, offsets[bi] + pos, one));
        }
    }
    let perm = SparseMatrix::new(total, total, p_triples);
    // blkdiag: skew transforms, sub-basis evaluated on each sub-variety
    let mut blk_triples = Vec::new();
    for (bi, &qi) in block_order.iter().enumerate() {
        let polys: Vec<_> = sub_labels[bi].iter().map(|kl| table.poly(kl)).collect();
        for (pos, &rho) in groups[qi].iter().enumerate() {
            for (s, poly) in polys.iter().enumerate() {
                let v = poly_eval(poly, &model.variety[rho].xcoords);
                blk_triples.push((offsets[bi] + pos, offsets[bi] + s, v));
            }
        }
    }
    let blocks = SparseMatrix::new(total, total, blk_triples);
    // T: c_{ij} times a truncated identity
    let mut t_triples = Vec::new();
    for bi in 0..nblocks {
        for bj in 0..nblocks {
            let c = cmat[(bi, bj)];
            if c.norm() < SPARSE_PRUNE {
                continue;
            }
            for s in 0..dims[bi].min(dims[bj]) {
                t_triples.push((offsets[bi] + s, offsets[bj] + s, c));
            }
        }
    }
    let tensor = SparseMatrix::new(total, total, t_triples);
    let dense = fourier_dense(model);
    let basis = solve_basis_change(&[&perm, &blocks, &tensor], &dense)?;
    Ok(FactorPlan {
        model: model.name.clone(),
        n,
        factors: vec![
            (FactorRole::Permutation, perm),
            (FactorRole::BlockDiagFourier, blocks),
            (FactorRole::BlockT, tensor),
            (FactorRole::BasisChange, basis),
        ],
    })
}

/// Decomposition step F_n = P · blkdiag(F̄_i) · T · B.
///
/// For the DFT `r` picks the quotient ⟨x^r − 1⟩; the Chebyshev models use
/// the level-2 quotient (n = 2m) and ignore `r`.
pub fn factor_top_down(model: &SignalModel, r: usize) -> Result<FactorPlan, Error> {
    match model.name.as_str() {
        "dft" => top_down_dft(model.n, r),
        "a2" | "c2" => top_down_cheb(model),
        other => Err(Error::Unsupported(format!("top-down factorization for model '{other}'"))),
    }
}

fn rec_dft(n: usize) -> Result<Vec<(FactorRole, SparseMatrix)>, Error> {
    if n <= 2 {
        return Ok(vec![(FactorRole::BlockDiagFourier, dft_sparse(n))]);
    }
    let step = bottom_up_dft(n, 2)?;
    let mut factors = vec![step.factors[0].clone()];
    for (role, f) in rec_dft(n / 2)? {
        factors.push((role, SparseMatrix::direct_sum(&[f.clone(), f])));
    }
    factors.push(step.factors[2].clone());
    Ok(factors)
}

fn rec_a2(n: usize) -> Result<Vec<(FactorRole, SparseMatrix)>, Error> {
    if n == 1 {
        return Ok(vec![(
            FactorRole::BlockDiagFourier,
            SparseMatrix::from_dense(&fourier_dense(&model_a2(1))),
        )]);
    }
    let split = a2_split(&model_a2(n), 2)?;
    let mut factors = vec![(FactorRole::RoutingScaled, split.routing)];
    for (role, f) in rec_a2(n / 2)? {
        factors.push((role, SparseMatrix::direct_sum(&vec![f; 4])));
    }
    factors.push((FactorRole::BasisChange, split.basis));
    Ok(factors)
}

/// Collapse runs of adjacent permutation / basis-change factors into a
/// single factor. The level-doubling recursions leave one such factor per
/// level at the tail of the plan; their product is the composite reindexing
/// (for the DFT, the classic digit-reversal permutation), and keeping them
/// separate would inflate the nonzero count by a factor growing with depth.
fn merge_reindexing_factors(
    factors: Vec<(FactorRole, SparseMatrix)>,
) -> Vec<(FactorRole, SparseMatrix)> {
    let mergeable =
        |role: &FactorRole| matches!(role, FactorRole::Permutation | FactorRole::BasisChange);
    let is_identity = |f: &SparseMatrix| {
        f.nrows == f.ncols
            && f.nnz() == f.nrows
            && f.triples.iter().all(|&(r, c, v)| r == c && v == C64::new(1.0, 0.0))
    };
    // Identity factors (the base level of a recursion that bottoms out at a
    // 1-point model) carry no work; drop them unless nothing else is left.
    let keep: Vec<_> = if factors.iter().any(|(_, f)| !is_identity(f)) {
        factors.into_iter().filter(|(_, f)| !is_identity(f)).collect()
    } else {
        factors.into_iter().take(1).collect()
    };
    let mut out: Vec<(FactorRole, SparseMatrix)> = Vec::new();
    for (role, f) in keep {
        if let Some((prev_role, prev)) = out.last() {
            if mergeable(&role) && mergeable(prev_role) {
                let prod = prev.mul_sparse(&f);
                let merged_role = if prod.is_permutation() {
                    FactorRole::Permutation
                } else {
                    FactorRole::BasisChange
                };
                *out.last_mut().unwrap() = (merged_role, prod);
                continue;
            }
        }
        out.push((role, f));
    }
    out
}

/// Fully expanded plan: the induction step is applied at every level where
/// the sub-blocks are again plain transforms of the same family.
///
/// DFT and A2 require n a power of two. The C2 plan is a single
/// decomposition step: its sub-blocks are skew transforms, not plain
/// C2 transforms, so the recursion clause does not apply below the top
/// level.
pub fn recursive_plan(model: &SignalModel, _r: usize) -> Result<FactorPlan, Error> {
    match model.name.as_str() {
        "dft" => {
            if !model.n.is_power_of_two() {
                return Err(Error::Validation("recursive dft plan needs n = 2^k".into()));
            }
            Ok(FactorPlan {
                model: "dft".into(),
                n: model.n,
                factors: merge_reindexing_factors(rec_dft(model.n)?),
            })
        }
        "a2" => {
            if !model.n.is_power_of_two() {
                return Err(Error::Validation("recursive a2 plan needs n = 2^k".into()));
            }
            Ok(FactorPlan {
                model: "a2".into(),
                n: model.n,
                factors: merge_reindexing_factors(rec_a2(model.n)?),
            })
        }
        "c2" => factor_top_down(model, 2),
        other => Err(Error::Unsupported(format!("recursive plan for model '{other}'"))),
    }
}

/// Closed-form basis change for the level-doubling Chebyshev models.
///
/// Rewrites the 2m-level module basis into products
/// T_{a,b} · T_{t,p}(T_{m,0}, T_{0,m}). `row_terms[i]` gives the (inner,
/// outer) label pair of new-basis element i; the outer label is stored as
/// the actual weight (t·m, p·m). Columns follow the 2m-level model's basis
/// order, and `matrix[i, j]` is the coefficient of new element i in old
/// element j.
pub struct AppendixBasisChange {
    pub matrix: SparseMatrix,
    pub row_terms: Vec<(Vec<i64>, Vec<i64>)>,
}

// outer tags for the closed-form tables
const P_: (i64, i64) = (0, 0);
const U_: (i64, i64) = (1, 0);
const V_: (i64, i64) = (0, 1);
const UV: (i64, i64) = (1, 1);

fn a2_rewrite_terms(m: i64, kk: i64, ll: i64) -> Vec<(f64, (i64, i64), (i64, i64))> {
    if kk < m && ll < m {
        return vec![(1.0, (kk, ll), P_)];
    }
    if kk >= m && ll < m {
        let (k, l) = (kk - m, ll);
        return match (k, l) {
            (0, 0) => vec![(1.0, (0, 0), U_)],
            (k, 0) => vec![(-2.0, (m - k, k), P_), (3.0, (k, 0), U_)],
            (0, l) => vec![(-0.5, (m - l, 0), P_), (1.5, (0, l), U_)],
            (k, l) if k + l < m => vec![
                (-1.0, (m - k, k + l), P_),
                (-1.0, (m - k - l, k), P_),
                (3.0, (k, l), U_),
            ],
            (k, l) if k + l == m => vec![
                (-1.0, (0, k), P_),
                (0.5, (0, m - l), P_),
                (-1.5, (l, 0), V_),
                (3.0, (k, l), U_),
            ],
            (k, l) => vec![
                (1.0, (l, 2 * m - k - l), P_),
                (-3.0, (m - k, k + l - m), V_),
                (3.0, (k, l), U_),
            ],
        };
    }
    if kk < m {
        let (k, l) = (kk, ll - m);
        return match (k, l) {
            (0, 0) => vec![(1.0, (0, 0), V_)],
            (k, 0) => vec![(-0.5, (0, m - k), P_), (1.5, (k, 0), V_)],
            (0, l) => vec![(-2.0, (l, m - l), P_), (3.0, (0, l), V_)],
            (k, l) if k + l < m => vec![
                (-1.0, (l, m - k - l), P_),
                (-1.0, (k + l, m - l), P_),
                (3.0, (k, l), V_),
            ],
            (k, l) if k + l == m => vec![
                (-0.5, (l, 0), P_),
                (-1.5, (0, m - l), U_),
                (3.0, (k, l), V_),
            ],
            (k, l) => vec![
                (1.0, (2 * m - k - l, k), P_),
                (-3.0, (k + l - m, m - l), U_),
                (3.0, (k, l), V_),
            ],
        };
    }
    let (k, l) = (kk - m, ll - m);
    // terms weighted by T_{2m,0} or T_{0,2m} vanish modulo the 2m-level
    // ideal and are dropped
    match (k, l) {
        (0, 0) => vec![(1.0, (0, 0), UV)],
        (k, 0) => vec![(1.0, (k, 0), P_), (-3.0, (m - k, k), V_), (3.0, (k, 0), UV)],
        (0, l) => vec![(1.0, (0, l), P_), (-3.0, (l, m - l), U_), (3.0, (0, l), UV)],
        (k, l) if k + l < m => vec![
            (2.0, (k, l), P_),
            (-1.0, (m - l, m - k), P_),
            (-3.0, (m - k, k + l), V_),
            (-3.0, (k + l, m - l), U_),
            (6.0, (k, l), UV),
        ],
        (k, l) if k + l == m => vec![
            (1.0, (k, l), P_),
            (-1.5, (0, k), V_),
            (-1.5, (l, 0), U_),
            (6.0, (k, l), UV),
        ],
        (k, l) => vec![
            (-1.0, (m - l, m - k), P_),
            (2.0, (k, l), P_),
            (-3.0, (m - k, k + l - m), U_),
            (3.0, (l, 2 * m - k - l), V_),
            (3.0, (2 * m - k - l, k), U_),
            (-3.0, (k + l - m, m - l), V_),
            (6.0, (k, l), UV),
        ],
    }
}

/// Closed-form basis change for the A2 model at n = 2m.
pub fn basischange_a2(m: usize) -> AppendixBasisChange {
    let mi = m as i64;
    let inner: Vec<(i64, i64)> = (0..mi).flat_map(|a| (0..mi).map(move |b| (a, b))).collect();
    let outers = [P_, V_, U_, UV];
    let mut row_terms = Vec::new();
    let mut index = HashMap::new();
    for &(t, p) in &outers {
        for &(a, b) in &inner {
            index.insert(((a, b), (t, p)), row_terms.len());
            row_terms.push((vec![a, b], vec![t * mi, p * mi]));
        }
    }
    let size = 4 * m * m;
    let mut triples = Vec::new();
    let mut col = 0usize;
    for kk in 0..2 * mi {
        for ll in 0..2 * mi {
            for (coeff, inner_lbl, outer_lbl) in a2_rewrite_terms(mi, kk, ll) {
                let row = index[&(inner_lbl, outer_lbl)];
                triples.push((row, col, C64::new(coeff, 0.0)));
            }
            col += 1;
        }
    }
    AppendixBasisChange { matrix: SparseMatrix::new(size, size, triples), row_terms }
}

/// Rewrite the 2m-level element T_{kk,ll} over the products
/// T_{inner} · T_{outer·m}, using the exact orbit identity
/// T_λ·T_μ = (1/|W|) Σ_{w∈W} T_{dom(λ+wμ)}.
///
/// For kk ≥ m the element is the leading term of T_{kk−m,ll}·T_{m,0}
/// (the shifted index lies in the triangle since kk+ll < 2m), and the
/// remaining orbit terms are strictly smaller in dominance order, so the
/// recursion terminates; symmetrically for ll ≥ m with T_{0,m}. The orbit
/// multiplicities make the coefficients come out right at the alcove
/// walls (where several orbit terms coincide).
fn c2_rewrite_terms(
    data: &crate::weyl::RootSystemData,
    m: i64,
    kk: i64,
    ll: i64,
    memo: &mut HashMap<(i64, i64), Vec<(f64, (i64, i64), (i64, i64))>>,
) -> Vec<(f64, (i64, i64), (i64, i64))> {
    if let Some(hit) = memo.get(&(kk, ll)) {
        return hit.clone();
    }
    let result = if kk < m && ll < m {
        vec![(1.0, (kk, ll), P_)]
    } else {
        let (lam, mu, outer) = if kk >= m {
            ((kk - m, ll), [m, 0], U_)
        } else {
            ((kk, ll - m), [0, m], V_)
        };
        assert!(lam.0 + lam.1 < m, "shifted index must lie in the triangle");
        let mut counts: HashMap<(i64, i64), usize> = HashMap::new();
        for nu in data.orbit(&mu) {
            let dom = data.normalize_dominant(&[lam.0 + nu[0], lam.1 + nu[1]]);
            *counts.entry((dom[0], dom[1])).or_insert(0) += 1;
        }
        let ct = counts.remove(&(kk, ll)).expect("leading term present") as f64;
        let w = data.weyl_elements().len() as f64;
        let mut terms = vec![(w / ct, lam, outer)];
        for ((k2, l2), c) in counts {
            for (co, inner, out) in c2_rewrite_terms(data, m, k2, l2, memo) {
                terms.push((-(c as f64) / ct * co, inner, out));
            }
        }
        // merge duplicates
        let mut merged: HashMap<((i64, i64), (i64, i64)), f64> = HashMap::new();
        for (co, inner, out) in terms {
            *merged.entry((inner, out)).or_insert(0.0) += co;
        }
        let mut out: Vec<_> = merged
            .into_iter()
            .filter(|&(_, co)| co.abs() > 1e-12)
            .map(|((inner, outm), co)| (co, inner, outm))
            .collect();
        out.sort_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)));
        out
    };
    memo.insert((kk, ll), result.clone());
    result
}

/// Closed-form basis change for the C2 model at n = 2m.
///
/// New basis: the full m×m square of plain T_{a,b}, plus the triangle
/// {a+b < m} against each of T_{m,0} and T_{0,m} — together m(2m+1)
/// elements, matching the 2m-level module dimension.
pub fn basischange_c2(m: usize) -> AppendixBasisChange {
    let mi = m as i64;
    let mut square: Vec<(i64, i64)> = (0..mi).flat_map(|a| (0..mi).map(move |b| (a, b))).collect();
    square.sort_by_key(|&(a, b)| (a + 2 * b, a, b));
    let triangle: Vec<(i64, i64)> =
        crate::models::c2_basis_labels(m).iter().map(|kl| (kl[0], kl[1])).collect();
    let mut row_terms = Vec::new();
    let mut index = HashMap::new();
    for &(a, b) in &square {
        index.insert(((a, b), P_), row_terms.len());
        row_terms.push((vec![a, b], vec![0, 0]));
    }
    for &outer in &[U_, V_] {
        for &(a, b) in &triangle {
            index.insert(((a, b), outer), row_terms.len());
            row_terms.push((vec![a, b], vec![outer.0 * mi, outer.1 * mi]));
        }
    }
    let old_labels = crate::models::c2_basis_labels(2 * m);
    let size = old_labels.len();
    assert_eq!(size, row_terms.len());
    let data = crate::weyl::RootSystemData::new(RootKind::C2);
    let mut memo = HashMap::new();
    let mut triples = Vec::new();
    for (col, kl) in old_labels.iter().enumerate() {
        for (coeff, inner_lbl, outer_lbl) in c2_rewrite_terms(&data, mi, kl[0], kl[1], &mut memo) {
            let row = index[&(inner_lbl, outer_lbl)];
            triples.push((row, col, C64::new(coeff, 0.0)));
        }
    }
    AppendixBasisChange { matrix: SparseMatrix::new(size, size, triples), row_terms }
}

/// Cross-check a closed-form basis change by evaluation: every old basis
/// element must agree with its rewrite at every variety point of the
/// 2m-level model. Returns the largest absolute deviation.
pub fn appendix_eval_error(kind: RootKind, m: usize) -> f64 {
    let (model, bc) = match kind {
        RootKind::A2 => (model_a2(2 * m), basischange_a2(m)),
        RootKind::C2 => (model_c2(2 * m), basischange_c2(m)),
        RootKind::A1 => panic!("no closed-form basis change for A1"),
    };
    let mut table = ChebTable::new(kind);
    let row_values: Vec<Vec<C64>> = bc
        .row_terms
        .iter()
        .map(|(inner, outer)| {
            let pi = table.poly(inner);
            let po = table.poly(outer);
            model
                .variety
                .iter()
                .map(|p| poly_eval(&pi, &p.xcoords) * poly_eval(&po, &p.xcoords))
                .collect()
        })
        .collect();
    let dense = fourier_dense(&model);
    let mut err = 0.0f64;
    let mut rhs = DMatrix::<C64>::zeros(model.variety.len(), model.basis.len());
    for &(row, col, v) in &bc.matrix.triples {
        for (rho, val) in row_values[row].iter().enumerate() {
            rhs[(rho, col)] += v * val;
        }
    }
    for rho in 0..model.variety.len() {
        for col in 0..model.basis.len() {
            err = err.max((rhs[(rho, col)] - dense[(rho, col)]).norm());
        }
    }
    err
}
