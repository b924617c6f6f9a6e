//! Sparse multivariate polynomial arithmetic over ℂ.
//!
//! Polynomials are maps from exponent multi-indices to complex
//! coefficients. Coefficients with magnitude below [`PRUNE_THRESHOLD`] are
//! dropped after every arithmetic operation: the recurrences feeding this
//! module produce exact dyadic/triadic rationals, so genuine coefficients
//! never get that small.

use crate::C64;
use std::collections::BTreeMap;
use std::fmt;

/// Absolute coefficient prune threshold.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Sparse multivariate polynomial with complex coefficients.
///
/// Invariants: every stored coefficient has magnitude ≥ [`PRUNE_THRESHOLD`]
/// and every exponent vector has length `nvars`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    /// exponent multi-index -> coefficient
    pub terms: BTreeMap<Vec<u32>, C64>,
    pub nvars: usize,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { terms: BTreeMap::new(), nvars }
    }

    pub fn constant(c: C64, nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(C64::new(1.0, 0.0), nvars)
    }

    /// The monomial x_i (0-based variable index).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exps, C64::new(1.0, 0.0));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Add `coeff`·x^exps, pruning if the result falls below threshold.
    pub fn add_term(&mut self, exps: Vec<u32>, coeff: C64) {
        assert_eq!(exps.len(), self.nvars, "exponent length mismatch");
        let entry = self.terms.entry(exps.clone()).or_insert(C64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm() < PRUNE_THRESHOLD {
            self.terms.remove(&exps);
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (e, v) in &other.terms {
            out.add_term(e.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Drop terms whose imaginary part is negligible noise (used for models
    /// that are real by construction).
    pub fn realify(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            let v = if v.im.abs() < tol { C64::new(v.re, 0.0) } else { *v };
            out.add_term(e.clone(), v);
        }
        out
    }
}

/// Distributive product. Panics on variable-count mismatch.
pub fn poly_mul(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    assert_eq!(a.nvars, b.nvars, "variable count mismatch");
    let mut out = MultiPoly::zero(a.nvars);
    for (ea, va) in &a.terms {
        for (eb, vb) in &b.terms {
            let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            out.add_term(exps, va * vb);
        }
    }
    out
}

/// Term-wise partial derivative with respect to variable i.
pub fn poly_diff(p: &MultiPoly, i: usize) -> MultiPoly {
    assert!(i < p.nvars, "variable index out of range");
    let mut out = MultiPoly::zero(p.nvars);
    for (exps, coeff) in &p.terms {
        if exps[i] == 0 {
            continue;
        }
        let mut e = exps.clone();
        e[i] -= 1;
        out.add_term(e, coeff * C64::new(exps[i] as f64, 0.0));
    }
    out
}

/// Evaluate at a point. Terms are summed in the (deterministic) sorted
/// order of their exponent vectors. Panics on dimension mismatch.
pub fn poly_eval(p: &MultiPoly, point: &[C64]) -> C64 {
    assert_eq!(point.len(), p.nvars, "dimension mismatch");
    let mut acc = C64::new(0.0, 0.0);
    for (exps, coeff) in &p.terms {
        let mut m = *coeff;
        for (x, &e) in point.iter().zip(exps) {
            if e > 0 {
                m *= x.powu(e);
            }
        }
        acc += m;
    }
    acc
}

/// Substitute `subs[i]` for variable i. All substitutes must share one
/// variable count. Powers of the substitutes are memoized per call.
pub fn poly_compose(p: &MultiPoly, subs: &[MultiPoly]) -> MultiPoly {
    assert_eq!(subs.len(), p.nvars, "dimension mismatch");
    let nv = if subs.is_empty() { 0 } else { subs[0].nvars };
    for s in subs {
        assert_eq!(s.nvars, nv, "substitutes disagree on variable count");
    }
    // powers[i][k] = subs[i]^k, built on demand
    let mut powers: Vec<Vec<MultiPoly>> = subs.iter().map(|_| vec![MultiPoly::one(nv)]).collect();
    let mut out = MultiPoly::zero(nv);
    for (exps, coeff) in &p.terms {
        let mut term = MultiPoly::constant(*coeff, nv);
        for (i, &e) in exps.iter().enumerate() {
            while powers[i].len() <= e as usize {
                let next = poly_mul(powers[i].last().unwrap(), &subs[i]);
                powers[i].push(next);
            }
            if e > 0 {
                term = poly_mul(&term, &powers[i][e as usize]);
            }
        }
        out = out.add(&term);
    }
    out
}

/// Weighted-degree monomial order: compare weighted degree first, break
/// ties lexicographically with the first variable most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialOrder {
    pub weights: Vec<u64>,
}

impl MonomialOrder {
    pub fn new(weights: Vec<u64>) -> Self {
        assert!(weights.iter().all(|&w| w > 0), "weights must be positive");
        MonomialOrder { weights }
    }

    pub fn cmp_exps(&self, a: &[u32], b: &[u32]) -> std::cmp::Ordering {
        mdeg(a, self).cmp(&mdeg(b, self)).then_with(|| a.cmp(b))
    }
}

/// Weighted sum of exponents.
pub fn mdeg(exponents: &[u32], order: &MonomialOrder) -> u64 {
    assert_eq!(exponents.len(), order.weights.len(), "length mismatch");
    exponents.iter().zip(&order.weights).map(|(&e, &w)| e as u64 * w).sum()
}

/// Leading exponent vector of `p` under `order` (None for the zero
/// polynomial).
pub fn leading_exponent<'a>(p: &'a MultiPoly, order: &MonomialOrder) -> Option<&'a Vec<u32>> {
    p.terms.keys().max_by(|a, b| order.cmp_exps(a, b))
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, coeff) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", coeff.re, coeff.im)?;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    write!(f, "*x{}^{}", i + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn mul_single_monomials() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let xy = poly_mul(&x, &y);
        assert_eq!(xy.num_terms(), 1);
        assert_eq!(xy.terms.get(&vec![1, 1]).unwrap().re, 1.0);
    }

    #[test]
    fn mul_by_one_is_identity() {
        // 3/2 xy - 1/2
        let mut p = MultiPoly::zero(2);
        p.add_term(vec![1, 1], c(1.5));
        p.add_term(vec![0, 0], c(-0.5));
        let q = poly_mul(&p, &MultiPoly::one(2));
        assert_eq!(p, q);
    }

    #[test]
    fn mul_expansion() {
        // x1 * (2 x1 x2 - x1) = 2 x1^2 x2 - x1^2
        let x1 = MultiPoly::var(2, 0);
        let mut p = MultiPoly::zero(2);
        p.add_term(vec![1, 1], c(2.0));
        p.add_term(vec![1, 0], c(-1.0));
        let prod = poly_mul(&x1, &p);
        assert_eq!(prod.terms.get(&vec![2, 1]).unwrap().re, 2.0);
        assert_eq!(prod.terms.get(&vec![2, 0]).unwrap().re, -1.0);
        assert_eq!(prod.num_terms(), 2);
    }

    #[test]
    fn eval_constant_and_quadratic() {
        let one = MultiPoly::one(3);
        assert_eq!(poly_eval(&one, &[c(9.0), c(-2.0), c(0.5)]), c(1.0));

        // x^2 at x = i equals -1
        let mut x2 = MultiPoly::zero(1);
        x2.add_term(vec![2], c(1.0));
        let v = poly_eval(&x2, &[C64::new(0.0, 1.0)]);
        assert!((v - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_cheb_a2_starting_value() {
        // 3/2 xy - 1/2 at (1,1) -> 1
        let mut p = MultiPoly::zero(2);
        p.add_term(vec![1, 1], c(1.5));
        p.add_term(vec![0, 0], c(-0.5));
        assert!((poly_eval(&p, &[c(1.0), c(1.0)]) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_identity_and_constant() {
        let x = MultiPoly::var(1, 0);
        let mut q = MultiPoly::zero(2);
        q.add_term(vec![1, 1], c(2.0));
        q.add_term(vec![0, 0], c(0.25));
        assert_eq!(poly_compose(&x, std::slice::from_ref(&q)), q);

        let k = MultiPoly::constant(c(7.0), 2);
        let composed = poly_compose(&k, &[q.clone(), q]);
        assert_eq!(composed, MultiPoly::constant(c(7.0), 2));
    }

    #[test]
    fn mdeg_weighted() {
        let a2 = MonomialOrder::new(vec![1, 1]);
        assert_eq!(mdeg(&[1, 1], &a2), 2);
        let c2 = MonomialOrder::new(vec![1, 2]);
        assert_eq!(mdeg(&[1, 0], &c2), 1);
        assert_eq!(mdeg(&[0, 1], &c2), 2);
        assert_eq!(mdeg(&[0, 0], &c2), 0);
    }

    #[test]
    fn order_breaks_ties_lexicographically() {
        let c2 = MonomialOrder::new(vec![1, 2]);
        // (0,1) and (2,0) tie at mdeg 2; (0,1) < (2,0) lexicographically
        assert_eq!(c2.cmp_exps(&[0, 1], &[2, 0]), std::cmp::Ordering::Less);
        assert_eq!(c2.cmp_exps(&[2, 0], &[0, 1]), std::cmp::Ordering::Greater);
    }

    #[test]
    fn prune_removes_cancelled_terms() {
        let x = MultiPoly::var(1, 0);
        let d = x.sub(&x);
        assert!(d.is_zero());
    }
}
