//! Multivariate Chebyshev polynomials of the first kind for A1, A2, C2.
//!
//! T_λ is defined as the Weyl-orbit average of exponentials
//! exp(2πi⟨λ,θ⟩); as a polynomial it is expressed in the coordinates
//! x_k = T_{e_k}. Expansions are produced by dynamic programming on the
//! shift relation x_i·T_μ = (1/|W|) Σ_w T_{μ + w·e_i}: iterating dominant
//! weights in increasing graded order, each new T_λ appears as the unique
//! maximal index on the right-hand side and can be solved for.
//!
//! For C2 the module also provides the stacked three-term recurrence
//! x_i·𝕋_k = A_{k,i}𝕋_{k+1} + B_{k,i}𝕋_k + C_{k,i}𝕋_{k−1}
//! (with 𝕋_k = (T_{k,0}, …, T_{0,k})) and the diagonal H matrices that
//! make the recurrence symmetric.

use crate::polycore::{poly_compose, poly_eval, poly_mul, MonomialOrder, MultiPoly};
use crate::weyl::{coords, orbit_average_exp, FundamentalPoint, RootKind, RootSystemData, Weight};
use crate::C64;
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Direct evaluation of T_λ at a torus point: (1/|W|) Σ_w e^{2πi⟨wλ,θ⟩}.
pub fn cheb_eval_direct(data: &RootSystemData, lambda: &[i64], theta: &FundamentalPoint) -> C64 {
    orbit_average_exp(data, lambda, &theta.barycentric)
}

/// Memoized table of Chebyshev expansions for one root system.
pub struct ChebTable {
    pub data: RootSystemData,
    pub order: MonomialOrder,
    cache: BTreeMap<Weight, MultiPoly>,
}

impl ChebTable {
    pub fn new(kind: RootKind) -> Self {
        let data = RootSystemData::new(kind);
        let order = MonomialOrder::new(data.order_weights.clone());
        ChebTable { data, order, cache: BTreeMap::new() }
    }

    /// Expansion of T_λ in the x coordinates. Panics if λ is not dominant.
    pub fn poly(&mut self, lambda: &[i64]) -> MultiPoly {
        assert!(lambda.iter().all(|&k| k >= 0), "weight {lambda:?} is not dominant");
        if let Some(p) = self.cache.get(lambda) {
            return p.clone();
        }
        let p = self.expand(lambda);
        self.cache.insert(lambda.to_vec(), p.clone());
        p
    }

    fn expand(&mut self, lambda: &[i64]) -> MultiPoly {
        let d = self.data.rank;
        if lambda.iter().all(|&k| k == 0) {
            return MultiPoly::one(d);
        }
        if lambda.iter().sum::<i64>() == 1 {
            let i = lambda.iter().position(|&k| k == 1).unwrap();
            return MultiPoly::var(d, i);
        }
        // Split λ = μ + e_i along the first nonzero index.
        let i = lambda.iter().position(|&k| k > 0).unwrap();
        let mut mu = lambda.to_vec();
        mu[i] -= 1;

        // Right-hand side of the shift relation, grouped by dominant index.
        let mut e_i = vec![0i64; d];
        e_i[i] = 1;
        let elements = self.data.weyl_elements();
        let mut rhs: BTreeMap<Weight, f64> = BTreeMap::new();
        for w in &elements {
            let step = self.data.apply(w, &e_i);
            let nu: Weight = mu.iter().zip(&step).map(|(a, b)| a + b).collect();
            *rhs.entry(self.data.normalize_dominant(&nu)).or_insert(0.0) +=
                1.0 / elements.len() as f64;
        }

        let c_lambda = rhs.remove(lambda).unwrap_or_else(|| {
            panic!("shift relation for {lambda:?} does not produce the target index")
        });
        assert!(c_lambda > 0.0);

        let mut result = poly_mul(&MultiPoly::var(d, i), &self.poly(&mu));
        let lam_exps: Vec<u32> = lambda.iter().map(|&k| k as u32).collect();
        for (nu, c_nu) in rhs {
            let nu_exps: Vec<u32> = nu.iter().map(|&k| k as u32).collect();
            assert!(
                self.order.cmp_exps(&nu_exps, &lam_exps) == std::cmp::Ordering::Less,
                "shift relation for {lambda:?} is not triangular: {nu:?} is not smaller"
            );
            result = result.sub(&self.poly(&nu).scale(C64::new(c_nu, 0.0)));
        }
        result = result.scale(C64::new(1.0 / c_lambda, 0.0));
        if self.data.kind == RootKind::C2 {
            result = result.realify(1e-12);
        }
        result
    }
}

/// Expansion of a single T_λ (convenience wrapper around [`ChebTable`]).
pub fn cheb_expand(kind: RootKind, lambda: &[i64]) -> MultiPoly {
    ChebTable::new(kind).poly(lambda)
}

/// Recurrence matrices of level k for one variable.
pub struct RecurrenceMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// Matrices of the stacked C2 recurrence x_i·𝕋_k = A𝕋_{k+1} + B𝕋_k + C𝕋_{k−1},
/// with 𝕋_k ordered by descending first index. `i` is the 1-based variable.
pub fn shift_matrices(data: &RootSystemData, k: usize, i: usize) -> RecurrenceMatrices {
    assert_eq!(data.kind, RootKind::C2, "stacked recurrence is provided for C2 only");
    assert!(i == 1 || i == 2, "variable index must be 1 or 2");
    let mut a = DMatrix::zeros(k + 1, k + 2);
    let mut b = DMatrix::zeros(k + 1, k + 1);
    let mut c = DMatrix::zeros(k + 1, k); // empty at k = 0
    let e_i = if i == 1 { vec![1i64, 0] } else { vec![0i64, 1] };
    let elements = data.weyl_elements();
    for row in 0..=k {
        let lambda = vec![(k - row) as i64, row as i64];
        for w in &elements {
            let step = data.apply(w, &e_i);
            let nu: Weight = lambda.iter().zip(&step).map(|(x, y)| x + y).collect();
            let nu = data.normalize_dominant(&nu);
            let deg = (nu[0] + nu[1]) as usize;
            let col = nu[1] as usize;
            let coeff = 1.0 / elements.len() as f64;
            if deg == k + 1 {
                a[(row, col)] += coeff;
            } else if deg == k {
                b[(row, col)] += coeff;
            } else if k > 0 && deg == k - 1 {
                c[(row, col)] += coeff;
            } else {
                panic!("shift of degree-{k} index produced degree {deg}");
            }
        }
    }
    RecurrenceMatrices { a, b, c }
}

/// Diagonal H matrices H₀…H_n for C2: H₀ = [1/2],
/// H_k = diag(1/8, 1/16, …, 1/16, 1/8).
pub fn h_matrices(data: &RootSystemData, n: usize) -> Vec<DMatrix<f64>> {
    assert_eq!(data.kind, RootKind::C2, "H matrices are provided for C2 only");
    (0..=n)
        .map(|k| {
            if k == 0 {
                DMatrix::from_element(1, 1, 0.5)
            } else {
                let mut h = DMatrix::from_element(k + 1, k + 1, 0.0);
                for j in 0..=k {
                    h[(j, j)] = if j == 0 || j == k { 0.125 } else { 0.0625 };
                }
                h
            }
        })
        .collect()
}

/// Deterministic sample points in the open fundamental alcove
/// (low-discrepancy, no RNG).
pub fn alcove_samples(data: &RootSystemData, count: usize) -> Vec<FundamentalPoint> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let d = data.rank;
    (0..count)
        .map(|s| {
            let c: Vec<f64> = (0..d)
                .map(|j| {
                    let u = (0.41 + (s + 1) as f64 * PHI.powi(j as i32 + 1)).fract();
                    // scale so Σ marks_j c_j < 1 with margin
                    u / (data.marks[j] as f64 * d as f64 * 1.05)
                })
                .collect();
            FundamentalPoint::new(c)
        })
        .collect()
}

/// Max error over sample points of T_{kλ}(x) − T_λ(T_{k·e₁}(x), …),
/// checking that scaling the weight realizes substitution.
pub fn decomposition_check(table: &mut ChebTable, lambda: &[i64], k: i64, samples: usize) -> f64 {
    assert!(k >= 1);
    let d = table.data.rank;
    let scaled: Weight = lambda.iter().map(|&x| k * x).collect();
    let lhs = table.poly(&scaled);
    let subs: Vec<MultiPoly> = (0..d)
        .map(|j| {
            let mut e = vec![0i64; d];
            e[j] = k;
            table.poly(&e)
        })
        .collect();
    let rhs = poly_compose(&table.poly(lambda), &subs);
    let diff = lhs.sub(&rhs);
    let data = table.data.clone();
    alcove_samples(&data, samples)
        .iter()
        .map(|theta| {
            let x = coords(&data, theta).expect("sample lies in the alcove");
            poly_eval(&diff, &x).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::leading_exponent;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn coeff(p: &MultiPoly, exps: &[u32]) -> C64 {
        p.terms.get(&exps.to_vec()).copied().unwrap_or(c(0.0))
    }

    #[test]
    fn a2_degree_two_expansions() {
        let mut t = ChebTable::new(RootKind::A2);
        // T_{1,1} = (3/2) x y − 1/2
        let p = t.poly(&[1, 1]);
        assert!((coeff(&p, &[1, 1]) - c(1.5)).norm() < 1e-13);
        assert!((coeff(&p, &[0, 0]) - c(-0.5)).norm() < 1e-13);
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn c2_starting_expansions() {
        let mut t = ChebTable::new(RootKind::C2);
        // T_{1,1} = 2 x₁x₂ − x₁
        let p = t.poly(&[1, 1]);
        assert!((coeff(&p, &[1, 1]) - c(2.0)).norm() < 1e-13);
        assert!((coeff(&p, &[1, 0]) - c(-1.0)).norm() < 1e-13);
        assert_eq!(p.num_terms(), 2);
        // T_{2,0} = 4 x₁² − 2 x₂ − 1
        let p = t.poly(&[2, 0]);
        assert!((coeff(&p, &[2, 0]) - c(4.0)).norm() < 1e-13);
        assert!((coeff(&p, &[0, 1]) - c(-2.0)).norm() < 1e-13);
        assert!((coeff(&p, &[0, 0]) - c(-1.0)).norm() < 1e-13);
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn a1_matches_classical_chebyshev() {
        let mut t = ChebTable::new(RootKind::A1);
        // T_3 = 4x³ − 3x
        let p = t.poly(&[3]);
        assert!((coeff(&p, &[3]) - c(4.0)).norm() < 1e-12);
        assert!((coeff(&p, &[1]) - c(-3.0)).norm() < 1e-12);
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn expansion_matches_orbit_sum() {
        for kind in [RootKind::A1, RootKind::A2, RootKind::C2] {
            let mut table = ChebTable::new(kind);
            let data = table.data.clone();
            let d = data.rank;
            let max_mdeg = 6u64;
            let mut weights = vec![vec![0i64; d]];
            // enumerate dominant weights with mdeg ≤ max
            let mut stack = vec![vec![0i64; d]];
            let mut seen = std::collections::BTreeSet::new();
            while let Some(w) = stack.pop() {
                for j in 0..d {
                    let mut v = w.clone();
                    v[j] += 1;
                    let exps: Vec<u32> = v.iter().map(|&x| x as u32).collect();
                    if crate::polycore::mdeg(&exps, &table.order) <= max_mdeg
                        && seen.insert(v.clone())
                    {
                        weights.push(v.clone());
                        stack.push(v);
                    }
                }
            }
            for theta in alcove_samples(&data, 5) {
                let x = coords(&data, &theta).unwrap();
                for lam in &weights {
                    let via_poly = poly_eval(&table.poly(lam), &x);
                    let direct = cheb_eval_direct(&data, lam, &theta);
                    assert!(
                        (via_poly - direct).norm() < 1e-10,
                        "{kind:?} λ={lam:?}: {via_poly} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn leading_monomial_is_the_weight() {
        for kind in [RootKind::A2, RootKind::C2] {
            let mut table = ChebTable::new(kind);
            for lam in [[0i64, 3], [3, 0], [2, 2], [1, 3], [4, 1]] {
                let p = table.poly(&lam);
                let lead = leading_exponent(&p, &table.order).unwrap();
                let want: Vec<u32> = lam.iter().map(|&x| x as u32).collect();
                assert_eq!(*lead, want, "{kind:?} λ={lam:?}");
            }
        }
    }

    #[test]
    fn x2_shift_matrix_shapes() {
        let data = RootSystemData::new(RootKind::C2);
        // first row of A: (0, 1/2, 0, …); interior rows: 1/4 at offsets ±1
        for k in 2..=5 {
            let m = shift_matrices(&data, k, 2);
            assert_eq!(m.a[(0, 0)], 0.0);
            assert_eq!(m.a[(0, 1)], 0.5);
            for col in 2..k + 2 {
                assert_eq!(m.a[(0, col)], 0.0);
            }
            for row in 1..k {
                for col in 0..k + 2 {
                    let want = if col + 1 == row || col == row + 1 { 0.25 } else { 0.0 };
                    assert_eq!(m.a[(row, col)], want, "k={k} row={row} col={col}");
                }
            }
        }
        let m1 = shift_matrices(&data, 1, 2);
        assert_eq!(m1.b, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn h_matrix_values_and_compatibility() {
        let data = RootSystemData::new(RootKind::C2);
        let h = h_matrices(&data, 7);
        assert_eq!(h[0], DMatrix::from_element(1, 1, 0.5));
        let h3: Vec<f64> = (0..4).map(|j| h[3][(j, j)]).collect();
        assert_eq!(h3, vec![0.125, 0.0625, 0.0625, 0.125]);
        for k in 0..=6usize {
            for i in [1, 2] {
                let mk = shift_matrices(&data, k, i);
                let mk1 = shift_matrices(&data, k + 1, i);
                let lhs = &mk.a * &h[k + 1];
                let rhs = &h[k] * mk1.c.transpose();
                assert!((lhs - rhs).abs().max() < 1e-12, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn recurrence_identity_by_evaluation() {
        let mut table = ChebTable::new(RootKind::C2);
        let data = table.data.clone();
        for k in 1..=6usize {
            for i in [1usize, 2] {
                let m = shift_matrices(&data, k, i);
                for theta in alcove_samples(&data, 10) {
                    let x = coords(&data, &theta).unwrap();
                    let mut stack = |deg: usize| -> Vec<C64> {
                        (0..=deg)
                            .map(|j| poly_eval(&table.poly(&[(deg - j) as i64, j as i64]), &x))
                            .collect()
                    };
                    let tk = stack(k);
                    let tk1 = stack(k + 1);
                    let tkm = stack(k - 1);
                    for row in 0..=k {
                        let lhs = x[i - 1] * tk[row];
                        let mut rhs = C64::new(0.0, 0.0);
                        for col in 0..=k + 1 {
                            rhs += m.a[(row, col)] * tk1[col];
                        }
                        for col in 0..=k {
                            rhs += m.b[(row, col)] * tk[col];
                        }
                        for col in 0..k {
                            rhs += m.c[(row, col)] * tkm[col];
                        }
                        assert!((lhs - rhs).norm() < 1e-11, "k={k} i={i} row={row}");
                    }
                }
            }
        }
    }

    #[test]
    fn weight_scaling_realizes_substitution() {
        let mut a2 = ChebTable::new(RootKind::A2);
        assert_eq!(decomposition_check(&mut a2, &[1, 1], 1, 10), 0.0);
        assert!(decomposition_check(&mut a2, &[1, 1], 2, 50) < 1e-10);
        assert!(decomposition_check(&mut a2, &[2, 1], 3, 20) < 1e-10);
        let mut c2 = ChebTable::new(RootKind::C2);
        assert!(decomposition_check(&mut c2, &[2, 1], 2, 20) < 1e-10);
    }
}
