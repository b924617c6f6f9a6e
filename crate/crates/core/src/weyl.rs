//! Root-system tables and Weyl-group machinery for the rank-1 and rank-2
//! Chebyshev models.
//!
//! Weights live in fundamental-weight coordinates, so the simple
//! reflections act by small integer matrices and "dominant" means
//! componentwise nonnegative. Points of the torus are stored in
//! barycentric coordinates `c`; the dual pairing between a weight and a
//! point is `λᵀ G c` with a per-system Gram matrix `G`.
//!
//! Key operations:
//! - [`RootSystemData::weyl_elements`]: the full group, generated by BFS
//! - [`RootSystemData::orbit`]: Weyl orbit of a weight as a multiset
//! - [`RootSystemData::normalize_dominant`]: dominant representative
//! - [`FundamentalPoint`]: a point of the closed fundamental alcove

use nalgebra::DMatrix;

/// Weight in fundamental-weight coordinates.
pub type Weight = Vec<i64>;

/// Which root system a model is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootKind {
    A1,
    A2,
    C2,
}

impl RootKind {
    pub fn rank(&self) -> usize {
        match self {
            RootKind::A1 => 1,
            RootKind::A2 | RootKind::C2 => 2,
        }
    }
}

/// Frozen tables for one root system.
#[derive(Debug, Clone)]
pub struct RootSystemData {
    pub kind: RootKind,
    pub rank: usize,
    /// Simple reflections acting on weight coordinates (row-major).
    pub generators: Vec<Vec<i64>>,
    /// Marks of the highest root; the alcove is c ≥ 0, Σ marks_j c_j ≤ 1.
    pub marks: Vec<u64>,
    /// Weights of the graded monomial order attached to this system.
    pub order_weights: Vec<u64>,
    /// Gram matrix G of the weight/point pairing λᵀ G c (row-major).
    pub gram: Vec<f64>,
}

impl RootSystemData {
    pub fn new(kind: RootKind) -> Self {
        match kind {
            RootKind::A1 => RootSystemData {
                kind,
                rank: 1,
                generators: vec![vec![-1]],
                marks: vec![1],
                order_weights: vec![1],
                gram: vec![1.0],
            },
            RootKind::A2 => RootSystemData {
                kind,
                rank: 2,
                // s1(k,l) = (-k, k+l), s2(k,l) = (k+l, -l)
                generators: vec![vec![-1, 0, 1, 1], vec![1, 1, 0, -1]],
                marks: vec![1, 1],
                order_weights: vec![1, 1],
                gram: vec![1.0, 0.0, 0.0, 1.0],
            },
            RootKind::C2 => RootSystemData {
                kind,
                rank: 2,
                // s1(k,l) = (-k, k+l), s2(k,l) = (k+2l, -l)
                generators: vec![vec![-1, 0, 1, 1], vec![1, 2, 0, -1]],
                marks: vec![2, 1],
                order_weights: vec![1, 2],
                gram: vec![1.0, 0.5, 0.0, 1.0],
            },
        }
    }

    /// All group elements as weight-space matrices, in a deterministic
    /// breadth-first order starting from the identity.
    pub fn weyl_elements(&self) -> Vec<Vec<i64>> {
        let d = self.rank;
        let identity: Vec<i64> =
            (0..d * d).map(|i| if i / d == i % d { 1 } else { 0 }).collect();
        let mut elements = vec![identity.clone()];
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(identity);
        let mut frontier = 0;
        while frontier < elements.len() {
            let w = elements[frontier].clone();
            frontier += 1;
            for g in &self.generators {
                let prod = mat_mul(g, &w, d);
                if seen.insert(prod.clone()) {
                    elements.push(prod);
                }
            }
        }
        elements
    }

    /// Apply a weight-space matrix to a weight.
    pub fn apply(&self, w: &[i64], lambda: &[i64]) -> Weight {
        let d = self.rank;
        (0..d).map(|r| (0..d).map(|c| w[r * d + c] * lambda[c]).sum()).collect()
    }

    /// Weyl orbit of `lambda` as a multiset of size |W| (stabilized
    /// weights appear with multiplicity).
    pub fn orbit(&self, lambda: &[i64]) -> Vec<Weight> {
        self.weyl_elements().iter().map(|w| self.apply(w, lambda)).collect()
    }

    /// The dominant (componentwise nonnegative) representative of the
    /// orbit of `lambda`.
    pub fn normalize_dominant(&self, lambda: &[i64]) -> Weight {
        self.orbit(lambda)
            .into_iter()
            .find(|mu| mu.iter().all(|&x| x >= 0))
            .expect("every Weyl orbit contains a dominant weight")
    }

    /// Dual pairing λᵀ G c between a weight and a barycentric point.
    pub fn pairing(&self, lambda: &[i64], c: &[f64]) -> f64 {
        let d = self.rank;
        assert_eq!(lambda.len(), d);
        assert_eq!(c.len(), d);
        let mut acc = 0.0;
        for r in 0..d {
            for col in 0..d {
                acc += lambda[r] as f64 * self.gram[r * d + col] * c[col];
            }
        }
        acc
    }

    /// Point-space matrices G⁻¹ S⁻ᵀ G, one per Weyl element S, satisfying
    /// pairing(Sλ, A c) = pairing(λ, c).
    pub fn point_actions(&self) -> Vec<DMatrix<f64>> {
        let d = self.rank;
        let g = DMatrix::from_row_slice(d, d, &self.gram);
        let g_inv = g.clone().try_inverse().expect("Gram matrix is invertible");
        self.weyl_elements()
            .iter()
            .map(|s| {
                let sf = DMatrix::from_row_slice(
                    d,
                    d,
                    &s.iter().map(|&x| x as f64).collect::<Vec<_>>(),
                );
                let s_inv_t = sf.try_inverse().expect("reflection is invertible").transpose();
                &g_inv * s_inv_t * &g
            })
            .collect()
    }

    /// Point-space translation vectors (columns of G⁻¹) under which every
    /// exponential e^{2πi·pairing} with integer weight is invariant.
    pub fn point_translations(&self) -> Vec<Vec<f64>> {
        let d = self.rank;
        let g = DMatrix::from_row_slice(d, d, &self.gram);
        let g_inv = g.try_inverse().expect("Gram matrix is invertible");
        (0..d).map(|j| g_inv.column(j).iter().copied().collect()).collect()
    }
}

/// Coordinates x_k of a point: the orbit-averaged exponential at the k-th
/// fundamental weight. For A1 this is cos(2πθ). Fails if θ lies outside
/// the closed fundamental alcove.
pub fn coords(data: &RootSystemData, theta: &FundamentalPoint) -> Result<Vec<crate::C64>, crate::Error> {
    if !theta.in_fundamental_domain(data) {
        return Err(crate::Error::Validation(format!(
            "point {:?} lies outside the closed fundamental domain of {:?}",
            theta.barycentric, data.kind
        )));
    }
    Ok((0..data.rank)
        .map(|k| {
            let mut e_k = vec![0i64; data.rank];
            e_k[k] = 1;
            orbit_average_exp(data, &e_k, &theta.barycentric)
        })
        .collect())
}

/// (1/|W|) Σ_{w∈W} exp(2πi ⟨wλ, c⟩).
pub fn orbit_average_exp(data: &RootSystemData, lambda: &[i64], c: &[f64]) -> crate::C64 {
    let orbit = data.orbit(lambda);
    let sum: crate::C64 = orbit
        .iter()
        .map(|mu| {
            let phase = 2.0 * std::f64::consts::PI * data.pairing(mu, c);
            crate::C64::new(phase.cos(), phase.sin())
        })
        .sum();
    sum / orbit.len() as f64
}

fn mat_mul(a: &[i64], b: &[i64], d: usize) -> Vec<i64> {
    let mut out = vec![0i64; d * d];
    for r in 0..d {
        for c in 0..d {
            for k in 0..d {
                out[r * d + c] += a[r * d + k] * b[k * d + c];
            }
        }
    }
    out
}

/// A point of the torus in barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPoint {
    pub barycentric: Vec<f64>,
}

impl FundamentalPoint {
    pub fn new(barycentric: Vec<f64>) -> Self {
        FundamentalPoint { barycentric }
    }

    /// Whether the point lies in the closed fundamental alcove
    /// (componentwise ≥ 0 and Σ marks_j c_j ≤ 1, with slack for rounding).
    pub fn in_fundamental_domain(&self, data: &RootSystemData) -> bool {
        const SLACK: f64 = 1e-12;
        if self.barycentric.len() != data.rank {
            return false;
        }
        let weighted: f64 = self
            .barycentric
            .iter()
            .zip(&data.marks)
            .map(|(&c, &m)| c * m as f64)
            .sum();
        self.barycentric.iter().all(|&c| c >= -SLACK) && weighted <= 1.0 + SLACK
    }
}
