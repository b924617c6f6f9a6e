//! asptk-core: Fourier transforms for signal models on zero-dimensional
//! polynomial varieties.
//!
//! The crate builds dense transform matrices for a family of concrete
//! signal models (DFT, DCT-3, a directed hexagonal lattice, and the
//! multivariate Chebyshev models of type A2 and C2), synthesizes sparse
//! factorizations of them (induction / bottom-up and decomposition /
//! top-down), and produces orthogonal versions of the C2 transform via a
//! multivariate Gauss-Jacobi procedure.
//!
//! Module map:
//! - [`polycore`]: sparse multivariate polynomials over ℂ, weighted-graded
//!   monomial order
//! - [`weyl`]: root-system tables and Weyl-group actions (A1, A2, C2)
//! - [`chebyshev`]: multivariate Chebyshev polynomials, three-term
//!   recurrence and H matrices for C2
//! - [`models`]: concrete signal models (variety + basis + dense matrix)
//! - [`fastfactor`]: sparse factor plans and their verification
//! - [`ortho`]: Christoffel-Darboux kernels and orthogonalization

pub mod chebyshev;
pub mod fastfactor;
pub mod models;
pub mod ortho;
pub mod polycore;
pub mod weyl;

pub use chebyshev::ChebTable;
pub use fastfactor::{FactorPlan, FactorRole, SparseMatrix, VerifyReport};
pub use models::{SignalModel, VarietyPoint};
pub use polycore::{MonomialOrder, MultiPoly};
pub use weyl::{FundamentalPoint, RootKind, RootSystemData, Weight};

/// Complex scalar used across the crate.
pub type C64 = num_complex::Complex64;

/// Crate-wide error type.
///
/// `Validation` marks bad inputs (caller mistakes); `Verification` marks a
/// numerical check that failed (a constructed object does not satisfy its
/// contract); `Unsupported` marks a model/method combination that is not
/// implemented by design.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("verification error: {0}")]
    Verification(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
