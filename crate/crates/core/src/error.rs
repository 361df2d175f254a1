use thiserror::Error;

use crate::pauli::PauliString;

/// Errors produced by the numerical and algebraic routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cannot parse Pauli string {0:?}")]
    ParsePauli(String),

    #[error("internal algebra consistency failure: {0}")]
    AlgebraBug(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("closure exceeded {max_dim} variables ({} collected)", partial.len())]
    ClosureOverflow {
        max_dim: usize,
        partial: Vec<PauliString>,
    },

    #[error("variable set is not closed under the generator: {escaping} escapes")]
    NotClosed { escaping: PauliString },

    #[error("generator row for {row} has a nonzero identity (affine) term")]
    UnsupportedAffine { row: PauliString },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix is not symmetric (relative defect {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is significantly indefinite (min eigenvalue {min:.3e}, max {max:.3e})")]
    Indefinite { min: f64, max: f64 },

    #[error("matrix is not Hurwitz (largest real part {max_real:.3e}, margin {margin:.3e})")]
    NotHurwitz { max_real: f64, margin: f64 },

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("matrix exponential overflow (norm {0:.3e})")]
    Overflow(f64),

    #[error(
        "cannot truncate at order {k}: sigma_k/sigma_(k+1) = {ratio:.12} lies inside a near-degenerate cluster; choose a different order"
    )]
    DegenerateSplit { k: usize, ratio: f64 },

    #[error("truncation order {k} outside 1..={order}")]
    InvalidOrder { k: usize, order: usize },

    #[error("integration step size underflow (h = {0:.3e})")]
    StepUnderflow(f64),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scenario field `{field}`: {message}")]
    Schema { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
