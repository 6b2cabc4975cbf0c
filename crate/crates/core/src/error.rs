use thiserror::Error;

/// Errors raised by the algebra and channel routines.
///
/// Variants fall into three groups that callers (the CLI in particular) treat
/// differently: negative mathematical answers ([`Error::is_verdict`]),
/// violated preconditions, and internal failures ([`Error::is_internal`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid tolerance: abs={abs}, rel={rel}")]
    InvalidTolerance { abs: f64, rel: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("not a subalgebra (span residual {residual:.3e})")]
    NotSubalgebra { residual: f64 },

    #[error("element not in the map's domain (projection residual {residual:.3e})")]
    NotInDomain { residual: f64 },

    #[error("algebras do not commute (max commutator norm {max_commutator:.3e})")]
    CommutationFailure { max_commutator: f64 },

    #[error("no family of {n} mutually orthogonal equivalent projections (largest available: {available})")]
    NotEnoughProjections { n: usize, available: usize },

    #[error("matrix units do not match the domain: {0}")]
    UnitsMismatch(String),

    #[error("algebra is not a factor (center dimension {center_dim})")]
    NotFactor { center_dim: usize },

    #[error("map is not completely positive (Choi min eigenvalue {min_eigenvalue:.6e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("map is not unital (|T(I) - I| = {residual:.3e})")]
    NotUnital { residual: f64 },

    #[error("map does not fix the second algebra (residual {residual:.3e})")]
    IdentityOnN2Violated { residual: f64 },

    #[error("algebras are not Schlieder independent")]
    IndependenceFailure,

    #[error("precondition failed: {0}")]
    PreconditionFailure(String),

    #[error("site {site} out of bounds for a {num_sites}-site net")]
    RegionOutOfBounds { site: usize, num_sites: usize },

    #[error("regions overlap on sites {overlap:?}")]
    DisjointnessFailure { overlap: Vec<usize> },

    #[error("inner region is not strictly contained in the outer region")]
    NotStrictlyNested,

    #[error("ambient dimension {dim} exceeds the cap {cap}")]
    NetTooLarge { dim: usize, cap: usize },

    #[error("Kraus reconstruction failed (residual {residual:.3e})")]
    ReconstructionFailure { residual: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors that are a valid (negative) mathematical answer rather
    /// than a tool or input failure.
    pub fn is_verdict(&self) -> bool {
        matches!(
            self,
            Error::NotCompletelyPositive { .. }
                | Error::IndependenceFailure
                | Error::NotFactor { .. }
                | Error::NotEnoughProjections { .. }
        )
    }

    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::Internal(_) | Error::ReconstructionFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
