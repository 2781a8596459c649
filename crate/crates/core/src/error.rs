use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the analysis pipeline.
///
/// Variants fall in two groups: validation failures (bad input, raised before any
/// numerics run) and numerical failures (a solver did not reach its target).
/// [`Error::is_validation`] separates the two.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("hamiltonian is not hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalised (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("decay state is orthogonal to the spectrum (largest overlap {max_overlap:e})")]
    OrthogonalDecayState { max_overlap: f64 },

    #[error("evaluation at the pole of level {index} (energy {energy})")]
    AtPole { index: usize, energy: f64 },

    #[error("jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    EigenNoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("aberth iteration did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    RootNoConvergence { iterations: usize, worst_residual: f64 },

    #[error("roots {first} and {second} coincide (distance {distance:e}); input model has an unmerged degeneracy")]
    DuplicateRoots { first: usize, second: usize, distance: f64 },

    #[error("no sign change of the resolvent between levels {lower} and {upper}")]
    BracketFailure { lower: usize, upper: usize },

    #[error("winding curve refinement exceeded {budget} points")]
    RefinementBudget { budget: usize },

    #[error("moment sum has a non-negligible imaginary part ({imag:e} vs scale {scale:e})")]
    ComplexMoment { imag: f64, scale: f64 },

    #[error("truncated normalisation {value:e} is too small; cut-off lies below the first decay scale")]
    VanishingNormalization { value: f64 },

    #[error("exceptional point: the two poles coalesce (y^2 = 1)")]
    ExceptionalPoint,

    #[error("propagator increased the norm by {increase:e}")]
    NormIncrease { increase: f64 },

    #[error("survival probability {survival:e} at t_max exceeds 1e-10; slow modes need a longer horizon")]
    SurvivalNotReached { survival: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by the caller's input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::ShapeMismatch(_)
                | Error::NotHermitian { .. }
                | Error::NotNormalized { .. }
                | Error::OrthogonalDecayState { .. }
                | Error::ExceptionalPoint
        )
    }
}
