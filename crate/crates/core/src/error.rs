use thiserror::Error;

/// Errors raised by the ellipsometry toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("degenerate: psi=0, delta undefined (r_p = 0)")]
    DegeneratePsi,

    #[error("V-null sample (r_s = 0)")]
    VNullSample,

    #[error("grazing incidence: angle {angle} rad must be < pi/2")]
    GrazingIncidence { angle: f64 },

    #[error("eigenpolarization null: three-angle inversion undefined")]
    EigenpolarizationNull,

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        /// Best iterate reached, as `(C, psi, |delta|)`.
        best: [f64; 3],
        best_objective: f64,
    },

    #[error("missing analyzer settings: {0}")]
    MissingSettings(String),

    #[error("invalid data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
