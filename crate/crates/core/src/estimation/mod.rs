//! Recovery of `(C, ψ, |Δ|)` from coincidence data.
//!
//! The rate depends on `Δ` only through `cos Δ`, so with linear analyzers
//! the sign of `Δ` is unobservable and estimates carry `|Δ| ∈ [0, π]`.

mod fit;
mod three_angle;

pub use fit::{fit_observations, least_squares_fit, FitOptions, PoissonObjective};
pub use three_angle::{
    solve_three_angle, three_angle_from_observations, three_angle_invert, three_angle_invert_exact,
    three_angle_invert_with_variance, RateValue, ThreeAngleSolution,
};

use crate::error::{invalid, Result};
use crate::experiment::{CountRecord, DetectorModel};
use crate::sample::SampleParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ThreeAngle,
    LeastSquares,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ThreeAngle => "three_angle",
            Method::LeastSquares => "least_squares",
        }
    }
}

/// Non-fatal conditions attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `|cos Δ̂|` exceeded 1.05 before clamping.
    InconsistentRates { cos_delta: f64 },
    /// Observed information was not positive definite; the covariance was
    /// computed from a ridge-regularized matrix.
    SingularInformation,
    /// The unconstrained `Δ` optimum was replaced by the boundary value
    /// `0` or `π`.
    DeltaAtBoundary,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::InconsistentRates { cos_delta } => {
                write!(f, "inconsistent rates: cos(delta) = {cos_delta} before clamping")
            }
            Warning::SingularInformation => write!(f, "singular information matrix; covariance regularized"),
            Warning::DeltaAtBoundary => write!(f, "delta estimate at boundary of [0, pi]"),
        }
    }
}

/// Estimated coincidence scale and ellipsometric angles.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsometricEstimate<T> {
    pub c_hat: T,
    pub psi_hat: T,
    pub delta_mag_hat: T,
    /// Covariance of `(C, ψ, |Δ|)`, angles in radians.
    pub covariance: [[T; 3]; 3],
    pub method: Method,
    pub warnings: Vec<Warning>,
    /// Present when the visibility was a free parameter.
    pub visibility_hat: Option<T>,
}

impl<T: Scalar> EllipsometricEstimate<T> {
    pub fn beta_hat(&self) -> T {
        self.psi_hat.tan().sqrt()
    }

    pub fn sample_params(&self) -> Result<SampleParams<T>> {
        SampleParams::new(self.psi_hat, self.delta_mag_hat)
    }

    pub fn std_errors(&self) -> [T; 3] {
        [0, 1, 2].map(|i| self.covariance[i][i].max(T::zero()).sqrt())
    }
}

/// Real-valued observation: `counts` may be a noiseless mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    pub theta1: T,
    pub theta2: T,
    pub duration: T,
    pub counts: T,
}

impl<T: Scalar> From<&CountRecord<T>> for Observation<T> {
    fn from(r: &CountRecord<T>) -> Self {
        Self {
            theta1: r.theta1,
            theta2: r.theta2,
            duration: r.duration,
            counts: T::from_u64(r.counts).expect("count representable"),
        }
    }
}

/// Background-subtracted rate at one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample<T> {
    pub theta1: T,
    pub theta2: T,
    pub rate: T,
}

/// `max(counts/duration − accidental_rate, 0)` per record.
pub fn subtract_accidentals<T: Scalar>(records: &[CountRecord<T>], det: &DetectorModel<T>) -> Vec<RateSample<T>> {
    records
        .iter()
        .map(|r| {
            let obs = Observation::from(r);
            RateSample {
                theta1: obs.theta1,
                theta2: obs.theta2,
                rate: (obs.counts / obs.duration - det.accidental_rate).max(T::zero()),
            }
        })
        .collect()
}

/// `θ₂ = atan(1/β)`: equalizes the two direct terms of the rate at
/// `θ₁ = 45°`. Always inside `(0, π/2)`.
pub fn choose_theta2<T: Scalar>(beta_guess: T) -> Result<T> {
    if !(beta_guess > T::zero()) || beta_guess.is_infinite() {
        return Err(invalid("beta_guess", "must be positive and finite"));
    }
    Ok(T::one().atan2(beta_guess))
}
