//! Entangled-photon quantum ellipsometry.
//!
//! A polarization-entangled photon pair is split between a reference arm
//! (signal, analyzer A₁) and a sample arm (idler, reflection then analyzer
//! A₂). Coincidence counts as a function of the two analyzer angles
//! determine the sample's `(ψ, |Δ|)` together with an overall scale `C`
//! that absorbs source brightness and detector efficiencies, so no
//! calibration of either is needed.
//!
//! Modules:
//! - [`polarization`]: two-photon states, per-arm Jones operators, reduced
//!   density matrices.
//! - [`sample`]: `(ψ, Δ)` parameters, Fresnel and thin-film reflection.
//! - [`experiment`]: coincidence rates, detector model, Poisson simulation.
//! - [`estimation`]: three-angle inversion and Poisson likelihood fit.
//! - [`classical`]: calibration-sensitive classical comparator.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the `*64`
//! aliases below fix the common double-precision case. The algebraic part
//! of the three-angle inversion also accepts exact rational rates.

// `!(x > 0)` is the NaN-rejecting form used throughout; index loops mirror
// the matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classical;
pub mod error;
pub mod estimation;
pub mod experiment;
mod linalg;
pub mod polarization;
pub mod sample;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;
pub use num_rational::BigRational;

pub type TwoPhotonState64 = polarization::TwoPhotonState<f64>;
pub type JonesOperator64 = polarization::JonesOperator<f64>;
pub type DensityMatrix64 = polarization::DensityMatrix2<f64>;
pub type SampleParams64 = sample::SampleParams<f64>;
pub type FilmStack64 = sample::FilmStack<f64>;
pub type ReflectionPair64 = sample::ReflectionPair<f64>;
pub type DetectorModel64 = experiment::DetectorModel<f64>;
pub type ExperimentScale64 = experiment::ExperimentScale<f64>;
pub type AcquisitionPlan64 = experiment::AcquisitionPlan<f64>;
pub type CountRecord64 = experiment::CountRecord<f64>;
pub type Estimate64 = estimation::EllipsometricEstimate<f64>;
pub type Observation64 = estimation::Observation<f64>;
pub type ClassicalInstrument64 = classical::ClassicalInstrument<f64>;

pub type TwoPhotonState32 = polarization::TwoPhotonState<f32>;
pub type SampleParams32 = sample::SampleParams<f32>;
pub type Estimate32 = estimation::EllipsometricEstimate<f32>;
