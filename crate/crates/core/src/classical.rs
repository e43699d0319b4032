//! Minimal classical comparators: a two-intensity ratio ellipsometer that is
//! sensitive to gain drift and polarizer leakage, and an ideal null
//! configuration.

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::polarization::JonesOperator;
use crate::sample::{sample_jones, SampleParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalInstrument<T> {
    /// Multiplicative source/detector drift between the H and V measurements.
    pub gain_drift: T,
    /// Intensity leakage of the input polarizer, in `[0, 1)`.
    pub extinction: T,
}

impl<T: Scalar> ClassicalInstrument<T> {
    pub fn new(gain_drift: T, extinction: T) -> Result<Self> {
        if !gain_drift.is_finite() || gain_drift <= T::zero() {
            return Err(invalid("gain_drift", "must be positive"));
        }
        if !extinction.is_finite() || extinction < T::zero() || extinction >= T::one() {
            return Err(invalid("extinction", "must lie in [0, 1)"));
        }
        Ok(Self { gain_drift, extinction })
    }

    pub fn ideal() -> Self {
        Self {
            gain_drift: T::one(),
            extinction: T::zero(),
        }
    }
}

/// Intensity-ratio estimate for a sample with reflectances `R_H = tan ψ`,
/// `R_V = 1`:
/// `I_H = (1−ε)R_H + εR_V`, `I_V = g[(1−ε)R_V + εR_H]`, `ψ̂ = atan(I_H/I_V)`.
pub fn classical_psi_from_ratio<T: Scalar>(tan_psi: T, inst: &ClassicalInstrument<T>) -> T {
    let eps = inst.extinction;
    let r_h = tan_psi;
    let r_v = T::one();
    let i_h = (T::one() - eps) * r_h + eps * r_v;
    let i_v = inst.gain_drift * ((T::one() - eps) * r_v + eps * r_h);
    (i_h / i_v).atan()
}

pub fn classical_psi_estimate<T: Scalar>(params: &SampleParams<T>, inst: &ClassicalInstrument<T>) -> T {
    classical_psi_from_ratio(params.psi().tan(), inst)
}

/// Intensity behind sample, compensator `diag(e^{−iδc}, 1)` and a linear
/// analyzer at `analyzer_angle`, for 45° linear input of unit intensity.
pub fn null_residual<T: Scalar>(params: &SampleParams<T>, compensator_delta: T, analyzer_angle: T) -> T {
    let r = T::FRAC_1_SQRT_2();
    let input = [Complex::new(r, T::zero()), Complex::new(r, T::zero())];
    let compensator = JonesOperator::diag(Complex::from_polar(T::one(), -compensator_delta), Complex::new(T::one(), T::zero()));
    let out = compensator.compose(&sample_jones(params)).apply(input);
    let (s, c) = analyzer_angle.sin_cos();
    (out[0] * c + out[1] * s).norm_sqr()
}

/// `(δc, analyzer)` that nulls [`null_residual`]: `δc = Δ` and the analyzer
/// crossed with the emerging linear polarization at `atan(1/β)`.
pub fn null_configuration<T: Scalar>(params: &SampleParams<T>) -> (T, T) {
    (params.delta(), T::one().atan2(params.beta()) + T::FRAC_PI_2())
}
