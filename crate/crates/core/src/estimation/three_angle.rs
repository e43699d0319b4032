//! Closed-form inversion from rates at `θ₁ ∈ {0°, 45°, 90°}`, `θ₂ = 45°`.
//!
//! With `θ₂ = 45°` the rate is `(C/2)|β e^{iΔ} cos θ₁ + sin θ₁|²`, so
//!
//! ```text
//! N0 = Cβ²/2,   N90 = C/2,   N45 = (C/4)(β² + 1 + 2β cos Δ)
//! ```
//!
//! The scale-free parts (`β² = N0/N90`, `cos²Δ` and the sign of `cos Δ`)
//! are formed in the caller's rate field before any transcendental
//! function is applied, so an exact field gives results that are exactly
//! invariant under a common rescaling of the three rates.

use num_traits::{Num, ToPrimitive};

use super::{EllipsometricEstimate, Method, Observation, Warning};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rate arithmetic needed by the algebraic part of the inversion: `f32`,
/// `f64`, or an exact field such as `BigRational`.
pub trait RateValue: Clone + PartialOrd + Num + ToPrimitive + std::fmt::Debug {}

impl<R: Clone + PartialOrd + Num + ToPrimitive + std::fmt::Debug> RateValue for R {}

/// Algebraic invariants of a three-angle measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeAngleSolution<R> {
    /// `2·N90`.
    pub c_hat: R,
    /// `N0/N90`.
    pub beta_sq: R,
    /// `2·N45 − N0 − N90`.
    pub cos_delta_num: R,
    /// `4·N0·N90`, the square of the denominator of `cos Δ`.
    pub cos_delta_den_sq: R,
}

impl<R: RateValue> ThreeAngleSolution<R> {
    pub fn cos_delta_sq(&self) -> R {
        self.cos_delta_num.clone() * self.cos_delta_num.clone() / self.cos_delta_den_sq.clone()
    }
}

pub fn solve_three_angle<R: RateValue>(n0: &R, n45: &R, n90: &R) -> Result<ThreeAngleSolution<R>> {
    let zero = R::zero();
    if !(*n0 > zero) || !(*n90 > zero) {
        return Err(Error::EigenpolarizationNull);
    }
    if *n45 < zero {
        return Err(Error::InvalidData("N45 must be >= 0".into()));
    }
    let two = R::one() + R::one();
    let four = two.clone() * two.clone();
    Ok(ThreeAngleSolution {
        c_hat: two.clone() * n90.clone(),
        beta_sq: n0.clone() / n90.clone(),
        cos_delta_num: two * n45.clone() - n0.clone() - n90.clone(),
        cos_delta_den_sq: four * n0.clone() * n90.clone(),
    })
}

fn to_scalar<R: ToPrimitive, T: Scalar>(x: &R) -> T {
    T::lit(x.to_f64().expect("rate convertible to f64"))
}

/// `cos Δ̂` after clamping, plus the overshoot warning if any.
fn cos_delta<R: RateValue, T: Scalar>(sol: &ThreeAngleSolution<R>) -> (T, T, Option<Warning>) {
    let mag_sq: T = to_scalar(&sol.cos_delta_sq());
    let mag = mag_sq.sqrt();
    let signed = if sol.cos_delta_num < R::zero() { -mag } else { mag };
    let warning = (mag > T::lit(1.05)).then(|| Warning::InconsistentRates {
        cos_delta: signed.as_f64(),
    });
    (signed.max(-T::one()).min(T::one()), signed, warning)
}

/// Delta-method covariance of `(C, ψ, Δ)` from rate variances.
fn covariance<T: Scalar>(rates: [T; 3], variances: [T; 3], cos_raw: T) -> [[T; 3]; 3] {
    let [n0, _n45, n90] = rates;
    let b = n0 / n90;
    let s = (n0 * n90).sqrt();
    let dpsi_db = T::one() / (T::one() + b * b);
    let floor = T::lit(1e-12);
    let dd_dx = -T::one() / (T::one() - cos_raw * cos_raw).max(floor).sqrt();
    let half = T::half();
    // rows: C, psi, delta; columns: N0, N45, N90
    let jac = [
        [T::zero(), T::zero(), T::two()],
        [dpsi_db / n90, T::zero(), -dpsi_db * n0 / (n90 * n90)],
        [
            dd_dx * (-half / s - cos_raw * half / n0),
            dd_dx / s,
            dd_dx * (-half / s - cos_raw * half / n90),
        ],
    ];
    let mut cov = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            cov[i][j] = (0..3).fold(T::zero(), |acc, k| acc + jac[i][k] * variances[k] * jac[j][k]);
        }
    }
    cov
}

fn finish<R: RateValue, T: Scalar>(sol: &ThreeAngleSolution<R>, rates: [T; 3], variances: [T; 3]) -> EllipsometricEstimate<T> {
    let beta_sq: T = to_scalar(&sol.beta_sq);
    let (cos_clamped, cos_raw, warning) = cos_delta::<R, T>(sol);
    EllipsometricEstimate {
        c_hat: to_scalar(&sol.c_hat),
        psi_hat: beta_sq.atan(),
        delta_mag_hat: cos_clamped.acos(),
        covariance: covariance(rates, variances, cos_raw.max(-T::one()).min(T::one())),
        method: Method::ThreeAngle,
        warnings: warning.into_iter().collect(),
        visibility_hat: None,
    }
}

/// Inversion of accidental-subtracted rates; covariance assumes Poisson
/// variance equal to each rate (1 s dwell).
pub fn three_angle_invert<T: Scalar>(n0: T, n45: T, n90: T) -> Result<EllipsometricEstimate<T>> {
    three_angle_invert_with_variance([n0, n45, n90], [n0, n45, n90])
}

pub fn three_angle_invert_with_variance<T: Scalar>(rates: [T; 3], variances: [T; 3]) -> Result<EllipsometricEstimate<T>> {
    let sol = solve_three_angle(&rates[0], &rates[1], &rates[2])?;
    Ok(finish(&sol, rates, variances))
}

/// Inversion in an exact rate field; angles are rounded to `T` only after
/// the algebraic invariants are formed.
pub fn three_angle_invert_exact<R: RateValue, T: Scalar>(n0: &R, n45: &R, n90: &R) -> Result<EllipsometricEstimate<T>> {
    let sol = solve_three_angle(n0, n45, n90)?;
    let rates = [to_scalar(n0), to_scalar(n45), to_scalar(n90)];
    Ok(finish(&sol, rates, rates))
}

/// Angle tolerance when matching the protocol settings: 1e-6 degree.
fn angle_tolerance<T: Scalar>() -> T {
    T::lit(1e-6f64.to_radians())
}

/// Pools observations at the three protocol settings (summing counts and
/// dwell), subtracts accidentals, and inverts. Variances are `n/T²`.
pub fn three_angle_from_observations<T: Scalar>(
    observations: &[Observation<T>],
    accidental_rate: T,
) -> Result<EllipsometricEstimate<T>> {
    let tol = angle_tolerance::<T>();
    let q = T::FRAC_PI_4();
    let targets = [T::zero(), q, T::FRAC_PI_2()];
    let mut pooled = [(T::zero(), T::zero()); 3];
    for o in observations {
        if (o.theta2 - q).abs() > tol {
            continue;
        }
        if let Some(k) = targets.iter().position(|&t| (o.theta1 - t).abs() <= tol) {
            pooled[k].0 = pooled[k].0 + o.counts;
            pooled[k].1 = pooled[k].1 + o.duration;
        }
    }
    let missing: Vec<&str> = ["0", "45", "90"]
        .iter()
        .zip(pooled.iter())
        .filter(|(_, p)| p.1 <= T::zero())
        .map(|(name, _)| *name)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSettings(format!(
            "three-angle method needs theta2 = 45 deg rows at theta1 = {} deg",
            missing.join(", ")
        )));
    }
    let rates = pooled.map(|(n, t)| (n / t - accidental_rate).max(T::zero()));
    let variances = pooled.map(|(n, t)| n / (t * t));
    three_angle_invert_with_variance(rates, variances)
}
