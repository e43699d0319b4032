//! Forward model of the coincidence experiment.
//!
//! The analyzer angles `θ₁` (signal arm, A₁) and `θ₂` (idler arm, A₂) are
//! measured from H. The closed-form rate is
//!
//! ```text
//! N_c = C·[β² cos²θ₁ sin²θ₂ + sin²θ₁ cos²θ₂ + 2Vβ cosΔ cosθ₁ sinθ₁ cosθ₂ sinθ₂]
//! ```
//!
//! which for `V = 1` is `C·|β e^{iΔ} cosθ₁ sinθ₂ + sinθ₁ cosθ₂|²`. The same
//! number follows from the quantum projection route in [`projected_rate`]:
//! the `β e^{iΔ}` factor lands on the `|HV⟩` amplitude, and
//! `N_c = C · QUANTUM_RATE_FACTOR · |⟨θ₁θ₂|Ψ'⟩|²` with the factor
//! undoing the `1/√2` of the source.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::polarization::{apply_local, coincidence_amplitude, entangled_state, JonesOperator, TwoPhotonState};
use crate::sample::{sample_jones, SampleParams};
use crate::scalar::Scalar;

/// `N_c / (C·|amplitude|²)` for the normalized source state.
pub const QUANTUM_RATE_FACTOR: f64 = 2.0;

/// Detector pair and background. Efficiencies enter the coincidence scale
/// as `C = C0·η₁·η₂`; `visibility` multiplies the interference term only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel<T> {
    pub eta1: T,
    pub eta2: T,
    /// Accidental coincidences per second, added to every setting.
    pub accidental_rate: T,
    pub visibility: T,
}

impl<T: Scalar> DetectorModel<T> {
    pub fn new(eta1: T, eta2: T, accidental_rate: T, visibility: T) -> Result<Self> {
        let unit = |x: T| x.is_finite() && x > T::zero() && x <= T::one();
        if !unit(eta1) {
            return Err(invalid("eta1", "must lie in (0, 1]"));
        }
        if !unit(eta2) {
            return Err(invalid("eta2", "must lie in (0, 1]"));
        }
        if !accidental_rate.is_finite() || accidental_rate < T::zero() {
            return Err(invalid("accidental_rate", "must be >= 0"));
        }
        if !visibility.is_finite() || visibility < T::zero() || visibility > T::one() {
            return Err(invalid("visibility", "must lie in [0, 1]"));
        }
        Ok(Self {
            eta1,
            eta2,
            accidental_rate,
            visibility,
        })
    }

    /// Unit efficiencies, no background, full visibility.
    pub fn ideal() -> Self {
        Self {
            eta1: T::one(),
            eta2: T::one(),
            accidental_rate: T::zero(),
            visibility: T::one(),
        }
    }
}

/// Source pair rate into the apertures, before detection efficiencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentScale<T> {
    pairs_per_s: T,
}

impl<T: Scalar> ExperimentScale<T> {
    pub fn new(pairs_per_s: T) -> Result<Self> {
        if !pairs_per_s.is_finite() || pairs_per_s <= T::zero() {
            return Err(invalid("pairs_per_s", "must be positive"));
        }
        Ok(Self { pairs_per_s })
    }

    pub fn pairs_per_s(&self) -> T {
        self.pairs_per_s
    }

    /// Effective coincidence constant `C0·η₁·η₂`.
    pub fn effective(&self, det: &DetectorModel<T>) -> T {
        self.pairs_per_s * det.eta1 * det.eta2
    }
}

/// One analyzer configuration and its dwell time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting<T> {
    pub theta1: T,
    pub theta2: T,
    /// Seconds.
    pub duration: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionPlan<T> {
    settings: Vec<Setting<T>>,
}

impl<T: Scalar> AcquisitionPlan<T> {
    pub fn new(settings: Vec<Setting<T>>) -> Result<Self> {
        if settings.is_empty() {
            return Err(invalid("plan", "must contain at least one setting"));
        }
        for s in &settings {
            if !s.duration.is_finite() || s.duration <= T::zero() {
                return Err(invalid("duration", "every dwell time must be positive"));
            }
            if !s.theta1.is_finite() || !s.theta2.is_finite() {
                return Err(invalid("theta", "analyzer angles must be finite"));
            }
        }
        Ok(Self { settings })
    }

    /// Fixed `theta2`, `theta1` over the given list, equal dwell.
    pub fn theta1_scan(theta1: &[T], theta2: T, duration: T) -> Result<Self> {
        Self::new(
            theta1
                .iter()
                .map(|&t| Setting {
                    theta1: t,
                    theta2,
                    duration,
                })
                .collect(),
        )
    }

    /// `θ₁ ∈ {0°, 45°, 90°}` at `θ₂ = 45°`.
    pub fn three_angle(duration: T) -> Result<Self> {
        let q = T::FRAC_PI_4();
        Self::theta1_scan(&[T::zero(), q, T::FRAC_PI_2()], q, duration)
    }

    pub fn settings(&self) -> &[Setting<T>] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }
}

/// Coincidences registered at one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord<T> {
    pub theta1: T,
    pub theta2: T,
    pub duration: T,
    pub counts: u64,
}

/// Closed-form coincidence rate with visibility `v` on the cross term.
pub fn coincidence_rate<T: Scalar>(c: T, params: &SampleParams<T>, theta1: T, theta2: T, v: T) -> T {
    let beta = params.beta();
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let direct = beta * beta * c1 * c1 * s2 * s2 + s1 * s1 * c2 * c2;
    let cross = T::two() * v * beta * params.delta().cos() * c1 * s1 * c2 * s2;
    c * (direct + cross)
}

/// Source state after the sample factor `diag(β e^{iΔ}, 1)` has been
/// attached to the `|H·⟩ / |V·⟩` amplitudes in the slot that reproduces
/// the closed-form rate: `(β e^{iΔ}|HV⟩ + |VH⟩)/√2`.
pub fn sample_state<T: Scalar>(params: &SampleParams<T>) -> TwoPhotonState<T> {
    apply_local(&entangled_state(), &sample_jones(params), &JonesOperator::identity())
}

/// Rate from explicit projection of [`sample_state`], `V = 1`.
pub fn projected_rate<T: Scalar>(c: T, params: &SampleParams<T>, theta1: T, theta2: T) -> T {
    let amp: Complex<T> = coincidence_amplitude(&sample_state(params), theta1, theta2);
    c * T::lit(QUANTUM_RATE_FACTOR) * amp.norm_sqr()
}

/// Mean counts per setting: `(rate(C0·η₁·η₂) + accidentals)·duration`.
pub fn expected_counts<T: Scalar>(
    plan: &AcquisitionPlan<T>,
    scale: &ExperimentScale<T>,
    det: &DetectorModel<T>,
    params: &SampleParams<T>,
) -> Vec<T> {
    let c = scale.effective(det);
    plan.settings
        .iter()
        .map(|s| (coincidence_rate(c, params, s.theta1, s.theta2, det.visibility) + det.accidental_rate) * s.duration)
        .collect()
}

/// Generator for record `index` under `seed`: ChaCha8 keyed by the seed,
/// with the record index selecting the stream.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One Poisson draw; a zero (or negative) mean yields zero.
pub fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean below MAX_LAMBDA");
    dist.sample(rng) as u64
}

/// Shot-noise realization of [`expected_counts`]. Record `i` depends only
/// on `(seed, i)` and its mean.
pub fn simulate_counts<T: Scalar>(
    plan: &AcquisitionPlan<T>,
    scale: &ExperimentScale<T>,
    det: &DetectorModel<T>,
    params: &SampleParams<T>,
    seed: u64,
) -> Vec<CountRecord<T>> {
    let means = expected_counts(plan, scale, det, params);
    plan.settings
        .iter()
        .zip(means)
        .enumerate()
        .map(|(i, (s, mean))| {
            let mut rng = record_rng(seed, i as u64);
            CountRecord {
                theta1: s.theta1,
                theta2: s.theta2,
                duration: s.duration,
                counts: poisson_draw(&mut rng, mean.as_f64()),
            }
        })
        .collect()
}

/// Fringe visibility `(max − min)/(max + min)` of a `θ₁` sweep given as
/// `(θ₁, rate)` pairs.
pub fn visibility<T: Scalar>(samples: &[(T, T)]) -> Result<T> {
    if samples.len() < 8 {
        return Err(Error::InvalidData(format!(
            "visibility needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    let (lo_t, hi_t) = samples
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    if hi_t - lo_t < T::PI() - T::lit(1e-9) {
        return Err(Error::InvalidData("visibility sweep must span at least pi in theta1".into()));
    }
    let (min, max) = samples
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &(_, r)| (lo.min(r), hi.max(r)));
    if max + min <= T::zero() {
        return Err(Error::InvalidData("all-zero fringe".into()));
    }
    Ok((max - min) / (max + min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mirror() -> SampleParams<f64> {
        SampleParams::mirror()
    }

    #[test]
    fn rate_examples() {
        let d = |x: f64| x.to_radians();
        assert!((coincidence_rate(2.0, &mirror(), 0.0, d(45.0), 1.0) - 1.0).abs() < 1e-15);
        let anti = SampleParams::new(PI / 4.0, PI).unwrap();
        assert!(coincidence_rate(2.0, &anti, d(45.0), d(45.0), 1.0).abs() < 1e-15);
        assert!((coincidence_rate(1.0, &mirror(), d(30.0), d(60.0), 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_is_pi_periodic_in_theta1() {
        let p = SampleParams::from_beta(1.7, 0.9).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.13;
            let a = coincidence_rate(3.0, &p, t, 0.7, 0.8);
            let b = coincidence_rate(3.0, &p, t + PI, 0.7, 0.8);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn idler_placement_transposes_analyzers() {
        // Sample on the idler slot equals the closed form with θ₁ ↔ θ₂.
        let p = SampleParams::<f64>::from_beta(1.7, 0.6).unwrap();
        let st = apply_local(&entangled_state(), &JonesOperator::identity(), &sample_jones(&p));
        let (t1, t2) = (0.3f64, 1.1f64);
        let q = 2.0 * coincidence_amplitude(&st, t1, t2).norm_sqr();
        assert!((q - coincidence_rate(1.0, &p, t2, t1, 1.0)).abs() < 1e-12);
        assert!((projected_rate(1.0, &p, t1, t2) - coincidence_rate(1.0, &p, t1, t2, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn expected_counts_examples() {
        let plan = AcquisitionPlan::theta1_scan(&[0.0, 0.4, 1.3], 0.8, 2.5).unwrap();
        let scale = ExperimentScale::new(1000.0).unwrap();
        let p = SampleParams::<f64>::from_beta(0.6, 1.0).unwrap();
        let ideal = DetectorModel::ideal();
        let means: Vec<f64> = expected_counts(&plan, &scale, &ideal, &p);
        for (m, s) in means.iter().zip(plan.settings()) {
            assert!((m - coincidence_rate(1000.0, &p, s.theta1, s.theta2, 1.0) * 2.5).abs() < 1e-9);
        }
        let half = DetectorModel::new(1.0, 0.5, 0.0, 1.0).unwrap();
        for (h, m) in expected_counts(&plan, &scale, &half, &p).iter().zip(&means) {
            assert!((h - 0.5 * m).abs() < 1e-9);
        }

        let q = PI / 4.0;
        let plan = AcquisitionPlan::theta1_scan(&[q], q, 1.0).unwrap();
        let det = DetectorModel::new(0.5, 0.5, 10.0, 1.0).unwrap();
        let m = expected_counts(&plan, &ExperimentScale::new(1e4).unwrap(), &det, &mirror());
        assert!((m[0] - 2510.0).abs() < 1e-9);
    }

    #[test]
    fn plan_and_detector_validation() {
        assert!(AcquisitionPlan::<f64>::new(vec![]).is_err());
        assert!(AcquisitionPlan::theta1_scan(&[0.0], 0.1, 0.0).is_err());
        assert!(DetectorModel::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(DetectorModel::new(1.0, 1.2, 0.0, 1.0).is_err());
        assert!(DetectorModel::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(DetectorModel::new(1.0, 1.0, 0.0, 1.5).is_err());
        assert!(ExperimentScale::new(0.0f64).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let plan = AcquisitionPlan::theta1_scan(&[0.0, 0.5, 1.0, 1.5], PI / 4.0, 1.0).unwrap();
        let scale = ExperimentScale::new(5000.0).unwrap();
        let det = DetectorModel::new(0.7, 0.6, 3.0, 0.95).unwrap();
        let a = simulate_counts(&plan, &scale, &det, &mirror(), 42);
        let b = simulate_counts(&plan, &scale, &det, &mirror(), 42);
        assert_eq!(a, b);
        let c = simulate_counts(&plan, &scale, &det, &mirror(), 43);
        assert_ne!(a, c);
    }

    #[test]
    fn record_stream_ignores_neighbours() {
        // Record i must not depend on how many records precede or follow it.
        let scale = ExperimentScale::new(800.0).unwrap();
        let det = DetectorModel::ideal();
        let long = AcquisitionPlan::theta1_scan(&[0.1, 0.2, 0.3, 0.4], 0.9, 1.0).unwrap();
        let short = AcquisitionPlan::theta1_scan(&[0.1, 0.2], 0.9, 1.0).unwrap();
        let a = simulate_counts(&long, &scale, &det, &mirror(), 9);
        let b = simulate_counts(&short, &scale, &det, &mirror(), 9);
        assert_eq!(&a[..2], &b[..]);
    }

    #[test]
    fn zero_mean_gives_zero_counts() {
        let anti = SampleParams::new(PI / 4.0, PI).unwrap();
        let q = PI / 4.0;
        let plan = AcquisitionPlan::theta1_scan(&[q; 16], q, 10.0).unwrap();
        let recs = simulate_counts(&plan, &ExperimentScale::new(1e5).unwrap(), &DetectorModel::ideal(), &anti, 1);
        assert!(recs.iter().all(|r| r.counts == 0));
    }

    #[test]
    fn poisson_moments_at_mean_100() {
        let n = 10_000u64;
        let draws: Vec<f64> = (0..n).map(|i| poisson_draw(&mut record_rng(2024, i), 100.0) as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((97.0..=103.0).contains(&mean), "mean {mean}");
        assert!((85.0..=115.0).contains(&var), "var {var}");
    }

    fn sweep(v: f64) -> Vec<(f64, f64)> {
        let det = DetectorModel::new(1.0, 1.0, 0.0, v).unwrap();
        (0..=720)
            .map(|i| {
                let t = i as f64 * PI / 720.0;
                (t, coincidence_rate(1.0, &mirror(), t, PI / 4.0, det.visibility))
            })
            .collect()
    }

    #[test]
    fn visibility_examples() {
        assert!((visibility(&sweep(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((visibility(&sweep(0.9)).unwrap() - 0.9).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (0..16).map(|i| (i as f64 * 0.25, 3.0)).collect();
        assert_eq!(visibility(&flat).unwrap(), 0.0);
    }

    #[test]
    fn visibility_rejects_bad_sweeps() {
        let zeros: Vec<(f64, f64)> = (0..16).map(|i| (i as f64 * 0.25, 0.0)).collect();
        assert!(visibility(&zeros).is_err());
        let few: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0 + i as f64)).collect();
        assert!(visibility(&few).is_err());
        let narrow: Vec<(f64, f64)> = (0..16).map(|i| (i as f64 * 0.1, 1.0 + i as f64)).collect();
        assert!(visibility(&narrow).is_err());
    }
}
