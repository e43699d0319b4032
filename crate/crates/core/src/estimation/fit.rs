//! Poisson maximum-likelihood fit of `(C, β, Δ[, V])` over arbitrary plans.
//!
//! Internal coordinates are `(ln C, ln β, Δ[, V])`. Minimization is
//! Fisher scoring with Levenberg–Marquardt damping on the Poisson deviance
//! (negative log-likelihood minus its saturated value). The reported
//! covariance is the inverse of the observed information, obtained by
//! central second differences of the objective and propagated to
//! `(C, ψ, |Δ|)`.

use super::three_angle::three_angle_from_observations;
use super::{EllipsometricEstimate, Method, Observation, Warning};
use crate::error::{invalid, Error, Result};
use crate::experiment::{CountRecord, DetectorModel};
use crate::linalg::{cholesky, cholesky_solve, correlation_form, invert_spd, zeros, Mat};
use crate::scalar::{wrap_pi, Scalar};

const LN_C: usize = 0;
const LN_BETA: usize = 1;
const DELTA: usize = 2;
const VIS: usize = 3;

/// Seeds keep `Δ` this far from 0 and π, where `∂rate/∂Δ` vanishes.
const SEED_DELTA_MARGIN: f64 = 0.05;
/// Unconstrained optima closer than this to 0 or π are compared against the
/// boundary value.
const BOUNDARY_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the Newton decrement `√(gᵀF⁻¹g)`.
    pub gradient_tolerance: f64,
    pub fit_visibility: bool,
}

impl FitOptions {
    pub fn new(max_iterations: usize, gradient_tolerance: f64, fit_visibility: bool) -> Result<Self> {
        if max_iterations < 1 {
            return Err(invalid("max_iterations", "must be >= 1"));
        }
        if !(gradient_tolerance > 0.0) || !gradient_tolerance.is_finite() {
            return Err(invalid("gradient_tolerance", "must be positive"));
        }
        Ok(Self {
            max_iterations,
            gradient_tolerance,
            fit_visibility,
        })
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            fit_visibility: false,
        }
    }
}

/// Poisson likelihood of a set of observations as a function of
/// `(ln C, ln β, Δ[, V])`.
#[derive(Debug, Clone)]
pub struct PoissonObjective<'a, T> {
    obs: &'a [Observation<T>],
    accidental_rate: T,
    visibility: T,
    fit_visibility: bool,
}

impl<'a, T: Scalar> PoissonObjective<'a, T> {
    pub fn new(obs: &'a [Observation<T>], det: &DetectorModel<T>, fit_visibility: bool) -> Self {
        Self {
            obs,
            accidental_rate: det.accidental_rate,
            visibility: det.visibility,
            fit_visibility,
        }
    }

    pub fn dim(&self) -> usize {
        if self.fit_visibility {
            4
        } else {
            3
        }
    }

    /// Mean count of observation `o` and its gradient.
    fn mean_and_gradient(&self, theta: &[T], o: &Observation<T>) -> (T, [T; 4]) {
        let c = theta[LN_C].exp();
        let beta = theta[LN_BETA].exp();
        let delta = theta[DELTA];
        let v = if self.fit_visibility { theta[VIS] } else { self.visibility };
        let (s1, c1) = o.theta1.sin_cos();
        let (s2, c2) = o.theta2.sin_cos();
        let a = c1 * c1 * s2 * s2;
        let b = s1 * s1 * c2 * c2;
        let x = T::two() * c1 * s1 * c2 * s2;
        let (sd, cd) = delta.sin_cos();
        // Sum of squares so extinction settings never round to a negative mean.
        let re = beta * cd * c1 * s2 + s1 * c2;
        let im = beta * sd * c1 * s2;
        let shape = (T::one() - v) * (beta * beta * a + b) + v * (re * re + im * im);
        let t = o.duration;
        let mean = (c * shape + self.accidental_rate) * t;
        let grad = [
            c * shape * t,
            c * (T::two() * beta * beta * a + v * beta * cd * x) * t,
            -c * v * beta * sd * x * t,
            c * beta * cd * x * t,
        ];
        (mean, grad)
    }

    /// Expected counts per observation.
    pub fn means(&self, theta: &[T]) -> Vec<T> {
        self.obs.iter().map(|o| self.mean_and_gradient(theta, o).0).collect()
    }

    /// `Σ μᵢ − nᵢ ln μᵢ`; `+∞` where a positive count meets a non-positive mean.
    pub fn nll(&self, theta: &[T]) -> T {
        let mut total = T::zero();
        for o in self.obs {
            let (mu, _) = self.mean_and_gradient(theta, o);
            if mu < T::zero() || (mu == T::zero() && o.counts > T::zero()) {
                return T::infinity();
            }
            total = total + mu;
            if o.counts > T::zero() {
                total = total - o.counts * mu.ln();
            }
        }
        total
    }

    /// `Σ μᵢ − nᵢ − nᵢ ln(μᵢ/nᵢ)`: the NLL shifted by its saturated value,
    /// non-negative and accurate near a good fit.
    pub fn deviance(&self, theta: &[T]) -> T {
        let mut total = T::zero();
        for o in self.obs {
            let (mu, _) = self.mean_and_gradient(theta, o);
            let n = o.counts;
            let term = if n > T::zero() {
                if !(mu > T::zero()) {
                    return T::infinity();
                }
                let rho = (mu - n) / n;
                n * (rho - rho.ln_1p())
            } else if mu < T::zero() {
                return T::infinity();
            } else {
                mu
            };
            total = total + term;
        }
        total
    }

    /// Analytic gradient `Σ (1 − nᵢ/μᵢ) ∂μᵢ/∂θ`.
    pub fn gradient(&self, theta: &[T]) -> Vec<T> {
        let d = self.dim();
        let mut g = vec![T::zero(); d];
        for o in self.obs {
            let (mu, dmu) = self.mean_and_gradient(theta, o);
            let w = if o.counts > T::zero() {
                T::one() - o.counts / mu.max(T::min_positive_value())
            } else {
                T::one()
            };
            for j in 0..d {
                g[j] = g[j] + w * dmu[j];
            }
        }
        g
    }

    /// Expected information `Σ ∂μ ∂μᵀ / μ`.
    pub fn fisher(&self, theta: &[T]) -> Vec<Vec<T>> {
        let d = self.dim();
        let mut f = zeros(d);
        let c = theta[LN_C].exp();
        for o in self.obs {
            let (mu, dmu) = self.mean_and_gradient(theta, o);
            // ∂μ²/μ is 0/0 at extinction; such rows only add rounding noise
            if mu <= T::lit(1e-12) * c * o.duration {
                continue;
            }
            let inv = T::one() / mu;
            for i in 0..d {
                for j in 0..d {
                    f[i][j] = f[i][j] + dmu[i] * dmu[j] * inv;
                }
            }
        }
        f
    }
}

fn submatrix<T: Scalar>(m: &Mat<T>, idx: &[usize]) -> Mat<T> {
    idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect()
}

/// `gᵀ(F + ridge)⁻¹g`, the squared Newton decrement.
fn decrement<T: Scalar>(f: &Mat<T>, g: &[T]) -> Option<T> {
    let n = f.len();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(f[i][i]));
    let mut reg = f.clone();
    for (i, row) in reg.iter_mut().enumerate() {
        row[i] = row[i] + scale * T::lit(1e-14);
    }
    let l = cholesky(&reg)?;
    let x = cholesky_solve(&l, g);
    Some(g.iter().zip(&x).fold(T::zero(), |s, (a, b)| s + *a * *b))
}

struct Outcome<T> {
    theta: Vec<T>,
    objective: T,
    converged: bool,
    iterations: usize,
}

fn minimize<T: Scalar>(obj: &PoissonObjective<'_, T>, theta0: Vec<T>, free: &[usize], opts: &FitOptions) -> Outcome<T> {
    let tol = T::lit(opts.gradient_tolerance);
    let mut theta = theta0;
    let mut f = obj.deviance(&theta);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let done = |theta, objective, converged, iterations| Outcome {
        theta,
        objective,
        converged,
        iterations,
    };
    if !f.is_finite() {
        return done(theta, f, false, 0);
    }
    while iterations < opts.max_iterations {
        iterations += 1;
        let g_all = obj.gradient(&theta);
        let g: Vec<T> = free.iter().map(|&i| g_all[i]).collect();
        let fi = submatrix(&obj.fisher(&theta), free);
        let dec = match decrement(&fi, &g) {
            Some(d) => d.max(T::zero()).sqrt(),
            None => return done(theta, f, false, iterations),
        };
        if dec < tol {
            return done(theta, f, true, iterations);
        }
        let scale = (0..fi.len()).fold(T::zero(), |m, i| m.max(fi[i][i]));
        let floor = scale * T::lit(1e-12);
        loop {
            let mut a = fi.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = row[i] + lambda * fi[i][i].max(floor);
            }
            let accepted = cholesky(&a).and_then(|l| {
                let neg: Vec<T> = g.iter().map(|&x| -x).collect();
                let step = cholesky_solve(&l, &neg);
                let mut trial = theta.clone();
                for (k, &i) in free.iter().enumerate() {
                    trial[i] = trial[i] + step[k];
                }
                let ft = obj.deviance(&trial);
                (ft.is_finite() && ft <= f).then_some((trial, ft))
            });
            if let Some((trial, ft)) = accepted {
                theta = trial;
                f = ft;
                lambda = (lambda * T::lit(0.1)).max(T::lit(1e-15));
                break;
            }
            lambda = lambda * T::lit(10.0);
            if lambda > T::lit(1e20) {
                // No descent left at working precision.
                return done(theta, f, dec < tol.sqrt(), iterations);
            }
        }
    }
    done(theta, f, false, iterations)
}

fn distinct_settings<T: Scalar>(obs: &[Observation<T>]) -> usize {
    let tol = T::lit(1e-12);
    let mut seen: Vec<(T, T)> = Vec::new();
    for o in obs {
        if !seen.iter().any(|&(a, b)| (a - o.theta1).abs() <= tol && (b - o.theta2).abs() <= tol) {
            seen.push((o.theta1, o.theta2));
        }
    }
    seen.len()
}

/// Profile-optimal `ln C` for fixed shape parameters (exact without
/// background, approximate with it).
fn profile_ln_c<T: Scalar>(obj: &PoissonObjective<'_, T>, theta: &mut [T]) {
    theta[LN_C] = T::zero();
    let mut counts = T::zero();
    let mut signal = T::zero();
    let mut background = T::zero();
    for o in obj.obs {
        let (mu, _) = obj.mean_and_gradient(theta, o);
        let b = obj.accidental_rate * o.duration;
        counts = counts + o.counts;
        signal = signal + (mu - b);
        background = background + b;
    }
    let c = ((counts - background) / signal).max(T::lit(1e-12) * (counts / signal).max(T::one()));
    theta[LN_C] = if c.is_finite() && c > T::zero() { c.ln() } else { T::zero() };
}

fn clamp_seed_delta<T: Scalar>(delta: T) -> T {
    let m = T::lit(SEED_DELTA_MARGIN);
    delta.abs().max(m).min(T::PI() - m)
}

fn seed<T: Scalar>(
    obj: &PoissonObjective<'_, T>,
    det: &DetectorModel<T>,
    init: Option<&EllipsometricEstimate<T>>,
) -> Vec<T> {
    let d = obj.dim();
    let v0 = det.visibility;
    let make = |ln_beta: T, delta: T| {
        let mut th = vec![T::zero(), ln_beta, clamp_seed_delta(delta), v0];
        th.truncate(d);
        th
    };
    if let Some(e) = init {
        let mut th = make(e.beta_hat().ln(), e.delta_mag_hat);
        th[LN_C] = e.c_hat.ln();
        if obj.fit_visibility {
            th[VIS] = e.visibility_hat.unwrap_or(v0);
        }
        return th;
    }
    let mut candidates: Vec<Vec<T>> = Vec::new();
    if let Ok(e) = three_angle_from_observations(obj.obs, obj.accidental_rate) {
        let lb = e.beta_hat().ln();
        if lb.is_finite() {
            candidates.push(make(lb, e.delta_mag_hat));
        }
    }
    for beta in [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
        for k in 0..6 {
            let delta = (2 * k + 1) as f64 * std::f64::consts::PI / 12.0;
            candidates.push(make(T::lit(beta).ln(), T::lit(delta)));
        }
    }
    let mut best: Option<(T, Vec<T>)> = None;
    for mut th in candidates {
        profile_ln_c(obj, &mut th);
        let f = obj.deviance(&th);
        if f.is_finite() && best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, th));
        }
    }
    best.map(|(_, th)| th).unwrap_or_else(|| make(T::zero(), T::FRAC_PI_2()))
}

/// Central second differences of the objective in internal coordinates.
fn observed_information<T: Scalar>(obj: &PoissonObjective<'_, T>, theta: &[T]) -> Mat<T> {
    let d = obj.dim();
    let fisher = obj.fisher(theta);
    let h: Vec<T> = (0..d)
        .map(|j| {
            let sigma = if fisher[j][j] > T::zero() {
                T::one() / fisher[j][j].sqrt()
            } else {
                T::one()
            };
            (T::lit(1e-3) * sigma).max(T::lit(1e-7)).min(T::lit(1e-2))
        })
        .collect();
    let at = |shifts: &[(usize, T)]| {
        let mut th = theta.to_vec();
        for &(j, s) in shifts {
            th[j] = th[j] + s;
        }
        obj.deviance(&th)
    };
    let f0 = obj.deviance(theta);
    let mut hess = zeros(d);
    for i in 0..d {
        hess[i][i] = (at(&[(i, h[i])]) - T::two() * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (T::lit(4.0) * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

fn covariance_from_information<T: Scalar>(info: &Mat<T>, warnings: &mut Vec<Warning>) -> Mat<T> {
    if let Some(inv) = invert_spd(info) {
        return inv;
    }
    warnings.push(Warning::SingularInformation);
    let d = info.len();
    let scale = (0..d).fold(T::zero(), |m, i| m.max(info[i][i].abs())).max(T::min_positive_value());
    // Project onto the PSD cone via a diagonal ridge large enough for Cholesky.
    let mut ridge = scale * T::lit(1e-9);
    loop {
        let mut reg = info.clone();
        for (i, row) in reg.iter_mut().enumerate() {
            row[i] = row[i].max(T::zero()) + ridge;
        }
        if let Some(inv) = invert_spd(&reg) {
            return inv;
        }
        ridge = ridge * T::lit(10.0);
    }
}

fn summarize<T: Scalar>(theta: &[T]) -> [f64; 3] {
    let beta = theta[LN_BETA].exp();
    [
        theta[LN_C].exp().as_f64(),
        (beta * beta).atan().as_f64(),
        wrap_pi(theta[DELTA]).abs().as_f64(),
    ]
}

/// Maximum-likelihood estimate from real-valued observations.
pub fn fit_observations<T: Scalar>(
    obs: &[Observation<T>],
    det: &DetectorModel<T>,
    init: Option<&EllipsometricEstimate<T>>,
    opts: &FitOptions,
) -> Result<EllipsometricEstimate<T>> {
    let obj = PoissonObjective::new(obs, det, opts.fit_visibility);
    let d = obj.dim();
    if obs.len() < d {
        return Err(Error::Unidentifiable(format!("need at least {d} records, got {}", obs.len())));
    }
    if obs.iter().any(|o| !(o.duration > T::zero()) || o.counts < T::zero() || !o.counts.is_finite()) {
        return Err(Error::InvalidData("durations must be positive and counts non-negative".into()));
    }
    let distinct = distinct_settings(obs);
    if distinct < d {
        return Err(Error::Unidentifiable(format!(
            "{distinct} distinct analyzer setting(s); at least {d} required"
        )));
    }

    let theta0 = seed(&obj, det, init);
    let identifiable = correlation_form(&obj.fisher(&theta0))
        .and_then(|c| cholesky(&c))
        .is_some_and(|l| (0..d).all(|i| l[i][i] * l[i][i] > T::lit(1e-10)));
    if !identifiable {
        return Err(Error::Unidentifiable("information matrix is rank deficient for this plan".into()));
    }

    let all: Vec<usize> = (0..d).collect();
    let out = minimize(&obj, theta0, &all, opts);
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            best: summarize(&out.theta),
            best_objective: out.objective.as_f64(),
        });
    }
    let mut theta = out.theta;
    let mut objective = out.objective;
    let mut warnings = Vec::new();

    let wrapped = wrap_pi(theta[DELTA]).abs();
    let window = T::lit(BOUNDARY_WINDOW);
    for boundary in [T::zero(), T::PI()] {
        if (wrapped - boundary).abs() >= window {
            continue;
        }
        let mut fixed = theta.clone();
        fixed[DELTA] = boundary;
        let free: Vec<usize> = all.iter().copied().filter(|&i| i != DELTA).collect();
        let pinned = minimize(&obj, fixed, &free, opts);
        let slack = T::lit(1e-12) * objective.max(T::one());
        if pinned.converged && pinned.objective <= objective + slack {
            theta = pinned.theta;
            objective = pinned.objective;
            warnings.push(Warning::DeltaAtBoundary);
        }
    }

    let info = observed_information(&obj, &theta);
    let cov_internal = covariance_from_information(&info, &mut warnings);

    let c_hat = theta[LN_C].exp();
    let beta = theta[LN_BETA].exp();
    let b2 = beta * beta;
    let jac = [c_hat, T::two() * b2 / (T::one() + b2 * b2), T::one()];
    let mut covariance = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = jac[i] * cov_internal[i][j] * jac[j];
        }
    }
    Ok(EllipsometricEstimate {
        c_hat,
        psi_hat: b2.atan(),
        delta_mag_hat: wrap_pi(theta[DELTA]).abs(),
        covariance,
        method: Method::LeastSquares,
        warnings,
        visibility_hat: opts.fit_visibility.then(|| theta[VIS]),
    })
}

/// Maximum-likelihood estimate from integer count records.
pub fn least_squares_fit<T: Scalar>(
    records: &[CountRecord<T>],
    det: &DetectorModel<T>,
    init: Option<&EllipsometricEstimate<T>>,
    opts: &FitOptions,
) -> Result<EllipsometricEstimate<T>> {
    let obs: Vec<Observation<T>> = records.iter().map(Observation::from).collect();
    fit_observations(&obs, det, init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::three_angle_invert;
    use crate::experiment::{coincidence_rate, simulate_counts, AcquisitionPlan, ExperimentScale};
    use crate::sample::SampleParams;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn noiseless(c: f64, p: &SampleParams<f64>, det: &DetectorModel<f64>, theta1: &[f64], theta2: f64, dwell: f64) -> Vec<Observation<f64>> {
        theta1
            .iter()
            .map(|&t| Observation {
                theta1: t,
                theta2,
                duration: dwell,
                counts: (coincidence_rate(c, p, t, theta2, det.visibility) + det.accidental_rate) * dwell,
            })
            .collect()
    }

    fn grid12() -> Vec<f64> {
        (0..12).map(|i| i as f64 * PI / 12.0).collect()
    }

    #[test]
    fn noiseless_twelve_angle_recovery() {
        let p = SampleParams::from_beta(2f64.sqrt(), 60f64.to_radians()).unwrap();
        let det = DetectorModel::ideal();
        let obs = noiseless(2.0, &p, &det, &grid12(), FRAC_PI_4, 1.0);
        let e = fit_observations(&obs, &det, None, &FitOptions::default()).unwrap();
        assert!((e.c_hat - 2.0).abs() < 1e-9, "C {}", e.c_hat);
        assert!((e.psi_hat - p.psi()).abs() < 1e-9);
        assert!((e.delta_mag_hat - p.delta()).abs() < 1e-9);
        assert_eq!(e.method, Method::LeastSquares);
    }

    #[test]
    fn agrees_with_three_angle_on_noiseless_data() {
        for (beta, delta) in [(0.3, 0.4), (1.0, 2.0), (3.0, 2.9), (0.7, 1.3)] {
            let p = SampleParams::from_beta(beta, delta).unwrap();
            let det = DetectorModel::ideal();
            let obs = noiseless(1e3, &p, &det, &[0.0, FRAC_PI_4, std::f64::consts::FRAC_PI_2], FRAC_PI_4, 1.0);
            let ta = three_angle_invert(obs[0].counts, obs[1].counts, obs[2].counts).unwrap();
            let ls = fit_observations(&obs, &det, None, &FitOptions::default()).unwrap();
            assert!((ta.psi_hat - ls.psi_hat).abs() < 1e-6);
            assert!((ta.delta_mag_hat - ls.delta_mag_hat).abs() < 1e-6);
        }
    }

    #[test]
    fn mirror_snaps_to_zero_delta() {
        let det = DetectorModel::ideal();
        let obs = noiseless(500.0, &SampleParams::mirror(), &det, &grid12(), FRAC_PI_4, 1.0);
        let e = fit_observations(&obs, &det, None, &FitOptions::default()).unwrap();
        // extinction rows carry ~1e-14 rounding counts that a Δ = 0 model can
        // only absorb through β, so ψ is good to a few nanoradians
        let tol = 1e-6f64.to_radians();
        assert!((e.psi_hat - FRAC_PI_4).abs() < tol);
        assert!(e.delta_mag_hat.abs() < tol);
        assert!(e.warnings.contains(&Warning::DeltaAtBoundary));
    }

    #[test]
    fn with_accidentals_and_known_visibility() {
        let p = SampleParams::from_beta(0.8, 1.1).unwrap();
        let det = DetectorModel::new(1.0, 1.0, 5.0, 0.9).unwrap();
        let obs = noiseless(300.0, &p, &det, &grid12(), 0.6, 2.0);
        let e = fit_observations(&obs, &det, None, &FitOptions::default()).unwrap();
        assert!((e.c_hat - 300.0).abs() < 1e-6);
        assert!((e.psi_hat - p.psi()).abs() < 1e-9);
        assert!((e.delta_mag_hat - 1.1).abs() < 1e-8);
    }

    #[test]
    fn free_visibility_is_degenerate_with_delta() {
        // V and Δ only enter through V·cos Δ
        let p = SampleParams::from_beta(0.8, 1.1).unwrap();
        let det = DetectorModel::new(1.0, 1.0, 5.0, 0.9).unwrap();
        let obs = noiseless(300.0, &p, &det, &grid12(), 0.6, 2.0);
        let opts = FitOptions::new(300, 1e-10, true).unwrap();
        assert!(matches!(fit_observations(&obs, &det, None, &opts), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn single_setting_is_unidentifiable() {
        let det = DetectorModel::ideal();
        let obs = noiseless(50.0, &SampleParams::mirror(), &det, &[0.3; 8], FRAC_PI_4, 1.0);
        assert!(matches!(fit_observations(&obs, &det, None, &FitOptions::default()), Err(Error::Unidentifiable(_))));
        // varying θ₁ with θ₂ = 0 only ever sees the sin²θ₁ term
        let obs = noiseless(50.0, &SampleParams::mirror(), &det, &grid12(), 0.0, 1.0);
        assert!(matches!(fit_observations(&obs, &det, None, &FitOptions::default()), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let p = SampleParams::from_beta(1.9, 0.7).unwrap();
        let det = DetectorModel::ideal();
        let obs = noiseless(100.0, &p, &det, &grid12(), 0.5, 1.0);
        let opts = FitOptions::new(1, 1e-14, false).unwrap();
        match fit_observations(&obs, &det, None, &opts) {
            Err(Error::NonConvergence { iterations, best, .. }) => {
                assert_eq!(iterations, 1);
                assert!(best.iter().all(|x| x.is_finite()));
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(FitOptions::new(0, 1e-10, false).is_err());
        assert!(FitOptions::new(10, 0.0, false).is_err());
    }

    #[test]
    fn covariance_is_symmetric_psd_on_noisy_data() {
        let p = SampleParams::from_beta(1.3, 1.7).unwrap();
        let det = DetectorModel::new(0.8, 0.7, 1.0, 1.0).unwrap();
        let plan = AcquisitionPlan::theta1_scan(&grid12(), FRAC_PI_4, 1.0).unwrap();
        let recs = simulate_counts(&plan, &ExperimentScale::new(2e4).unwrap(), &det, &p, 5);
        let e = least_squares_fit(&recs, &det, None, &FitOptions::default()).unwrap();
        let cov: Vec<Vec<f64>> = e.covariance.iter().map(|r| r.to_vec()).collect();
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[i][j] - cov[j][i]).abs() <= 1e-9 * cov[i][i].abs().max(cov[j][j].abs()));
            }
        }
        assert!(cholesky(&cov).is_some());
        // estimate within a few standard errors
        let se = e.std_errors();
        assert!((e.psi_hat - p.psi()).abs() < 5.0 * se[1]);
        assert!((e.delta_mag_hat - p.delta()).abs() < 5.0 * se[2]);
    }

    #[test]
    fn observed_information_matches_fisher_at_noiseless_optimum() {
        // With nᵢ = μᵢ the observed and expected information coincide.
        let p = SampleParams::from_beta(0.9, 1.4).unwrap();
        let det = DetectorModel::ideal();
        let obs = noiseless(1e4, &p, &det, &grid12(), FRAC_PI_4, 1.0);
        let obj = PoissonObjective::new(&obs, &det, false);
        let theta = [1e4f64.ln(), 0.9f64.ln(), 1.4];
        let h = observed_information(&obj, &theta);
        let f = obj.fisher(&theta);
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[i][j] - f[i][j]).abs() < 1e-4 * f[i][i].max(f[j][j]), "[{i}][{j}] {} vs {}", h[i][j], f[i][j]);
            }
        }
    }

    #[test]
    fn deviance_and_nll_differ_by_constant() {
        let det = DetectorModel::new(1.0, 1.0, 2.0, 0.95).unwrap();
        let obs = noiseless(40.0, &SampleParams::from_beta(1.2, 0.3).unwrap(), &det, &grid12(), 0.4, 1.5);
        let obj = PoissonObjective::new(&obs, &det, false);
        let a = [3.0, 0.1, 0.5];
        let b = [3.9, -0.2, 2.0];
        let dn = obj.nll(&a) - obj.nll(&b);
        let dd = obj.deviance(&a) - obj.deviance(&b);
        assert!((dn - dd).abs() < 1e-9 * dn.abs().max(1.0));
    }
}
