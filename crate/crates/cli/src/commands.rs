use qellip::classical::classical_psi_estimate;
use qellip::estimation::{fit_observations, three_angle_from_observations, EllipsometricEstimate, FitOptions, Observation};
use qellip::experiment::{coincidence_rate, expected_counts, simulate_counts, AcquisitionPlan, DetectorModel, ExperimentScale};
use qellip::sample::SampleParams;
use serde_json::{json, Value};

use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::format::{num, read_counts, to_json_text, write_counts, write_fringe, CountsRow};

pub const VERSION: &str = concat!("qellip ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    /// Closed-form inversion from θ₁ ∈ {0°, 45°, 90°} at θ₂ = 45°.
    ThreeAngle,
    /// Poisson maximum-likelihood fit over all rows.
    Fit,
}

impl MethodArg {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodArg::ThreeAngle => "three-angle",
            MethodArg::Fit => "fit",
        }
    }
}

/// Command result: text for the output sink plus the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub code: i32,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, code: 0 }
    }
}

pub fn simulate(cfg: &RunConfig, seed: Option<u64>) -> CliResult<String> {
    let r = cfg.resolve()?;
    let records = simulate_counts(&r.plan, &r.scale, &r.detector, &r.params, seed.unwrap_or(r.seed));
    Ok(write_counts(&r.theta1_deg, r.theta2_deg, &records))
}

/// Noiseless rates (no accidentals) on the configured `θ₁` grid.
pub fn fringe(cfg: &RunConfig) -> CliResult<String> {
    let r = cfg.resolve()?;
    let c = r.scale.effective(&r.detector);
    let theta2 = r.theta2_deg.to_radians();
    let rows: Vec<(f64, f64)> = r
        .theta1_deg
        .iter()
        .map(|&t| (t, coincidence_rate(c, &r.params, t.to_radians(), theta2, r.detector.visibility)))
        .collect();
    Ok(write_fringe(&rows))
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub method: MethodArg,
    pub detector: DetectorModel<f64>,
    pub fit_visibility: bool,
    pub max_iterations: usize,
    pub ground_truth: Option<SampleParams<f64>>,
    pub config: Option<RunConfig>,
}

fn observations(rows: &[CountsRow]) -> Vec<Observation<f64>> {
    rows.iter()
        .map(|r| Observation {
            theta1: r.theta1_deg.to_radians(),
            theta2: r.theta2_deg.to_radians(),
            duration: r.dwell_s,
            counts: r.counts,
        })
        .collect()
}

fn sorted(mut rows: Vec<CountsRow>) -> Vec<CountsRow> {
    rows.sort_by(|a, b| {
        a.theta1_deg
            .total_cmp(&b.theta1_deg)
            .then(a.theta2_deg.total_cmp(&b.theta2_deg))
            .then(a.dwell_s.total_cmp(&b.dwell_s))
            .then(a.counts.total_cmp(&b.counts))
    });
    rows
}

/// Estimate from count rows; the rows are sorted first so the report does
/// not depend on file order.
pub fn estimate_rows(rows: Vec<CountsRow>, opts: &EstimateOptions) -> CliResult<(Option<EllipsometricEstimate<f64>>, Output)> {
    let rows = sorted(rows);
    let obs = observations(&rows);
    let det = &opts.detector;
    let result = match opts.method {
        MethodArg::ThreeAngle => three_angle_from_observations(&obs, det.accidental_rate),
        MethodArg::Fit => {
            let fit = FitOptions::new(opts.max_iterations, 1e-10, opts.fit_visibility)
                .map_err(|e| CliError::Config(format!("--max-iterations: {e}")))?;
            fit_observations(&obs, det, None, &fit)
        }
    };
    match result {
        Ok(est) => {
            let v = match opts.method {
                MethodArg::ThreeAngle => 1.0,
                MethodArg::Fit => est.visibility_hat.unwrap_or(det.visibility),
            };
            let residuals = residuals(&rows, est.c_hat, est.psi_hat, est.delta_mag_hat, v, det.accidental_rate);
            let report = json!({
                "version": VERSION,
                "method": opts.method.as_str(),
                "converged": true,
                "psi_deg": num(est.psi_hat.to_degrees()),
                "delta_deg": num(est.delta_mag_hat.to_degrees()),
                "C_hat": num(est.c_hat),
                "cov": cov_external(&est.covariance),
                "std_err": std_err_external(&est),
                "visibility_hat": est.visibility_hat.map_or(Value::Null, num),
                "warnings": est.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "residuals": residuals,
                "ground_truth": truth_json(opts.ground_truth.as_ref()),
                "detector": detector_json(det),
                "config": config_json(opts.config.as_ref()),
            });
            Ok((Some(est), Output::ok(to_json_text(&report))))
        }
        Err(qellip::Error::NonConvergence {
            iterations,
            best,
            best_objective,
        }) => {
            let [c, psi, delta] = best;
            let residuals = residuals(&rows, c, psi, delta, det.visibility, det.accidental_rate);
            let report = json!({
                "version": VERSION,
                "method": opts.method.as_str(),
                "converged": false,
                "iterations": iterations,
                "objective": num(best_objective),
                "psi_deg": num(psi.to_degrees()),
                "delta_deg": num(delta.to_degrees()),
                "C_hat": num(c),
                "cov": Value::Null,
                "warnings": [format!("fit did not converge within {iterations} iterations; best iterate reported")],
                "residuals": residuals,
                "ground_truth": truth_json(opts.ground_truth.as_ref()),
                "detector": detector_json(det),
                "config": config_json(opts.config.as_ref()),
            });
            Ok((None, Output { body: to_json_text(&report), code: 4 }))
        }
        Err(e) => Err(CliError::from_estimation(e)),
    }
}

pub fn estimate(counts_csv: &str, opts: &EstimateOptions) -> CliResult<Output> {
    estimate_rows(read_counts(counts_csv)?, opts).map(|(_, out)| out)
}

fn residuals(rows: &[CountsRow], c: f64, psi: f64, delta: f64, v: f64, accidental_rate: f64) -> Vec<Value> {
    let params = SampleParams::new(psi, delta).ok();
    rows.iter()
        .map(|r| {
            let expected = params.as_ref().map_or(f64::NAN, |p| {
                let rate = coincidence_rate(c, p, r.theta1_deg.to_radians(), r.theta2_deg.to_radians(), v);
                (rate + accidental_rate) * r.dwell_s
            });
            let pearson = if expected > 0.0 { (r.counts - expected) / expected.sqrt() } else { 0.0 };
            json!({
                "theta1_deg": num(r.theta1_deg),
                "theta2_deg": num(r.theta2_deg),
                "dwell_s": num(r.dwell_s),
                "observed": num(r.counts),
                "expected": num(expected),
                "pearson": num(pearson),
            })
        })
        .collect()
}

/// Covariance of `(C, ψ, |Δ|)` with the angles in degrees.
fn cov_external(cov: &[[f64; 3]; 3]) -> Value {
    let s = [1.0, 1f64.to_degrees(), 1f64.to_degrees()];
    Value::Array(
        (0..3)
            .map(|i| Value::Array((0..3).map(|j| num(cov[i][j] * s[i] * s[j])).collect()))
            .collect(),
    )
}

fn std_err_external(est: &EllipsometricEstimate<f64>) -> Value {
    let [c, psi, delta] = est.std_errors();
    json!({ "C": num(c), "psi_deg": num(psi.to_degrees()), "delta_deg": num(delta.to_degrees()) })
}

fn truth_json(p: Option<&SampleParams<f64>>) -> Value {
    p.map_or(Value::Null, |p| {
        json!({
            "psi_deg": num(p.psi().to_degrees()),
            "delta_deg": num(p.delta().to_degrees()),
            "delta_mag_deg": num(p.delta().abs().to_degrees()),
        })
    })
}

fn detector_json(det: &DetectorModel<f64>) -> Value {
    json!({ "accidental_per_s": num(det.accidental_rate), "visibility": num(det.visibility) })
}

fn config_json(cfg: Option<&RunConfig>) -> Value {
    cfg.map_or(Value::Null, |c| serde_json::to_value(c).expect("config serializes"))
}

/// Classical and quantum `ψ` for the same sample and the same gain factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineResult {
    pub classical_psi: f64,
    pub quantum_psi: f64,
    pub true_psi: f64,
}

/// The gain factor multiplies every coincidence rate of the quantum run
/// (on top of the configured detectors) and the second intensity of the
/// classical one.
pub fn baseline_psi(r: &Resolved, method: MethodArg, noiseless: bool, seed: u64) -> CliResult<BaselineResult> {
    let inst = r
        .instrument
        .ok_or_else(|| CliError::Config("instrument: block required for baseline".into()))?;
    let classical_psi = classical_psi_estimate(&r.params, &inst);

    let scale = ExperimentScale::new(r.scale.pairs_per_s() * inst.gain_drift)
        .map_err(|e| CliError::Config(format!("scale: {e}")))?;
    let dwell = r.plan.settings()[0].duration;
    let plan = match method {
        MethodArg::ThreeAngle => AcquisitionPlan::three_angle(dwell).expect("positive dwell"),
        MethodArg::Fit => r.plan.clone(),
    };
    let counts: Vec<f64> = if noiseless {
        expected_counts(&plan, &scale, &r.detector, &r.params)
    } else {
        simulate_counts(&plan, &scale, &r.detector, &r.params, seed)
            .iter()
            .map(|rec| rec.counts as f64)
            .collect()
    };
    let obs: Vec<Observation<f64>> = plan
        .settings()
        .iter()
        .zip(counts)
        .map(|(s, n)| Observation {
            theta1: s.theta1,
            theta2: s.theta2,
            duration: s.duration,
            counts: n,
        })
        .collect();
    let est = match method {
        MethodArg::ThreeAngle => three_angle_from_observations(&obs, r.detector.accidental_rate),
        MethodArg::Fit => fit_observations(&obs, &r.detector, None, &FitOptions::default()),
    }
    .map_err(CliError::from_estimation)?;
    Ok(BaselineResult {
        classical_psi,
        quantum_psi: est.psi_hat,
        true_psi: r.params.psi(),
    })
}

pub fn baseline(cfg: &RunConfig, method: MethodArg, noiseless: bool, seed: Option<u64>) -> CliResult<String> {
    let r = cfg.resolve()?;
    let seed = seed.unwrap_or(r.seed);
    let b = baseline_psi(&r, method, noiseless, seed)?;
    let inst = r.instrument.expect("checked by baseline_psi");
    let report = json!({
        "version": VERSION,
        "method": method.as_str(),
        "noiseless": noiseless,
        "seed": seed,
        "gain_drift": num(inst.gain_drift),
        "extinction": num(inst.extinction),
        "classical_psi_deg": num(b.classical_psi.to_degrees()),
        "quantum_psi_deg": num(b.quantum_psi.to_degrees()),
        "true_psi_deg": num(b.true_psi.to_degrees()),
    });
    Ok(to_json_text(&report))
}
