//! Run configuration: TOML text → validated simulation inputs.
//!
//! ```toml
//! seed = 7
//!
//! [sample]
//! kind = "direct"          # or "mirror", "interface", "stack"
//! psi_deg = 30.0
//! delta_deg = 60.0
//!
//! [detector]
//! eta1 = 0.5
//! eta2 = 0.5
//! accidental_per_s = 0.0
//! visibility = 1.0
//!
//! [scale]
//! pairs_per_s = 1e4
//!
//! [plan]
//! theta2_deg = 45.0
//! sweep = { start = 0.0, stop = 180.0, step = 15.0 }   # or theta1_list_deg = [...]
//! dwell_s = 1.0
//! ```
//!
//! `interface` takes `angle_deg`, `n_re`, `n_im` and optional `n_ambient`;
//! `stack` takes `wavelength_nm`, `angle_deg`, optional `n_ambient`,
//! `substrate = { n_re, n_im }` and `[[sample.layers]]` entries with
//! `n_re`, `n_im`, `d_nm`. An optional `[instrument]` block
//! (`gain_drift`, `extinction`) feeds the classical baseline.

use std::path::Path;

use qellip::classical::ClassicalInstrument;
use qellip::experiment::{AcquisitionPlan, DetectorModel, ExperimentScale};
use qellip::sample::{film_stack_reflectance, fresnel_interface, psi_delta_from_coeffs, FilmStack, Layer, SampleParams};
use qellip::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sample: SampleConfig,
    pub detector: DetectorConfig,
    pub scale: ScaleConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<InstrumentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SampleConfig {
    Direct {
        psi_deg: f64,
        delta_deg: f64,
    },
    Mirror,
    Interface {
        angle_deg: f64,
        n_re: f64,
        #[serde(default)]
        n_im: f64,
        #[serde(default = "unit")]
        n_ambient: f64,
    },
    Stack {
        wavelength_nm: f64,
        angle_deg: f64,
        #[serde(default = "unit")]
        n_ambient: f64,
        #[serde(default)]
        layers: Vec<LayerConfig>,
        substrate: IndexConfig,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub n_re: f64,
    #[serde(default)]
    pub n_im: f64,
    pub d_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    pub n_re: f64,
    #[serde(default)]
    pub n_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub eta1: f64,
    pub eta2: f64,
    #[serde(default)]
    pub accidental_per_s: f64,
    #[serde(default = "unit")]
    pub visibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub pairs_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub theta2_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1_list_deg: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub dwell_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub gain_drift: f64,
    #[serde(default)]
    pub extinction: f64,
}

/// Everything a subcommand needs, in internal units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: SampleParams<f64>,
    pub detector: DetectorModel<f64>,
    pub scale: ExperimentScale<f64>,
    pub plan: AcquisitionPlan<f64>,
    /// `θ₁` grid in degrees, as configured.
    pub theta1_deg: Vec<f64>,
    pub theta2_deg: f64,
    pub seed: u64,
    pub instrument: Option<ClassicalInstrument<f64>>,
}

fn field_err(field: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {err}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sample_params(&self) -> CliResult<SampleParams<f64>> {
        self.sample.resolve()
    }

    pub fn detector_model(&self) -> CliResult<DetectorModel<f64>> {
        let d = &self.detector;
        DetectorModel::new(d.eta1, d.eta2, d.accidental_per_s, d.visibility).map_err(|e| field_err("detector", e))
    }

    pub fn theta1_grid_deg(&self) -> CliResult<Vec<f64>> {
        self.plan.theta1_grid_deg()
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let params = self.sample_params()?;
        let detector = self.detector_model()?;
        let scale = ExperimentScale::new(self.scale.pairs_per_s).map_err(|e| field_err("scale", e))?;
        let p = &self.plan;
        if !p.dwell_s.is_finite() || p.dwell_s <= 0.0 {
            return Err(CliError::Config(format!("plan.dwell_s: must be positive, got {}", p.dwell_s)));
        }
        if !p.theta2_deg.is_finite() {
            return Err(CliError::Config("plan.theta2_deg: must be finite".into()));
        }
        let theta1_deg = p.theta1_grid_deg()?;
        let rad: Vec<f64> = theta1_deg.iter().map(|t| t.to_radians()).collect();
        let plan = AcquisitionPlan::theta1_scan(&rad, p.theta2_deg.to_radians(), p.dwell_s).map_err(|e| field_err("plan", e))?;
        let instrument = self
            .instrument
            .map(|i| ClassicalInstrument::new(i.gain_drift, i.extinction).map_err(|e| field_err("instrument", e)))
            .transpose()?;
        Ok(Resolved {
            params,
            detector,
            scale,
            plan,
            theta1_deg,
            theta2_deg: p.theta2_deg,
            seed: self.seed,
            instrument,
        })
    }
}

impl PlanConfig {
    /// Explicit list, or the inclusive sweep `start, start+step, … ≤ stop`.
    pub fn theta1_grid_deg(&self) -> CliResult<Vec<f64>> {
        let grid = match (&self.theta1_list_deg, &self.sweep) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("plan: give either theta1_list_deg or sweep, not both".into()));
            }
            (None, None) => return Err(CliError::Config("plan: one of theta1_list_deg or sweep is required".into())),
            (Some(list), None) => list.clone(),
            (None, Some(s)) => {
                if !s.step.is_finite() || s.step <= 0.0 {
                    return Err(CliError::Config(format!("plan.sweep.step: must be positive, got {}", s.step)));
                }
                if !s.start.is_finite() || !s.stop.is_finite() || s.stop < s.start {
                    return Err(CliError::Config("plan.sweep: need finite start <= stop".into()));
                }
                let n = ((s.stop - s.start) / s.step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| s.start + i as f64 * s.step).collect()
            }
        };
        if grid.is_empty() {
            return Err(CliError::Config("plan.theta1_list_deg: must not be empty".into()));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("plan.theta1_list_deg: angles must be finite".into()));
        }
        Ok(grid)
    }
}

impl SampleConfig {
    pub fn resolve(&self) -> CliResult<SampleParams<f64>> {
        let err = |e| field_err("sample", e);
        match *self {
            SampleConfig::Direct { psi_deg, delta_deg } => SampleParams::from_degrees(psi_deg, delta_deg).map_err(err),
            SampleConfig::Mirror => Ok(SampleParams::mirror()),
            SampleConfig::Interface {
                angle_deg,
                n_re,
                n_im,
                n_ambient,
            } => {
                let pair = fresnel_interface(n_ambient, Complex::new(n_re, n_im), angle_deg.to_radians()).map_err(err)?;
                psi_delta_from_coeffs(&pair).map_err(err)
            }
            SampleConfig::Stack {
                wavelength_nm,
                angle_deg,
                n_ambient,
                ref layers,
                substrate,
            } => {
                let layers = layers
                    .iter()
                    .map(|l| Layer {
                        index: Complex::new(l.n_re, l.n_im),
                        thickness: l.d_nm * 1e-9,
                    })
                    .collect();
                let stack = FilmStack::new(
                    wavelength_nm * 1e-9,
                    angle_deg.to_radians(),
                    n_ambient,
                    layers,
                    Complex::new(substrate.n_re, substrate.n_im),
                )
                .map_err(err)?;
                psi_delta_from_coeffs(&film_stack_reflectance(&stack)).map_err(err)
            }
        }
    }
}
