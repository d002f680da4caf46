//! Experiment configuration: one human-editable TOML tree. Identical
//! config + seed must reproduce byte-identical reports, so everything a
//! run depends on lives here (or in the frozen calibration constants).

use crate::coeff::{builtin_family, CoefficientField, FamilySpec};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::solver::{Scheme, SolverConfig};
use crate::weights::WeightParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "CoefficientSection::default")]
    pub coefficient: CoefficientSection,
    #[serde(default = "WeightSection::default")]
    pub weights: WeightSection,
    #[serde(default = "SolverSection::default")]
    pub solver: SolverSection,
    #[serde(default = "ParaproductSection::default")]
    pub paraproduct: ParaproductSection,
    #[serde(default = "ScanSection::default")]
    pub scan: ScanSection,
    /// Named overrides of frozen gate values; unknown keys are rejected.
    #[serde(default)]
    pub tolerance_overrides: BTreeMap<String, f64>,
}

fn default_grid() -> usize {
    256
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub tag: String,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn default_kappa() -> f64 {
    0.5
}

impl Default for CoefficientSection {
    fn default() -> Self {
        let mut params = BTreeMap::new();
        params.insert("base".into(), 1.5);
        params.insert("c".into(), 0.3);
        params.insert("t0".into(), 0.4);
        params.insert("r_clip".into(), 0.25);
        Self {
            tag: "loglip_t".into(),
            kappa: 0.5,
            params,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub s: f64,
    pub lambda: f64,
    pub alpha1: f64,
    pub gamma: f64,
    /// defaults to σ + 2τ when absent
    #[serde(default)]
    pub beta: Option<f64>,
    /// λ used where transform factors must stay in linear f64 range
    #[serde(default = "default_diag_lambda")]
    pub diagnostics_lambda: f64,
}

fn default_diag_lambda() -> f64 {
    1.2
}

impl Default for WeightSection {
    fn default() -> Self {
        Self {
            s: 0.5,
            lambda: 2.0,
            alpha1: 1.0,
            gamma: 1.0,
            beta: None,
            diagnostics_lambda: 1.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 1.0 / 128.0,
            t_end: 1.0,
            scheme: Scheme::CrankNicolson,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaproductSection {
    pub m: usize,
    pub trials: usize,
    /// auxiliary index s' ∈ (0, s) of the low-block remainder profile
    #[serde(default = "default_s_prime")]
    pub s_prime: f64,
}

fn default_s_prime() -> f64 {
    0.4
}

impl Default for ParaproductSection {
    fn default() -> Self {
        Self {
            m: 3,
            trials: 50,
            s_prime: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub scales: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            scales: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            t_end: 2.0,
            dt: 1.0 / 128.0,
        }
    }
}

const KNOWN_OVERRIDES: [&str; 3] = ["energy_m", "cm_slope_max", "scan_r2_min"];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            seed: default_seed(),
            output_dir: None,
            coefficient: CoefficientSection::default(),
            weights: WeightSection::default(),
            solver: SolverSection::default(),
            paraproduct: ParaproductSection::default(),
            scan: ScanSection::default(),
            tolerance_overrides: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            // toml errors carry a span; surface it as line/column.
            let loc = e
                .span()
                .map(|span| {
                    let line = text[..span.start.min(text.len())]
                        .bytes()
                        .filter(|b| *b == b'\n')
                        .count()
                        + 1;
                    format!(" (line {line})")
                })
                .unwrap_or_default();
            Error::Config(format!("{}{loc}", e.message()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        PeriodicGrid::new(self.grid)?;
        if !(self.coefficient.kappa > 0.0 && self.coefficient.kappa < 1.0) {
            return Err(Error::Config(format!(
                "ellipticity invariant violated: kappa must lie in (0,1), got {}",
                self.coefficient.kappa
            )));
        }
        for key in self.tolerance_overrides.keys() {
            if !KNOWN_OVERRIDES.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown tolerance override '{key}' (known: {KNOWN_OVERRIDES:?})"
                )));
            }
        }
        self.build_weight_params()?;
        self.build_coefficient()?;
        self.build_solver_config()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.grid)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.coefficient.params.get(key).copied().unwrap_or(default)
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        match self.coefficient.tag.as_str() {
            "constant" => Ok(FamilySpec::Constant {
                value: self.param("value", 1.0),
            }),
            "lip_x" => Ok(FamilySpec::LipX {
                base: self.param("base", 1.5),
                amp: self.param("amp", 0.25),
                freq: self.param("freq", 1.0) as i64,
            }),
            "loglip_t" => Ok(FamilySpec::LogLipT {
                base: self.param("base", 1.5),
                c: self.param("c", 0.3),
                t0: self.param("t0", 0.4),
                r_clip: self.param("r_clip", 0.25),
            }),
            "oscillatory_control" => Ok(FamilySpec::OscillatoryControl {
                base: self.param("base", 1.5),
                amp: self.param("amp", 0.25),
                omega: self.param("omega", 40.0),
            }),
            other => Err(Error::Config(format!(
                "unknown coefficient tag '{other}' (expected constant | lip_x | loglip_t | oscillatory_control)"
            ))),
        }
    }

    /// Coefficient valid over the longer of the solver and scan horizons.
    pub fn build_coefficient(&self) -> Result<CoefficientField> {
        let horizon = self.solver.t_end.max(self.scan.t_end);
        builtin_family(self.family_spec()?, self.coefficient.kappa, horizon)
    }

    pub fn build_weight_params(&self) -> Result<WeightParams> {
        let w = &self.weights;
        let alpha = w.alpha1.max(1.0 / self.solver.t_end);
        let sigma = (1.0 - w.s) / alpha;
        let beta = w.beta.unwrap_or(sigma + 2.0 * sigma / 4.0);
        WeightParams::new(w.s, w.lambda, alpha, beta, w.gamma)
    }

    pub fn build_diagnostics_params(&self) -> Result<WeightParams> {
        let w = &self.weights;
        let alpha = w.alpha1.max(1.0 / self.solver.t_end);
        let sigma = (1.0 - w.s) / alpha;
        WeightParams::new(w.s, w.diagnostics_lambda, alpha, sigma + sigma / 4.0, w.gamma)
    }

    pub fn build_solver_config(&self) -> Result<SolverConfig> {
        SolverConfig::new(
            self.build_grid()?,
            self.solver.dt,
            self.solver.t_end,
            self.solver.scheme,
        )
    }

    pub fn build_scan_solver_config(&self) -> Result<SolverConfig> {
        SolverConfig::new(
            self.build_grid()?,
            self.scan.dt,
            self.scan.t_end,
            self.solver.scheme,
        )
    }

    pub fn override_or(&self, key: &str, default: f64) -> f64 {
        self.tolerance_overrides.get(key).copied().unwrap_or(default)
    }
}
