//! TOML configuration. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wavebreak_core::criteria::CgnConfig;
use wavebreak_core::evolution::{InitialData, SimConfig, Stepper};
use wavebreak_core::operators::{FwCase, ModelSpec, SignConvention, TabulatedKernel};
use wavebreak_core::spectral::GridSpec;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Sweep worker threads; `--workers` overrides, default logical cores.
    pub workers: Option<usize>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub criterion: CriterionConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub kernels: KernelsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub cgn: Option<CgnConfig>,
}

impl Config {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let config =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        Ok((config, text))
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Usage("config needs a [model] table".into()))
    }

    pub fn initial(&self) -> Result<&InitialData, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| CliError::Usage("config needs an [initial] table".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Burgers,
    FractionalKdv,
    Whitham,
    FornbergWhitham,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    I,
    Ii,
    Iii,
    Iv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelName,
    /// Fractional KdV exponent.
    pub alpha: Option<f64>,
    /// Bessel order.
    pub s: Option<f64>,
    /// Fornberg–Whitham regime; chosen automatically when absent.
    pub case: Option<CaseName>,
    /// Auxiliary exponent for `s = 1`.
    pub tau: Option<f64>,
    #[serde(default)]
    pub sign: SignConvention,
    /// Tabulated kernel abscissae and values (odd, uniform, centred).
    pub kernel_x: Option<Vec<f64>>,
    pub kernel_k: Option<Vec<f64>>,
}

impl ModelConfig {
    fn need(&self, value: Option<f64>, key: &str) -> Result<f64, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("model kind {:?} needs `{key}`", self.kind)))
    }

    /// Replace the family parameter (α or s); used by sweeps.
    pub fn with_parameter(&self, p: f64) -> Self {
        let mut out = self.clone();
        match self.kind {
            ModelName::FractionalKdv => out.alpha = Some(p),
            ModelName::FornbergWhitham => out.s = Some(p),
            _ => {}
        }
        out
    }

    pub fn parameter(&self) -> Option<f64> {
        match self.kind {
            ModelName::FractionalKdv => self.alpha,
            ModelName::FornbergWhitham => self.s,
            _ => None,
        }
    }

    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let spec = match self.kind {
            ModelName::Burgers => ModelSpec::burgers(),
            ModelName::FractionalKdv => ModelSpec::fractional_kdv(self.need(self.alpha, "alpha")?)?,
            ModelName::Whitham => ModelSpec::whitham(),
            ModelName::FornbergWhitham => ModelSpec::fornberg_whitham(self.need(self.s, "s")?)?,
            ModelName::Tabulated => {
                let (Some(x), Some(k)) = (&self.kernel_x, &self.kernel_k) else {
                    return Err(CliError::Usage(
                        "tabulated model needs `kernel_x` and `kernel_k`".into(),
                    ));
                };
                ModelSpec::tabulated(TabulatedKernel::new(x, k)?)
            }
        };
        Ok(spec.with_sign(self.sign))
    }

    pub fn fw_case(&self) -> Result<Option<FwCase>, CliError> {
        Ok(match self.case {
            None => None,
            Some(CaseName::I) => Some(FwCase::I),
            Some(CaseName::Ii) => Some(FwCase::II),
            Some(CaseName::Iii) => Some(FwCase::III {
                tau: self.need(self.tau, "tau")?,
            }),
            Some(CaseName::Iv) => Some(FwCase::IV),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub half_width: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 40.0,
            n: 4096,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        Ok(GridSpec::new(self.half_width, self.n)?)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriterionConfig {
    pub theta: f64,
    /// Interpolation constant; estimated numerically when absent.
    pub c_gn: Option<f64>,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self { theta: 0.1, c_gn: None }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub cfl: Option<f64>,
    pub m_cap_factor: Option<f64>,
    pub tail_stop: Option<f64>,
    pub fit_tail: Option<f64>,
    pub fit_window: Option<usize>,
    pub max_time: Option<f64>,
    pub stepper: Option<Stepper>,
    pub n_max: Option<usize>,
    pub min_growth: Option<f64>,
    pub max_steps: Option<usize>,
    /// Characteristic seeds; when non-empty a characteristics table is written.
    pub seeds: Vec<f64>,
    pub trust: Option<f64>,
}

impl SimulationConfig {
    pub fn build(&self, model: ModelSpec, grid: GridSpec, initial: InitialData) -> SimConfig {
        let mut cfg = SimConfig::new(model, grid, initial);
        cfg.n_max = 16384;
        if let Some(v) = self.cfl {
            cfg.cfl = v;
        }
        if let Some(v) = self.m_cap_factor {
            cfg.m_cap_factor = v;
        }
        if let Some(v) = self.tail_stop {
            cfg.tail_stop = v;
        }
        if let Some(v) = self.fit_tail {
            cfg.fit_tail = v;
        }
        if let Some(v) = self.fit_window {
            cfg.fit_window = v;
        }
        cfg.max_time = self.max_time;
        if let Some(v) = self.stepper {
            cfg.stepper = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.min_growth {
            cfg.min_growth = v;
        }
        if let Some(v) = self.max_steps {
            cfg.max_steps = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub amplitudes: Vec<f64>,
    /// Defaults to the single `criterion.theta`.
    pub thetas: Vec<f64>,
    /// Values of α (fractional KdV) or s (Fornberg–Whitham); defaults to the
    /// model's own.
    pub parameters: Vec<f64>,
    pub simulate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelsConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub orders: Vec<f64>,
    pub gamma_points: usize,
    pub gamma_max: f64,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        Self {
            x_min: 0.01,
            x_max: 10.0,
            points: 200,
            orders: vec![0.3, 0.5, 0.9, 1.0, 1.5, 3.0],
            gamma_points: 300,
            gamma_max: 30.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub corpus_size: usize,
    pub half_width: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            corpus_size: 20,
            half_width: 40.0,
            n: 1024,
            seed: 2024,
        }
    }
}
