//! Run and sweep configuration files (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcm_core::diagnostics::DiagnosticsConfig;
use tcm_core::integrator::StepperConfig;
use tcm_core::model::{ModelParams, ParamInputs};
use tcm_core::spectral::SpectralGrid;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "TCM_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_box")]
    pub box_length: f64,
}

fn default_n() -> usize {
    128
}

fn default_box() -> f64 {
    16.0 * PI
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            box_length: default_box(),
        }
    }
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_peak() -> f64 {
    8.0
}

fn default_slope() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub params: ParamInputs,
    #[serde(default)]
    pub grid: GridConfig,
    pub stepper: StepperConfig,
    /// Defaults to `γ ∈ {0, 1}` on every field and functionals at `m = s`.
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsConfig>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Corner of the initial spectrum, in units of the lattice spacing `2π/L`.
    #[serde(default = "default_peak")]
    pub spectrum_peak: f64,
    /// Low-wavenumber slope `q` of the per-mode amplitude `(k/k_p)^{−q}`.
    #[serde(default = "default_slope")]
    pub spectrum_slope: f64,
    /// Fit window; defaults to `[t_end/4, 3 t_end/4]`.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.spectrum_peak > 0.0 && self.spectrum_slope.is_finite()) {
            return Err(CliError::Config("spectrum_peak must be positive".into()));
        }
        self.model_params()?;
        SpectralGrid::new(self.grid.n, self.grid.box_length)?;
        self.stepper.validate()?;
        self.diagnostics().validate()?;
        if let Some([t0, t1]) = self.fit_window {
            if !(t0 < t1) {
                return Err(CliError::Config(format!("fit_window [{t0}, {t1}] is empty")));
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::from_inputs(&self.params)?)
    }

    pub fn diagnostics(&self) -> DiagnosticsConfig {
        self.diagnostics
            .clone()
            .unwrap_or_else(|| DiagnosticsConfig::standard(self.params.s))
    }

    pub fn window(&self) -> (f64, f64) {
        match self.fit_window {
            Some([a, b]) => (a, b),
            None => tcm_core::diagnostics::default_window(self.stepper.t_end),
        }
    }

    /// `--out`, then `output_dir`, then `$TCM_OUT_DIR`, then `./tcm-out`.
    pub fn resolve_out_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("tcm-out"))
    }
}

/// Value grids of a sweep; empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub base: RunConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    /// Worker pool size; `--threads` takes precedence.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// One point of the Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub s: f64,
    pub n: usize,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        format!(
            "cell_{:03}_a{}_b{}_e{}_s{}_n{}",
            self.index, self.alpha, self.beta, self.epsilon, self.s, self.n
        )
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(config_err)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.base.validate()?;
        for cell in cfg.cells() {
            cfg.cell_config(&cell).validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn cells(&self) -> Vec<Cell> {
        let b = &self.base;
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let alphas = or(&self.axes.alpha, b.params.alpha);
        let betas = or(&self.axes.beta, b.params.beta);
        let epss = or(&self.axes.epsilon, b.epsilon);
        let ss = or(&self.axes.s, b.params.s);
        let ns = if self.axes.n.is_empty() {
            vec![b.grid.n]
        } else {
            self.axes.n.clone()
        };
        let mut cells = Vec::new();
        for &alpha in &alphas {
            for &beta in &betas {
                for &epsilon in &epss {
                    for &s in &ss {
                        for &n in &ns {
                            cells.push(Cell {
                                index: cells.len(),
                                alpha,
                                beta,
                                epsilon,
                                s,
                                n,
                            });
                        }
                    }
                }
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: &Cell) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.params.alpha = cell.alpha;
        cfg.params.beta = cell.beta;
        cfg.params.s = cell.s;
        cfg.epsilon = cell.epsilon;
        cfg.grid.n = cell.n;
        // orders follow s unless they were given explicitly
        if self.base.diagnostics.is_none() {
            cfg.diagnostics = None;
        }
        cfg
    }
}
