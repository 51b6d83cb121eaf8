//! JSON run configuration: the single external input format. Parsed with
//! strict field checking, then resolved into validated solver objects.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsOptions;
use crate::error::{GarzError, Result};
use crate::model::FluxFamily;
use crate::riemann::RiemannData;
use crate::scheme::{DensityProfile, InitialData, MeshConfig, PiecewiseConstant};

/// Guard against absurd cell counts from untrusted configs.
const MAX_CELLS: usize = 1 << 22;
const MAX_SNAPSHOTS: usize = 1000;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub v_f: f64,
    pub beta: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub t_end: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Initial density: a piecewise-constant profile or per-cell samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityBlock {
    Profile(ProfileBlock),
    Cells { cells: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub rho0: DensityBlock,
    pub w0: ProfileBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannBlock {
    pub rho_l: f64,
    pub w_l: f64,
    pub rho_r: f64,
    pub w_r: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    pub enabled: bool,
    pub k_grid: usize,
    pub n_test_functions: usize,
    pub seed: u64,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            enabled: true,
            k_grid: 11,
            n_test_functions: 5,
            seed: 0,
        }
    }
}

/// The complete run configuration as read from disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub mesh: MeshBlock,
    /// Explicit initial datum; may be omitted when `riemann` is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialBlock>,
    /// Two-state datum for `garz riemann`; also usable by `garz run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riemann: Option<RiemannBlock>,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Everything validated and ready to run.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub family: FluxFamily,
    pub mesh: MeshConfig,
    pub init: InitialData,
    pub riemann: Option<RiemannData>,
    pub snapshots: Vec<f64>,
    pub diagnostics: DiagnosticsOptions,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| GarzError::ConfigError(e.to_string()))
    }

    /// Validates every block: model assumptions, CFL, data ranges, snapshot
    /// times. Returns the solver-level objects.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let family = FluxFamily::builtin(self.model.v_f, self.model.beta, self.model.epsilon)?;
        if self.mesh.n_cells > MAX_CELLS {
            return Err(GarzError::ConfigError(format!(
                "n_cells = {} above the supported maximum {MAX_CELLS}",
                self.mesh.n_cells
            )));
        }
        let mesh = MeshConfig::new(
            self.mesh.x_min,
            self.mesh.x_max,
            self.mesh.n_cells,
            self.mesh.lambda,
            self.mesh.t_end,
            &family,
        )?;
        if self.snapshots.len() > MAX_SNAPSHOTS {
            return Err(GarzError::ConfigError(format!(
                "{} snapshots requested, maximum is {MAX_SNAPSHOTS}",
                self.snapshots.len()
            )));
        }
        for &s in &self.snapshots {
            if !s.is_finite() || s < 0.0 || s > self.mesh.t_end {
                return Err(GarzError::ConfigError(format!(
                    "snapshot time {s} outside [0, {}]",
                    self.mesh.t_end
                )));
            }
        }

        let riemann = match &self.riemann {
            Some(r) => Some(RiemannData::new(&family, r.rho_l, r.w_l, r.rho_r, r.w_r)?),
            None => None,
        };
        let init = match (&self.initial, &self.riemann) {
            (Some(block), _) => block.to_initial_data()?,
            (None, Some(r)) => InitialData::new(
                DensityProfile::PiecewiseConstant(PiecewiseConstant::new(
                    vec![0.0],
                    vec![r.rho_l, r.rho_r],
                )?),
                PiecewiseConstant::new(vec![0.0], vec![r.w_l, r.w_r])?,
            ),
            (None, None) => {
                return Err(GarzError::ConfigError(
                    "config needs an `initial` or a `riemann` block".into(),
                ))
            }
        };
        init.validate(family.epsilon())?;
        if let Some(r) = &self.riemann {
            if !(0.0..=1.0).contains(&r.w_l) || !(0.0..=1.0).contains(&r.w_r) {
                return Err(GarzError::ConfigError("riemann w outside [0, 1]".into()));
            }
        }
        if self.diagnostics.k_grid < 2 || self.diagnostics.k_grid > 1001 {
            return Err(GarzError::ConfigError(format!(
                "k_grid = {} outside [2, 1001]",
                self.diagnostics.k_grid
            )));
        }
        if self.diagnostics.n_test_functions > 100 {
            return Err(GarzError::ConfigError(format!(
                "n_test_functions = {} above 100",
                self.diagnostics.n_test_functions
            )));
        }

        Ok(ResolvedConfig {
            family,
            mesh,
            init,
            riemann,
            snapshots: self.snapshots.clone(),
            diagnostics: DiagnosticsOptions {
                enabled: self.diagnostics.enabled,
                k_grid: self.diagnostics.k_grid,
                n_test_functions: self.diagnostics.n_test_functions,
                seed: self.diagnostics.seed,
            },
            output_dir: self.output_dir.clone(),
        })
    }
}

impl InitialBlock {
    fn to_initial_data(&self) -> Result<InitialData> {
        let rho0 = match &self.rho0 {
            DensityBlock::Profile(p) => DensityProfile::PiecewiseConstant(PiecewiseConstant::new(
                p.breakpoints.clone(),
                p.values.clone(),
            )?),
            DensityBlock::Cells { cells } => {
                if cells.iter().any(|v| !v.is_finite()) {
                    return Err(GarzError::ConfigError(
                        "rho0 cells contain non-finite entries".into(),
                    ));
                }
                DensityProfile::Cells(cells.clone())
            }
        };
        let w0 = PiecewiseConstant::new(self.w0.breakpoints.clone(), self.w0.values.clone())?;
        Ok(InitialData::new(rho0, w0))
    }
}
