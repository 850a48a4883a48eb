//! Run configuration: a TOML document with a fixed set of tables and keys.
//!
//! Unknown keys are rejected everywhere. Every numeric value is checked
//! against the preconditions of the pipeline that consumes it.

use std::path::PathBuf;

use nalgebra::Vector2;
use serde::Deserialize;
use surfdiff::cell::{CgOptions, Diagonal, RefineOptions};
use surfdiff::fields::{FieldFamily, DEFAULT_DECORRELATION_THRESHOLD};
use surfdiff::sde::SimulationPlan;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<surfdiff::Error> for ConfigError {
    fn from(e: surfdiff::Error) -> Self {
        match e {
            surfdiff::Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
            other => ConfigError::invalid("config", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Surface,
    Cell,
    Bounds,
    Mcmc,
    Ensemble,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Surface => "surface",
            Mode::Cell => "cell",
            Mode::Bounds => "bounds",
            Mode::Mcmc => "mcmc",
            Mode::Ensemble => "ensemble",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
    field: RawField,
    #[serde(default)]
    cell: RawCell,
    #[serde(default)]
    surface: RawSurface,
    #[serde(default)]
    bounds: RawBounds,
    #[serde(default)]
    mcmc: RawMcmc,
    ensemble: Option<RawEnsemble>,
    #[serde(default)]
    verify: RawVerify,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum RawField {
    Flat {
        #[serde(rename = "R")]
        r: Option<f64>,
    },
    Ridge {
        amplitude: f64,
        #[serde(rename = "R")]
        r: Option<f64>,
    },
    Poisson {
        lambda: f64,
        alpha: f64,
        #[serde(rename = "R")]
        r: Option<f64>,
    },
    Gaussian {
        alpha: f64,
        #[serde(rename = "M")]
        modes: usize,
        #[serde(rename = "R")]
        r: Option<f64>,
        threshold: Option<f64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    tol: Option<f64>,
    n0: Option<usize>,
    max_n: Option<usize>,
    min_levels: Option<usize>,
    cg_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    diagonal: Option<RawDiagonal>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawDiagonal {
    Forward,
    Backward,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMcmc {
    dt: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    delta: Option<f64>,
    trajectories: Option<usize>,
    start: Option<[f64; 2]>,
    msd_out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    #[serde(rename = "R")]
    r_values: Vec<f64>,
    seeds: usize,
    rows_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    det_tol: Option<f64>,
    eigen_tol: Option<f64>,
    area_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSettings {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcSettings {
    pub dt: f64,
    pub horizon: f64,
    pub delta: f64,
    pub trajectories: usize,
    pub start: Vector2<f64>,
    pub msd_out: Option<PathBuf>,
}

impl McmcSettings {
    pub fn plan(&self, seed: u64) -> SimulationPlan {
        SimulationPlan {
            dt: self.dt,
            horizon: self.horizon,
            sample_interval: self.delta,
            start: self.start,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSettings {
    pub r_values: Vec<f64>,
    pub seeds: usize,
    pub rows_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    /// Bound on `|det(D)·Z² − 1|`.
    pub det_tol: f64,
    /// Slack on every eigenvalue and bound inequality.
    pub eigen_tol: f64,
    /// Relative bound on the mesh `Z` against a finer quadrature.
    pub area_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub family: FieldFamily,
    /// Cell side (half-width for Gaussian fields); required outside ensembles.
    pub r: Option<f64>,
    pub refine: RefineOptions,
    pub surface: SurfaceSettings,
    /// Mesh resolution for the bounds; `None` selects the default start.
    pub bounds_n: Option<usize>,
    pub mcmc: McmcSettings,
    pub ensemble: Option<EnsembleSettings>,
    pub verify: VerifySettings,
}

impl RunConfig {
    /// The single cell size, or a validation error naming `R`.
    pub fn require_r(&self) -> Result<f64, ConfigError> {
        self.r
            .ok_or_else(|| ConfigError::invalid("R", "field.R is required for this mode"))
    }

    /// Checks that everything `mode` needs is present.
    pub fn check_mode(&self, mode: Mode) -> Result<(), ConfigError> {
        match mode {
            Mode::Ensemble => self
                .ensemble
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| ConfigError::invalid("ensemble", "an [ensemble] table is required")),
            _ => self.require_r().map(|_| ()),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn positive(name: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::invalid(name, "must be a positive finite number"))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let (family, r) = match raw.field {
        RawField::Flat { r } => (FieldFamily::Flat, r),
        RawField::Ridge { amplitude, r } => (FieldFamily::Ridge { amplitude }, r),
        RawField::Poisson { lambda, alpha, r } => (
            FieldFamily::Poisson {
                intensity: lambda,
                amplitude: alpha,
            },
            r,
        ),
        RawField::Gaussian {
            alpha,
            modes,
            r,
            threshold,
        } => (
            FieldFamily::Gaussian {
                alpha,
                modes,
                threshold: threshold.unwrap_or(DEFAULT_DECORRELATION_THRESHOLD),
            },
            r,
        ),
    };
    if let Some(r) = r {
        family.validate(r)?;
    }

    let defaults = RefineOptions::default();
    let c = raw.cell;
    let refine = RefineOptions {
        tol_rel: positive("cell.tol", c.tol.unwrap_or(defaults.tol_rel))?,
        n0: c.n0,
        max_n: c.max_n.unwrap_or(defaults.max_n),
        min_levels: c.min_levels.unwrap_or(defaults.min_levels),
        diagonal: match c.diagonal {
            Some(RawDiagonal::Backward) => Diagonal::Backward,
            _ => Diagonal::Forward,
        },
        cg: CgOptions {
            tol: positive("cell.cg_tol", c.cg_tol.unwrap_or(defaults.cg.tol))?,
            max_iter: c.cg_max_iter,
        },
    };
    if refine.n0.is_some_and(|n| n < 2) {
        return Err(ConfigError::invalid("cell.n0", "must be at least 2"));
    }
    if refine.min_levels == 0 {
        return Err(ConfigError::invalid("cell.min_levels", "must be at least 1"));
    }
    if refine.cg.max_iter == Some(0) {
        return Err(ConfigError::invalid("cell.cg_max_iter", "must be at least 1"));
    }

    let surface = SurfaceSettings {
        n: raw.surface.n.unwrap_or(128),
    };
    if surface.n == 0 {
        return Err(ConfigError::invalid("surface.n", "must be at least 1"));
    }
    if raw.bounds.n.is_some_and(|n| n < 2) {
        return Err(ConfigError::invalid("bounds.n", "must be at least 2"));
    }

    let desk = SimulationPlan::desk_scale(0);
    let m = raw.mcmc;
    let mcmc = McmcSettings {
        dt: m.dt.unwrap_or(desk.dt),
        horizon: m.horizon.unwrap_or(desk.horizon),
        delta: m.delta.unwrap_or(desk.sample_interval),
        trajectories: m.trajectories.unwrap_or(1),
        start: m.start.map_or(desk.start, |s| Vector2::new(s[0], s[1])),
        msd_out: m.msd_out,
    };
    mcmc.plan(0).layout().map_err(|e| match e {
        surfdiff::Error::InvalidParameter { name, reason } => {
            ConfigError::invalid(format!("mcmc.{name}"), reason)
        }
        other => ConfigError::from(other),
    })?;
    if mcmc.trajectories == 0 {
        return Err(ConfigError::invalid("mcmc.trajectories", "must be at least 1"));
    }
    if !mcmc.start.iter().all(|x| x.is_finite()) {
        return Err(ConfigError::invalid("mcmc.start", "must be finite"));
    }

    let ensemble = match raw.ensemble {
        Some(e) => {
            if e.r_values.is_empty() {
                return Err(ConfigError::invalid("ensemble.R", "needs at least one cell size"));
            }
            for &r in &e.r_values {
                family.validate(r)?;
            }
            if e.seeds < 2 {
                return Err(ConfigError::invalid("ensemble.seeds", "needs at least 2 realizations per R"));
            }
            Some(EnsembleSettings {
                r_values: e.r_values,
                seeds: e.seeds,
                rows_out: e.rows_out,
            })
        }
        None => None,
    };

    let v = raw.verify;
    let verify = VerifySettings {
        det_tol: positive("verify.det_tol", v.det_tol.unwrap_or(0.03))?,
        eigen_tol: positive(
            "verify.eigen_tol",
            v.eigen_tol
                .unwrap_or(surfdiff::analysis::EIGEN_TOL + surfdiff::analysis::DISCRETIZATION_ALLOWANCE),
        )?,
        area_tol: positive("verify.area_tol", v.area_tol.unwrap_or(1e-2))?,
    };

    let cfg = RunConfig {
        mode: raw.mode,
        seed: raw.seed,
        out: raw.out,
        family,
        r,
        refine,
        surface,
        bounds_n: raw.bounds.n,
        mcmc,
        ensemble,
        verify,
    };
    if let Some(mode) = cfg.mode {
        cfg.check_mode(mode)?;
    }
    Ok(cfg)
}
