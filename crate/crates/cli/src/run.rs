//! Mode dispatch and artifact writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};
use serde_json::json;
use surfdiff::analysis::{self, EnsembleConfig, EIGEN_TOL};
use surfdiff::cell::{build_mesh, default_start, refine_until, voigt_reuss_bounds};
use surfdiff::fields::FieldRealization;
use surfdiff::geometry::{average_area, metric_at};
use surfdiff::io::{self, BoundsRecord, TensorRecord, TrajectoryRecord};
use surfdiff::sde::simulate_many;

use crate::config::{ConfigError, Mode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] surfdiff::Error),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Config(_) => 1,
            RunError::Numerical(_) | RunError::Output { .. } => 2,
        }
    }

    /// JSON error record for stderr.
    pub fn record(&self) -> serde_json::Value {
        let kind = match self {
            RunError::Usage(_) => "usage",
            RunError::Config(ConfigError::Parse { .. }) => "parse",
            RunError::Config(ConfigError::Invalid { .. }) => "validation",
            RunError::Numerical(surfdiff::Error::InvalidParameter { .. }) => "validation",
            RunError::Numerical(surfdiff::Error::NotConverged { .. }) => "not_converged",
            RunError::Numerical(surfdiff::Error::NonFiniteState { .. }) => "non_finite_state",
            RunError::Numerical(surfdiff::Error::PeriodMismatch { .. }) => "period_mismatch",
            RunError::Numerical(_) => "numerical",
            RunError::Output { .. } => "output",
        };
        let mut rec = json!({
            "status": "error",
            "kind": kind,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            RunError::Config(ConfigError::Parse { line, .. }) => rec["line"] = json!(line),
            RunError::Config(ConfigError::Invalid { field, .. }) => rec["field"] = json!(field),
            RunError::Numerical(surfdiff::Error::InvalidParameter { name, .. }) => rec["field"] = json!(name),
            RunError::Output { path, .. } => rec["path"] = json!(path.display().to_string()),
            _ => {}
        }
        rec
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False only when a `verify` check failed.
    pub passed: bool,
    /// Primary artifact when no output path was configured.
    pub stdout: Vec<u8>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            3
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let out = |e: std::io::Error| RunError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(out)?);
    w.write_all(bytes).map_err(out)?;
    w.flush().map_err(out)
}

fn emit(cfg: &RunConfig, bytes: Vec<u8>, passed: bool) -> Result<Outcome, RunError> {
    match &cfg.out {
        Some(p) => {
            write_file(p, &bytes)?;
            Ok(Outcome {
                passed,
                stdout: Vec::new(),
            })
        }
        None => Ok(Outcome { passed, stdout: bytes }),
    }
}

fn realize(cfg: &RunConfig) -> Result<(f64, FieldRealization), RunError> {
    let r = cfg.require_r()?;
    Ok((r, cfg.family.realize(r, cfg.seed)?))
}

/// Runs `mode` on a validated configuration.
pub fn run(cfg: &RunConfig, mode: Mode) -> Result<Outcome, RunError> {
    cfg.check_mode(mode)?;
    let mut buf = Vec::new();
    match mode {
        Mode::Surface => {
            let (r, field) = realize(cfg)?;
            io::write_grid(&mut buf, &field, r, cfg.surface.n)?;
        }
        Mode::Cell => {
            let (r, field) = realize(cfg)?;
            let t = refine_until(&field, &cfg.refine)?;
            io::write_tensor_csv(&mut buf, &[TensorRecord::new(cfg.seed, r, &t)])?;
        }
        Mode::Bounds => {
            let (r, field) = realize(cfg)?;
            let n = cfg.bounds_n.unwrap_or_else(|| default_start(&field));
            let b = voigt_reuss_bounds(&field, &build_mesh(field.period(), n)?)?;
            io::write_bounds_csv(&mut buf, &[BoundsRecord::new(cfg.seed, r, n, &b)])?;
        }
        Mode::Mcmc => {
            let (_, field) = realize(cfg)?;
            let m = &cfg.mcmc;
            let stats = simulate_many(&field, &m.plan(cfg.seed), m.trajectories)?;
            io::write_trajectory_csv(&mut buf, &[TrajectoryRecord::new(cfg.seed, m.dt, m.horizon, &stats)])?;
            if let Some(p) = &m.msd_out {
                let mut msd = Vec::new();
                io::write_msd_csv(&mut msd, &stats)?;
                write_file(p, &msd)?;
            }
        }
        Mode::Ensemble => {
            let e = cfg.ensemble.as_ref().expect("checked by check_mode");
            let summary = analysis::ensemble_run(&EnsembleConfig {
                family: cfg.family.clone(),
                r_values: e.r_values.clone(),
                seeds_per_r: e.seeds,
                master_seed: cfg.seed,
                refine: cfg.refine,
            })?;
            analysis::write_summary_csv(&mut buf, &summary.per_r)?;
            if let Some(p) = &e.rows_out {
                let mut rows = Vec::new();
                io::write_tensor_csv(&mut rows, &summary.rows)?;
                write_file(p, &rows)?;
            }
        }
        Mode::Verify => {
            let (passed, report) = verify(cfg)?;
            return emit(cfg, report.into_bytes(), passed);
        }
    }
    emit(cfg, buf, true)
}

struct Report {
    lines: Vec<String>,
    passed: bool,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines
            .push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }
}

fn fmt_matrix(m: &Matrix2<f64>) -> String {
    format!(
        "[[{:.9}, {:.9}], [{:.9}, {:.9}]]",
        m[(0, 0)],
        m[(0, 1)],
        m[(1, 0)],
        m[(1, 1)]
    )
}

/// Probe points on a fixed irrational lattice inside the cell.
fn probes(period: f64) -> Vec<Vector2<f64>> {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    (0..64)
        .map(|k| {
            let t = k as f64 + 0.5;
            Vector2::new((t / 64.0) * period, ((t * GOLDEN).fract()) * period)
        })
        .collect()
}

/// Runs every structural check on the configured realization.
pub fn verify(cfg: &RunConfig) -> Result<(bool, String), RunError> {
    let (r, field) = realize(cfg)?;
    let v = cfg.verify;
    let l = field.period();
    let mut rep = Report {
        lines: vec![format!("field={} R={} seed={}", field.family(), r, cfg.seed)],
        passed: true,
    };

    let pts = probes(l);
    let mut worst = 0.0f64;
    for x in &pts {
        let s = field.eval(*x);
        for shift in [Vector2::new(l, 0.0), Vector2::new(0.0, l), Vector2::new(-l, l)] {
            let t = field.eval(x + shift);
            let scale = 1.0 + s.value.abs() + s.grad.norm();
            worst = worst
                .max((t.value - s.value).abs() / scale)
                .max((t.grad - s.grad).norm() / scale);
        }
    }
    rep.check("periodicity", worst <= 1e-9, format!("max relative deviation {worst:.3e}"));

    let unimodular = pts
        .iter()
        .map(|x| (metric_at(&field, *x).conductivity().determinant() - 1.0).abs())
        .fold(0.0, f64::max);
    rep.check(
        "unimodular conductivity",
        unimodular <= 1e-12,
        format!("max |det A - 1| {unimodular:.3e}"),
    );

    let t = refine_until(&field, &cfg.refine)?;
    rep.lines.push(format!("D = {}", fmt_matrix(&t.d)));
    rep.lines.push(format!("Z = {:.12}  n = {}", t.z, t.n));
    let changes: Vec<String> = t
        .history
        .iter()
        .map(|s| format!("n={} det_residual={:.3e}", s.n, s.det_residual()))
        .collect();
    rep.lines.push(format!("levels: {}", changes.join("; ")));
    rep.check(
        "refinement converged",
        t.converged,
        format!("tolerance {:.1e} reached at n = {}", cfg.refine.tol_rel, t.n),
    );
    rep.check(
        "symmetry",
        t.asymmetry <= 1e-6,
        format!("|D12 - D21| {:.3e}", t.asymmetry),
    );
    let det = analysis::det_relation(&t);
    rep.check(
        "determinant relation",
        det <= v.det_tol,
        format!("|det(D) Z^2 - 1| {det:.3e} (tol {:.1e})", v.det_tol),
    );
    let s = analysis::eigen_sandwich(&t.d, t.z);
    let worst_margin = s.margins.iter().copied().fold(f64::INFINITY, f64::min);
    rep.check(
        "eigenvalue sandwich",
        worst_margin >= -v.eigen_tol,
        format!(
            "eigenvalues [{:.9}, {:.9}], 1/Z^2 {:.9}, 1/Z {:.9}, worst margin {worst_margin:.3e}",
            s.eigenvalues[0],
            s.eigenvalues[1],
            1.0 / (t.z * t.z),
            1.0 / t.z
        ),
    );
    rep.check(
        "depletion",
        analysis::depleted(&t.d, t.z, v.eigen_tol, EIGEN_TOL),
        format!("1/Z^2 - tol <= lambda_min, lambda_max <= 1 + {EIGEN_TOL:.0e}"),
    );
    let lm = analysis::loewner_margin(&t.d, &t.bounds);
    rep.check(
        "Voigt-Reuss bounds",
        lm >= -EIGEN_TOL,
        format!("Loewner margin {lm:.3e}"),
    );
    let fine = average_area(&field, 2 * t.n)?;
    let rel = (fine.z - t.z).abs() / fine.z;
    rep.check(
        "average area",
        rel <= v.area_tol,
        format!("mesh Z {:.9} vs quadrature {:.9}, relative {rel:.3e}", t.z, fine.z),
    );
    rep.lines.push(format!(
        "verdict: {}",
        if rep.passed { "PASS" } else { "FAIL" }
    ));
    let mut text = rep.lines.join("\n");
    text.push('\n');
    Ok((rep.passed, text))
}
