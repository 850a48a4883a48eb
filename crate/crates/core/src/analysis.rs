//! Structural checks on computed tensors and ensemble statistics.

use std::io::{Read, Write};

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::cell::{refine_until, Bounds, EffectiveTensor, RefineOptions};
use crate::error::{Error, Result};
use crate::fields::FieldFamily;
use crate::io::{self, real, TensorRecord, SUMMARY_HEADER};
use crate::rng;

/// Absolute slack in the eigenvalue checks.
pub const EIGEN_TOL: f64 = 1e-6;
/// Extra slack covering finite-mesh error.
pub const DISCRETIZATION_ALLOWANCE: f64 = 1e-2;

/// `|det(D)·Z² − 1|`.
pub fn det_relation(t: &EffectiveTensor) -> f64 {
    t.det_residual()
}

/// Outcome of `1/Z² ≤ λ₁ ≤ 1/Z ≤ λ₂ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    /// Eigenvalues of the symmetrized tensor, ascending.
    pub eigenvalues: [f64; 2],
    /// Slack of each inequality, left to right; negative means violated.
    pub margins: [f64; 4],
    pub pass: bool,
}

pub fn sym_eigenvalues(d: &Matrix2<f64>) -> [f64; 2] {
    let s = (d + d.transpose()) * 0.5;
    let e = s.symmetric_eigen().eigenvalues;
    [e[0].min(e[1]), e[0].max(e[1])]
}

pub fn eigen_sandwich(d: &Matrix2<f64>, z: f64) -> SandwichReport {
    let [l1, l2] = sym_eigenvalues(d);
    let margins = [l1 - 1.0 / (z * z), 1.0 / z - l1, l2 - 1.0 / z, 1.0 - l2];
    let tol = EIGEN_TOL + DISCRETIZATION_ALLOWANCE;
    SandwichReport {
        eigenvalues: [l1, l2],
        margins,
        pass: margins.iter().all(|&m| m >= -tol),
    }
}

/// `max(|D₁₁ − D₂₂|, 2|D₁₂|) / tr D`; zero exactly for multiples of `I`.
pub fn isotropy_deviation(d: &Matrix2<f64>) -> f64 {
    let off = 0.5 * (d[(0, 1)] + d[(1, 0)]);
    (d[(0, 0)] - d[(1, 1)]).abs().max(2.0 * off.abs()) / d.trace()
}

/// Smallest of `λ_min(D − lower)` and `λ_min(upper − D)`: the Loewner-order
/// slack of the Voigt–Reuss sandwich.
pub fn loewner_margin(d: &Matrix2<f64>, bounds: &Bounds) -> f64 {
    sym_eigenvalues(&(d - bounds.lower))[0].min(sym_eigenvalues(&(bounds.upper - d))[0])
}

/// Worst slack of `e·lower·e ≤ e·D·e ≤ e·upper·e` over `directions`.
pub fn directional_margin(d: &Matrix2<f64>, bounds: &Bounds, directions: &[Vector2<f64>]) -> f64 {
    directions
        .iter()
        .map(|e| {
            let q = |m: &Matrix2<f64>| e.dot(&(m * e));
            (q(d) - q(&bounds.lower)).min(q(&bounds.upper) - q(d))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Depletion `1/Z² − tol ≤ λ₁` and `λ₂ ≤ 1 + tol`.
pub fn depleted(d: &Matrix2<f64>, z: f64, lower_tol: f64, upper_tol: f64) -> bool {
    let [l1, l2] = sym_eigenvalues(d);
    l1 >= 1.0 / (z * z) - lower_tol && l2 <= 1.0 + upper_tol
}

/// Re-checks a stored tensor row: diagonal bounds and depletion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordCheck {
    pub sandwich: bool,
    pub depletion: bool,
}

pub fn check_record(rec: &TensorRecord, tol: f64) -> RecordCheck {
    let d = Matrix2::new(rec.d11, rec.d12, rec.d12, rec.d22);
    RecordCheck {
        sandwich: rec.lower11 - tol <= rec.d11
            && rec.d11 <= rec.upper11 + tol
            && rec.lower22 - tol <= rec.d22
            && rec.d22 <= rec.upper22 + tol,
        depletion: depleted(&d, rec.z, tol, tol),
    }
}

/// Ensemble statistics for one cell size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub r: f64,
    pub count: usize,
    pub mean_d11: f64,
    pub std_d11: f64,
    pub mean_d22: f64,
    pub std_d22: f64,
    pub mean_d12: f64,
    pub mean_z: f64,
    /// `1/mean Z`.
    pub area_scaling_ref: f64,
}

impl SummaryRow {
    pub fn mean_tensor(&self) -> Matrix2<f64> {
        Matrix2::new(self.mean_d11, self.mean_d12, self.mean_d12, self.mean_d22)
    }

    /// `|det(mean D)·(mean Z)² − 1|`.
    pub fn det_residual(&self) -> f64 {
        (self.mean_tensor().determinant() * self.mean_z * self.mean_z - 1.0).abs()
    }
}

/// Isotropy deviation of the mean tensor per cell size, in increasing `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyTrend {
    pub r: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Number of consecutive pairs where the deviation grows.
    pub increases: usize,
}

pub fn isotropy_trend(rows: &[SummaryRow]) -> IsotropyTrend {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
    let deviations: Vec<f64> = sorted
        .iter()
        .map(|s| isotropy_deviation(&s.mean_tensor()))
        .collect();
    IsotropyTrend {
        r: sorted.iter().map(|s| s.r).collect(),
        increases: deviations.windows(2).filter(|w| w[1] > w[0]).count(),
        deviations,
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Groups rows by `R` (in order of first appearance) and aggregates the
/// rows with finite tensors.
pub fn summarize(rows: &[TensorRecord]) -> Vec<SummaryRow> {
    let mut rs: Vec<f64> = Vec::new();
    for r in rows {
        if !rs.contains(&r.r) {
            rs.push(r.r);
        }
    }
    rs.into_iter()
        .map(|r| {
            let ok: Vec<&TensorRecord> = rows
                .iter()
                .filter(|x| x.r == r && x.d11.is_finite() && x.d22.is_finite() && x.z.is_finite())
                .collect();
            let col = |f: fn(&TensorRecord) -> f64| ok.iter().map(|x| f(x)).collect::<Vec<_>>();
            let (mean_d11, std_d11) = mean_std(&col(|x| x.d11));
            let (mean_d22, std_d22) = mean_std(&col(|x| x.d22));
            let (mean_d12, _) = mean_std(&col(|x| x.d12));
            let (mean_z, _) = mean_std(&col(|x| x.z));
            SummaryRow {
                r,
                count: ok.len(),
                mean_d11,
                std_d11,
                mean_d22,
                std_d22,
                mean_d12,
                mean_z,
                area_scaling_ref: 1.0 / mean_z,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|s| {
            vec![
                real(s.r),
                s.count.to_string(),
                real(s.mean_d11),
                real(s.std_d11),
                real(s.mean_d22),
                real(s.std_d22),
                real(s.mean_d12),
                real(s.mean_z),
                real(s.area_scaling_ref),
            ]
        })
        .collect();
    io::write_table(out, &SUMMARY_HEADER, &table)
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    io::read_table(input, &SUMMARY_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let f = |i: usize| -> Result<f64> {
                rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Format {
                    line,
                    reason: format!("column `{}` is missing or unparsable", SUMMARY_HEADER[i]),
                })
            };
            Ok(SummaryRow {
                r: f(0)?,
                count: f(1)? as usize,
                mean_d11: f(2)?,
                std_d11: f(3)?,
                mean_d22: f(4)?,
                std_d22: f(5)?,
                mean_d12: f(6)?,
                mean_z: f(7)?,
                area_scaling_ref: f(8)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub family: FieldFamily,
    pub r_values: Vec<f64>,
    pub seeds_per_r: usize,
    pub master_seed: u64,
    pub refine: RefineOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub family: FieldFamily,
    /// One row per (R, seed), ordered by R then seed index.
    pub rows: Vec<TensorRecord>,
    pub per_r: Vec<SummaryRow>,
}

/// Seed of realization `k` at cell-size index `r_index`.
pub fn realization_seed(master: u64, r_index: usize, k: usize) -> u64 {
    rng::derive_seed(master, ((r_index as u64) << 32) | k as u64)
}

/// Samples `seeds_per_r` realizations per cell size, refines each to
/// `refine.tol_rel`, and aggregates. A failing realization becomes a row
/// with `converged = false` and NaN values instead of aborting the sweep.
pub fn ensemble_run(cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    if cfg.seeds_per_r < 2 {
        return Err(Error::invalid("seeds", "need at least 2 realizations per R"));
    }
    if cfg.r_values.is_empty() {
        return Err(Error::invalid("R_list", "need at least one cell size"));
    }
    for &r in &cfg.r_values {
        cfg.family.validate(r)?;
    }
    let tasks: Vec<(usize, usize)> = (0..cfg.r_values.len())
        .flat_map(|i| (0..cfg.seeds_per_r).map(move |k| (i, k)))
        .collect();
    let rows: Vec<TensorRecord> = tasks
        .par_iter()
        .map(|&(i, k)| {
            let r = cfg.r_values[i];
            let seed = realization_seed(cfg.master_seed, i, k);
            cfg.family
                .realize(r, seed)
                .and_then(|f| refine_until(&f, &cfg.refine))
                .map(|t| TensorRecord::new(seed, r, &t))
                .unwrap_or_else(|_| TensorRecord::failed(seed, r))
        })
        .collect();
    let per_r = summarize(&rows);
    Ok(EnsembleSummary {
        family: cfg.family.clone(),
        rows,
        per_r,
    })
}
