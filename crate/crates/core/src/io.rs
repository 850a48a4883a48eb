//! Plain-text artifacts: CSV tables and field grid dumps.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips
//! every `f64` exactly.

use std::io::{Read, Write};

use nalgebra::Vector2;

use crate::cell::{Bounds, EffectiveTensor};
use crate::error::{Error, Result};
use crate::fields::FieldRealization;
use crate::sde::TrajectoryStats;

pub const TENSOR_HEADER: [&str; 13] = [
    "seed", "R", "n", "Z", "D11", "D12", "D22", "lower11", "lower22", "upper11", "upper22",
    "det_residual", "converged",
];

pub const BOUNDS_HEADER: [&str; 10] = [
    "seed", "R", "n", "Z", "lower11", "lower12", "lower22", "upper11", "upper12", "upper22",
];

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "seed", "dt", "T", "delta", "D11", "D12", "D22", "se11", "se12", "se22",
];

pub const MSD_HEADER: [&str; 2] = ["lag", "msd"];

pub const SUMMARY_HEADER: [&str; 9] = [
    "R", "count", "meanD11", "stdD11", "meanD22", "stdD22", "meanD12", "meanZ", "area_scaling_ref",
];

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row of the effective-tensor table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorRecord {
    pub seed: u64,
    pub r: f64,
    pub n: usize,
    pub z: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
    pub lower11: f64,
    pub lower22: f64,
    pub upper11: f64,
    pub upper22: f64,
    pub det_residual: f64,
    pub converged: bool,
}

impl TensorRecord {
    pub fn new(seed: u64, r: f64, t: &EffectiveTensor) -> Self {
        Self {
            seed,
            r,
            n: t.n,
            z: t.z,
            d11: t.d[(0, 0)],
            d12: t.d[(0, 1)],
            d22: t.d[(1, 1)],
            lower11: t.bounds.lower[(0, 0)],
            lower22: t.bounds.lower[(1, 1)],
            upper11: t.bounds.upper[(0, 0)],
            upper22: t.bounds.upper[(1, 1)],
            det_residual: t.det_residual(),
            converged: t.converged,
        }
    }

    /// Placeholder row for a realization that failed; numeric columns are NaN.
    pub fn failed(seed: u64, r: f64) -> Self {
        let nan = f64::NAN;
        Self {
            seed,
            r,
            n: 0,
            z: nan,
            d11: nan,
            d12: nan,
            d22: nan,
            lower11: nan,
            lower22: nan,
            upper11: nan,
            upper22: nan,
            det_residual: nan,
            converged: false,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            real(self.r),
            self.n.to_string(),
            real(self.z),
            real(self.d11),
            real(self.d12),
            real(self.d22),
            real(self.lower11),
            real(self.lower22),
            real(self.upper11),
            real(self.upper22),
            real(self.det_residual),
            self.converged.to_string(),
        ]
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Format {
        line,
        reason: e.to_string(),
    }
}

/// Writes `header` and `rows` as CSV.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV table whose header must equal `header`, returning raw rows
/// with their line numbers.
pub fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rd = csv::Reader::from_reader(input);
    let found = rd.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format {
            line: 1,
            reason: format!("expected header `{}`", header.join(",")),
        });
    }
    rd.records()
        .map(|r| {
            let r = r.map_err(csv_err)?;
            let line = r.position().map_or(0, |p| p.line());
            Ok((line, r))
        })
        .collect()
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, idx: usize, header: &[&str]) -> Result<T> {
    rec.get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format {
            line,
            reason: format!("column `{}` is missing or unparsable", header[idx]),
        })
}

pub fn write_tensor_csv<W: Write>(out: W, records: &[TensorRecord]) -> Result<()> {
    let rows: Vec<_> = records.iter().map(TensorRecord::fields).collect();
    write_table(out, &TENSOR_HEADER, &rows)
}

pub fn read_tensor_csv<R: Read>(input: R) -> Result<Vec<TensorRecord>> {
    let h = &TENSOR_HEADER;
    read_table(input, h)?
        .into_iter()
        .map(|(line, r)| {
            let f = |i| parse::<f64>(&r, line, i, h);
            Ok(TensorRecord {
                seed: parse(&r, line, 0, h)?,
                r: f(1)?,
                n: parse(&r, line, 2, h)?,
                z: f(3)?,
                d11: f(4)?,
                d12: f(5)?,
                d22: f(6)?,
                lower11: f(7)?,
                lower22: f(8)?,
                upper11: f(9)?,
                upper22: f(10)?,
                det_residual: f(11)?,
                converged: parse(&r, line, 12, h)?,
            })
        })
        .collect()
}

/// One row of the Voigt–Reuss bounds table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRecord {
    pub seed: u64,
    pub r: f64,
    pub n: usize,
    pub z: f64,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl BoundsRecord {
    pub fn new(seed: u64, r: f64, n: usize, b: &Bounds) -> Self {
        let tri = |m: &nalgebra::Matrix2<f64>| [m[(0, 0)], m[(0, 1)], m[(1, 1)]];
        Self {
            seed,
            r,
            n,
            z: b.z,
            lower: tri(&b.lower),
            upper: tri(&b.upper),
        }
    }
}

pub fn write_bounds_csv<W: Write>(out: W, records: &[BoundsRecord]) -> Result<()> {
    let rows: Vec<_> = records
        .iter()
        .map(|b| {
            let mut row = vec![b.seed.to_string(), real(b.r), b.n.to_string(), real(b.z)];
            row.extend(b.lower.iter().chain(&b.upper).map(|&x| real(x)));
            row
        })
        .collect();
    write_table(out, &BOUNDS_HEADER, &rows)
}

pub fn read_bounds_csv<R: Read>(input: R) -> Result<Vec<BoundsRecord>> {
    let h = &BOUNDS_HEADER;
    read_table(input, h)?
        .into_iter()
        .map(|(line, r)| {
            let f = |i| parse::<f64>(&r, line, i, h);
            Ok(BoundsRecord {
                seed: parse(&r, line, 0, h)?,
                r: f(1)?,
                n: parse(&r, line, 2, h)?,
                z: f(3)?,
                lower: [f(4)?, f(5)?, f(6)?],
                upper: [f(7)?, f(8)?, f(9)?],
            })
        })
        .collect()
}

/// One row of the trajectory summary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub sample_interval: f64,
    /// `D11, D12, D22`.
    pub d: [f64; 3],
    /// Standard errors of `D11, D12, D22`.
    pub se: [f64; 3],
}

impl TrajectoryRecord {
    pub fn new(seed: u64, dt: f64, horizon: f64, stats: &TrajectoryStats) -> Self {
        let d = stats.diffusion_tensor();
        Self {
            seed,
            dt,
            horizon,
            sample_interval: stats.sample_interval,
            d: [d[(0, 0)], d[(0, 1)], d[(1, 1)]],
            se: stats.standard_errors(),
        }
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, records: &[TrajectoryRecord]) -> Result<()> {
    let rows: Vec<_> = records
        .iter()
        .map(|t| {
            let mut row = vec![t.seed.to_string(), real(t.dt), real(t.horizon), real(t.sample_interval)];
            row.extend(t.d.iter().chain(&t.se).map(|&x| real(x)));
            row
        })
        .collect();
    write_table(out, &TRAJECTORY_HEADER, &rows)
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let h = &TRAJECTORY_HEADER;
    read_table(input, h)?
        .into_iter()
        .map(|(line, r)| {
            let f = |i| parse::<f64>(&r, line, i, h);
            Ok(TrajectoryRecord {
                seed: parse(&r, line, 0, h)?,
                dt: f(1)?,
                horizon: f(2)?,
                sample_interval: f(3)?,
                d: [f(4)?, f(5)?, f(6)?],
                se: [f(7)?, f(8)?, f(9)?],
            })
        })
        .collect()
}

pub fn write_msd_csv<W: Write>(out: W, stats: &TrajectoryStats) -> Result<()> {
    let rows: Vec<_> = stats
        .msd_curve()
        .into_iter()
        .map(|(lag, m)| vec![real(lag), real(m)])
        .collect();
    write_table(out, &MSD_HEADER, &rows)
}

/// Reads `(lag, msd)` pairs.
pub fn read_msd_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let h = &MSD_HEADER;
    read_table(input, h)?
        .into_iter()
        .map(|(line, r)| Ok((parse(&r, line, 0, h)?, parse(&r, line, 1, h)?)))
        .collect()
}

/// Dumps `h` and `∇h` on the `n × n` grid `x_i = i·L/n`, rows ordered by `y`
/// then `x`.
pub fn write_grid<W: Write>(mut out: W, field: &FieldRealization, family_r: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "grid needs at least one point per axis"));
    }
    writeln!(
        out,
        "# field={} R={} n={} seed={}",
        field.family(),
        family_r,
        n,
        field.seed()
    )?;
    let step = field.period() / n as f64;
    for j in 0..n {
        for i in 0..n {
            let x = Vector2::new(i as f64 * step, j as f64 * step);
            let s = field.eval(x);
            writeln!(
                out,
                "{} {} {} {} {}",
                real(x[0]),
                real(x[1]),
                real(s.value),
                real(s.grad[0]),
                real(s.grad[1])
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
