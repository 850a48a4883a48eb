//! Euler–Maruyama integration of the surface diffusion
//!
//! ```text
//! dX = F(X) dt + √(2 g⁻¹(X)) dB
//! ```
//!
//! on a single periodic realization, with an ergodic estimate of the
//! macroscopic diffusion tensor from sampled increments.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::FieldRealization;
use crate::geometry::metric_at;
use crate::rng::{self, streams};

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Lags beyond this many sampling intervals are not tabulated in the MSD curve.
pub const MAX_MSD_LAGS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    pub dt: f64,
    pub horizon: f64,
    /// Time between recorded positions; an integer multiple of `dt`.
    pub sample_interval: f64,
    pub start: Vector2<f64>,
    pub seed: u64,
}

impl SimulationPlan {
    /// `dt = 1e-4`, `T = 100`, `Δ = 0.5`, starting at the origin.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            dt: 1e-4,
            horizon: 100.0,
            sample_interval: 0.5,
            start: Vector2::zeros(),
            seed,
        }
    }

    /// Steps per sampling interval and number of samples.
    pub fn layout(&self) -> Result<(u64, u64)> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "timestep must be positive"));
        }
        if !(self.sample_interval >= self.dt) {
            return Err(Error::invalid("delta", "sampling interval must be at least dt"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.sample_interval) {
            return Err(Error::invalid("T", "horizon must be at least the sampling interval"));
        }
        let ratio = self.sample_interval / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio {
            return Err(Error::invalid("delta", "sampling interval must be an integer multiple of dt"));
        }
        let samples = (self.horizon / self.sample_interval * (1.0 + 1e-12)).floor();
        Ok((steps as u64, samples as u64))
    }
}

/// One Euler–Maruyama step driven by the standard normal pair `noise`.
pub fn em_step(field: &FieldRealization, x: Vector2<f64>, dt: f64, noise: Vector2<f64>) -> Vector2<f64> {
    let m = metric_at(field, x);
    x + m.drift() * dt + m.diffusion_sqrt() * noise * dt.sqrt()
}

/// Accumulated increment statistics of one or more trajectories.
///
/// All members are plain sums, so [`TrajectoryStats::merge`] is associative
/// and commutative.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub sample_interval: f64,
    increments: u64,
    /// Σ Δx₁², Σ Δx₁Δx₂, Σ Δx₂².
    outer: [f64; 3],
    batches: u64,
    batch_sum: [f64; 3],
    batch_sum_sq: [f64; 3],
    /// Per lag: Σ |X(t+ℓΔ) − X(t)|² and pair count.
    msd: Vec<(f64, u64)>,
}

impl TrajectoryStats {
    /// Statistics of a path sampled every `sample_interval`.
    pub fn from_positions(positions: &[Vector2<f64>], sample_interval: f64) -> Self {
        let incs: Vec<[f64; 3]> = positions
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                [d[0] * d[0], d[0] * d[1], d[1] * d[1]]
            })
            .collect();
        let mut outer = [0.0; 3];
        for v in &incs {
            (0..3).for_each(|k| outer[k] += v[k]);
        }

        let len = (incs.len() / BATCHES).max(1);
        let batches = incs.len() / len;
        let mut batch_sum = [0.0; 3];
        let mut batch_sum_sq = [0.0; 3];
        for chunk in incs.chunks_exact(len) {
            for k in 0..3 {
                let d = chunk.iter().map(|v| v[k]).sum::<f64>() / (len as f64 * 2.0 * sample_interval);
                batch_sum[k] += d;
                batch_sum_sq[k] += d * d;
            }
        }

        let lags = (positions.len() / 2).min(MAX_MSD_LAGS);
        let msd = (0..=lags)
            .map(|lag| {
                let pairs = positions.len() - lag;
                let s = (0..pairs)
                    .map(|t| (positions[t + lag] - positions[t]).norm_squared())
                    .sum();
                (s, pairs as u64)
            })
            .collect();

        Self {
            sample_interval,
            increments: incs.len() as u64,
            outer,
            batches: batches as u64,
            batch_sum,
            batch_sum_sq,
            msd,
        }
    }

    pub fn increments(&self) -> u64 {
        self.increments
    }

    /// `D[i,j] = (1/2Δ)·mean(Δx_i Δx_j)`.
    pub fn diffusion_tensor(&self) -> Matrix2<f64> {
        let s = 1.0 / (2.0 * self.sample_interval * self.increments as f64);
        Matrix2::new(self.outer[0], self.outer[1], self.outer[1], self.outer[2]) * s
    }

    /// Batch-means standard errors of `D₁₁`, `D₁₂`, `D₂₂`.
    pub fn standard_errors(&self) -> [f64; 3] {
        let b = self.batches as f64;
        if self.batches < 2 {
            return [f64::INFINITY; 3];
        }
        std::array::from_fn(|k| {
            let mean = self.batch_sum[k] / b;
            let var = ((self.batch_sum_sq[k] - b * mean * mean) / (b - 1.0)).max(0.0);
            (var / b).sqrt()
        })
    }

    /// `(lag time, mean squared displacement)`; the first entry is `(0, 0)`.
    pub fn msd_curve(&self) -> Vec<(f64, f64)> {
        self.msd
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c > 0)
            .map(|(lag, (s, c))| (lag as f64 * self.sample_interval, s / *c as f64))
            .collect()
    }

    /// Pools the statistics of two runs with the same sampling interval.
    pub fn merge(&mut self, other: &TrajectoryStats) {
        assert_eq!(
            self.sample_interval, other.sample_interval,
            "merging trajectories sampled at different intervals"
        );
        self.increments += other.increments;
        self.batches += other.batches;
        for k in 0..3 {
            self.outer[k] += other.outer[k];
            self.batch_sum[k] += other.batch_sum[k];
            self.batch_sum_sq[k] += other.batch_sum_sq[k];
        }
        if other.msd.len() > self.msd.len() {
            self.msd.resize(other.msd.len(), (0.0, 0));
        }
        for (a, b) in self.msd.iter_mut().zip(&other.msd) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
}

/// Integrates one trajectory up to the plan horizon.
pub fn simulate(field: &FieldRealization, plan: &SimulationPlan) -> Result<TrajectoryStats> {
    let (steps, samples) = plan.layout()?;
    let mut rng = rng::stream(plan.seed, streams::TRAJECTORY);
    let mut x = plan.start;
    let mut positions = Vec::with_capacity(samples as usize + 1);
    positions.push(x);
    let mut step = 0u64;
    for _ in 0..samples {
        for _ in 0..steps {
            let noise = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            x = em_step(field, x, plan.dt, noise);
            step += 1;
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::NonFiniteState { step });
            }
        }
        positions.push(x);
    }
    Ok(TrajectoryStats::from_positions(&positions, plan.sample_interval))
}

/// Runs `count` independent trajectories in parallel (seeds derived from
/// `plan.seed`) and pools them in index order.
pub fn simulate_many(field: &FieldRealization, plan: &SimulationPlan, count: usize) -> Result<TrajectoryStats> {
    if count == 0 {
        return Err(Error::invalid("trajectories", "need at least one trajectory"));
    }
    let runs: Vec<TrajectoryStats> = (0..count)
        .into_par_iter()
        .map(|i| {
            let p = SimulationPlan {
                seed: rng::derive_seed(plan.seed, i as u64),
                ..*plan
            };
            simulate(field, &p)
        })
        .collect::<Result<_>>()?;
    let mut iter = runs.into_iter();
    let mut pooled = iter.next().expect("count > 0");
    for r in iter {
        pooled.merge(&r);
    }
    Ok(pooled)
}
