use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{FieldRealization, FieldSample};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Default bound on `c_α(R)` for a half-width to count as decorrelated.
pub const DEFAULT_DECORRELATION_THRESHOLD: f64 = 1e-3;

/// Isotropic Gaussian surface with autocovariance `c_α(r) = exp(−πα‖r‖²)`,
/// sampled as a truncated Fourier series that is exactly periodic on the cell
/// `[0, 2R)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFieldParams {
    /// Correlation parameter α (inverse squared length).
    pub alpha: f64,
    /// Number of real Fourier degrees of freedom; must be a perfect square.
    pub modes: usize,
    /// Half-width R; the period of the sampled field is `2R`.
    pub half_width: f64,
    pub seed: u64,
    /// Upper bound on `c_α(R)`.
    pub threshold: f64,
}

impl GaussianFieldParams {
    pub fn new(alpha: f64, modes: usize, half_width: f64, seed: u64) -> Self {
        Self {
            alpha,
            modes,
            half_width,
            seed,
            threshold: DEFAULT_DECORRELATION_THRESHOLD,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Target autocovariance at lag distance `r`.
    pub fn covariance(&self, r: f64) -> f64 {
        (-PI * self.alpha * r * r).exp()
    }

    /// Continuous Fourier transform of `c_α` at frequency `ξ` (cycles per unit length).
    pub fn spectral_density(&self, xi: f64) -> f64 {
        (-PI * xi * xi / self.alpha).exp() / self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "correlation parameter must be positive"));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::invalid("R", "half-width must be positive"));
        }
        if self.modes == 0 {
            return Err(Error::invalid("modes", "mode count must be positive"));
        }
        if lattice_side(self.modes).is_none() {
            return Err(Error::invalid("modes", "mode count must be a perfect square"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold", "must lie in (0, 1)"));
        }
        let c = self.covariance(self.half_width);
        if c > self.threshold {
            return Err(Error::invalid(
                "R",
                format!(
                    "c_alpha(R) = {c:.3e} exceeds the decorrelation threshold {:.1e}; increase R or alpha",
                    self.threshold
                ),
            ));
        }
        Ok(())
    }
}

fn lattice_side(modes: usize) -> Option<usize> {
    let k = (modes as f64).sqrt().round() as usize;
    (k * k == modes).then_some(k)
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    /// Lattice indices shifted to start at 0.
    ix: usize,
    iy: usize,
    wavevector: Vector2<f64>,
    cos_coeff: f64,
    sin_coeff: f64,
}

/// Truncated Fourier series `Σ a_m cos(k_m·x) + b_m sin(k_m·x)`.
#[derive(Debug, Clone)]
pub struct GaussianSurface {
    period: f64,
    /// Smallest lattice index on each axis (non-positive).
    lo: i64,
    side: usize,
    modes: Vec<Mode>,
}

/// Draws one realization.
///
/// Lattice: `m ∈ {lo..hi}²` with `hi = ⌊K/2⌋`, `lo = hi − K + 1`, `K = √M`.
/// Each mode gets weight `w_m ∝ Ŝ(|m|/L)`, normalized so the weights over the
/// lattice sum to `c_α(0) = 1`. A conjugate pair `±m` becomes one cosine and
/// one sine coefficient of variance `2w_m`; the zero mode and the unpaired
/// edge modes of an even lattice carry a single cosine of variance `w_m`.
/// That makes exactly `M` real degrees of freedom.
pub fn sample_gaussian_field(params: &GaussianFieldParams) -> Result<FieldRealization> {
    params.validate()?;
    let side = lattice_side(params.modes).expect("validated");
    let hi = (side / 2) as i64;
    let lo = hi - side as i64 + 1;
    let period = params.period();
    let in_lattice = |m: i64| (lo..=hi).contains(&m);

    let mut weights = Vec::with_capacity(side * side);
    for my in lo..=hi {
        for mx in lo..=hi {
            let xi = ((mx * mx + my * my) as f64).sqrt() / period;
            weights.push(((mx, my), params.spectral_density(xi)));
        }
    }
    let total: f64 = weights.iter().map(|(_, w)| w).sum();

    let mut rng = rng::stream(params.seed, streams::GAUSSIAN_FIELD);
    let mut modes = Vec::new();
    for &((mx, my), w) in &weights {
        let w = w / total;
        let paired = in_lattice(-mx) && in_lattice(-my) && (mx, my) != (0, 0);
        let positive = my > 0 || (my == 0 && mx > 0);
        let (cos_coeff, sin_coeff) = if paired {
            if !positive {
                continue;
            }
            let sd = (2.0 * w).sqrt();
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            (sd * a, sd * b)
        } else {
            let a: f64 = rng.sample(StandardNormal);
            (w.sqrt() * a, 0.0)
        };
        modes.push(Mode {
            ix: (mx - lo) as usize,
            iy: (my - lo) as usize,
            wavevector: Vector2::new(mx as f64, my as f64) * (2.0 * PI / period),
            cos_coeff,
            sin_coeff,
        });
    }
    let surface = GaussianSurface {
        period,
        lo,
        side,
        modes,
    };
    Ok(FieldRealization::from_gaussian(surface, params.clone()))
}

impl GaussianSurface {
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of stored (cos, sin) terms.
    pub fn term_count(&self) -> usize {
        self.modes.len()
    }

    /// Mean of `h²` over the cell, from Parseval.
    pub fn cell_mean_square(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                if m.wavevector == Vector2::zeros() {
                    m.cos_coeff * m.cos_coeff
                } else {
                    0.5 * (m.cos_coeff * m.cos_coeff + m.sin_coeff * m.sin_coeff)
                }
            })
            .sum()
    }

    pub(crate) fn eval_reduced(&self, x: Vector2<f64>) -> FieldSample {
        // cos/sin of m·θ per axis, then angle addition per mode.
        let base = 2.0 * PI / self.period;
        let axis = |t: f64| -> Vec<(f64, f64)> {
            (0..self.side)
                .map(|i| ((self.lo + i as i64) as f64 * base * t).sin_cos())
                .collect()
        };
        let tx = axis(x[0]);
        let ty = axis(x[1]);

        let mut value = 0.0;
        let mut grad = Vector2::zeros();
        let mut hess = Matrix2::zeros();
        for m in &self.modes {
            let (sx, cx) = tx[m.ix];
            let (sy, cy) = ty[m.iy];
            let c = cx * cy - sx * sy;
            let s = sx * cy + cx * sy;
            let t = m.cos_coeff * c + m.sin_coeff * s;
            let dt = m.sin_coeff * c - m.cos_coeff * s;
            let k = m.wavevector;
            value += t;
            grad += k * dt;
            hess -= k * k.transpose() * t;
        }
        FieldSample { value, grad, hess }
    }
}
