//! Random surface height fields in Monge gauge.
//!
//! A [`FieldRealization`] is an immutable, cell-periodic height function with
//! exact first and second derivatives. Positions are reduced into the period
//! cell before evaluation, so a realization is periodic to the bit whenever
//! the shifted coordinate is itself exactly representable.

mod bump;
mod gaussian;
mod poisson;

pub use bump::BumpSpec;
pub use gaussian::{
    sample_gaussian_field, GaussianFieldParams, GaussianSurface, DEFAULT_DECORRELATION_THRESHOLD,
};
pub use poisson::{sample_poisson_field, PoissonFieldParams, PoissonSurface};

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Height, slope and curvature of a surface at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl FieldSample {
    pub const ZERO: FieldSample = FieldSample {
        value: 0.0,
        grad: Vector2::new(0.0, 0.0),
        hess: Matrix2::new(0.0, 0.0, 0.0, 0.0),
    };
}

impl std::ops::AddAssign for FieldSample {
    fn add_assign(&mut self, rhs: Self) {
        self.value += rhs.value;
        self.grad += rhs.grad;
        self.hess += rhs.hess;
    }
}

/// Parameters a realization was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Flat,
    /// `h(x) = amplitude·sin(2π x₁ / period)`.
    Ridge { amplitude: f64 },
    Poisson(PoissonFieldParams),
    Gaussian(GaussianFieldParams),
}

#[derive(Debug, Clone)]
enum Surface {
    Flat,
    Ridge { amplitude: f64, wavenumber: f64 },
    Poisson(PoissonSurface),
    Gaussian(GaussianSurface),
}

/// One realization of a periodic random surface.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    surface: Surface,
    period: f64,
    provenance: Provenance,
}

impl FieldRealization {
    /// The plane `h ≡ 0`, viewed as periodic with the given cell size.
    pub fn flat(period: f64) -> Result<Self> {
        check_period(period)?;
        Ok(Self {
            surface: Surface::Flat,
            period,
            provenance: Provenance::Flat,
        })
    }

    /// The ridge `h(x) = amplitude·sin(2π x₁ / period)`, constant along x₂.
    pub fn ridge(amplitude: f64, period: f64) -> Result<Self> {
        check_period(period)?;
        if !amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        Ok(Self {
            surface: Surface::Ridge {
                amplitude,
                wavenumber: 2.0 * PI / period,
            },
            period,
            provenance: Provenance::Ridge { amplitude },
        })
    }

    pub(crate) fn from_poisson(surface: PoissonSurface, params: PoissonFieldParams) -> Self {
        Self {
            period: surface.cell_size(),
            surface: Surface::Poisson(surface),
            provenance: Provenance::Poisson(params),
        }
    }

    pub(crate) fn from_gaussian(surface: GaussianSurface, params: GaussianFieldParams) -> Self {
        Self {
            period: surface.period(),
            surface: Surface::Gaussian(surface),
            provenance: Provenance::Gaussian(params),
        }
    }

    /// Side length of the periodic cell `[0, period)²`.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Short family name used in file headers.
    pub fn family(&self) -> &'static str {
        match self.provenance {
            Provenance::Flat => "flat",
            Provenance::Ridge { .. } => "ridge",
            Provenance::Poisson(_) => "poisson",
            Provenance::Gaussian(_) => "gaussian",
        }
    }

    /// Seed of the realization; deterministic families report 0.
    pub fn seed(&self) -> u64 {
        match &self.provenance {
            Provenance::Poisson(p) => p.seed,
            Provenance::Gaussian(p) => p.seed,
            _ => 0,
        }
    }

    /// Shortest length scale the surface varies on: the bump radius, the
    /// correlation length `1/√α`, or a quarter of the ridge wavelength.
    pub fn length_scale(&self) -> f64 {
        match &self.provenance {
            Provenance::Flat => self.period,
            Provenance::Ridge { .. } => self.period / 4.0,
            Provenance::Poisson(_) => BumpSpec::RADIUS,
            Provenance::Gaussian(p) => 1.0 / p.alpha.sqrt(),
        }
    }

    /// Value, gradient and Hessian of `h` at `x`.
    pub fn eval(&self, x: Vector2<f64>) -> FieldSample {
        let y = Vector2::new(wrap(x[0], self.period), wrap(x[1], self.period));
        match &self.surface {
            Surface::Flat => FieldSample::ZERO,
            Surface::Ridge {
                amplitude,
                wavenumber,
            } => {
                let (s, c) = (wavenumber * y[0]).sin_cos();
                FieldSample {
                    value: amplitude * s,
                    grad: Vector2::new(amplitude * wavenumber * c, 0.0),
                    hess: Matrix2::new(-amplitude * wavenumber * wavenumber * s, 0.0, 0.0, 0.0),
                }
            }
            Surface::Poisson(p) => p.eval_reduced(y),
            Surface::Gaussian(g) => g.eval_reduced(y),
        }
    }

    pub fn value(&self, x: Vector2<f64>) -> f64 {
        self.eval(x).value
    }

    /// Bump centres of a Poisson realization.
    pub fn bump_centers(&self) -> Option<&[Vector2<f64>]> {
        match &self.surface {
            Surface::Poisson(p) => Some(p.centers()),
            _ => None,
        }
    }

    /// The spectral sum behind a Gaussian realization.
    pub fn gaussian_surface(&self) -> Option<&GaussianSurface> {
        match &self.surface {
            Surface::Gaussian(g) => Some(g),
            _ => None,
        }
    }
}

/// A field family with its parameters, minus cell size and seed.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFamily {
    Flat,
    Ridge { amplitude: f64 },
    Poisson { intensity: f64, amplitude: f64 },
    Gaussian { alpha: f64, modes: usize, threshold: f64 },
}

impl FieldFamily {
    /// Builds the realization for family size `r` (cell side for flat, ridge
    /// and Poisson; half-width for Gaussian) and `seed`.
    pub fn realize(&self, r: f64, seed: u64) -> Result<FieldRealization> {
        match *self {
            FieldFamily::Flat => FieldRealization::flat(r),
            FieldFamily::Ridge { amplitude } => FieldRealization::ridge(amplitude, r),
            FieldFamily::Poisson {
                intensity,
                amplitude,
            } => sample_poisson_field(&PoissonFieldParams::new(intensity, amplitude, r, seed)),
            FieldFamily::Gaussian {
                alpha,
                modes,
                threshold,
            } => sample_gaussian_field(&GaussianFieldParams {
                threshold,
                ..GaussianFieldParams::new(alpha, modes, r, seed)
            }),
        }
    }

    /// Checks the parameters for family size `r` without sampling.
    pub fn validate(&self, r: f64) -> Result<()> {
        match *self {
            FieldFamily::Flat => check_period(r),
            FieldFamily::Ridge { amplitude } => FieldRealization::ridge(amplitude, r).map(|_| ()),
            FieldFamily::Poisson {
                intensity,
                amplitude,
            } => PoissonFieldParams::new(intensity, amplitude, r, 0).validate(),
            FieldFamily::Gaussian {
                alpha,
                modes,
                threshold,
            } => GaussianFieldParams {
                threshold,
                ..GaussianFieldParams::new(alpha, modes, r, 0)
            }
            .validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldFamily::Flat => "flat",
            FieldFamily::Ridge { .. } => "ridge",
            FieldFamily::Poisson { .. } => "poisson",
            FieldFamily::Gaussian { .. } => "gaussian",
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("R", "cell size must be positive and finite"))
    }
}

/// Reduces `x` into `[0, period)`. `rem_euclid` is exact, so any two inputs
/// that differ by an exact multiple of the period map to the same result.
#[inline]
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_handles_tiny_negative_inputs() {
        assert_eq!(wrap(-1e-300, 20.0), 0.0);
        assert_eq!(wrap(20.0, 20.0), 0.0);
        assert_eq!(wrap(-5.0, 20.0), 15.0);
    }

    #[test]
    fn ridge_values() {
        let f = FieldRealization::ridge(1.0, 1.0).unwrap();
        let s = f.eval(Vector2::new(0.25, 0.7));
        assert!((s.value - 1.0).abs() < 1e-15);
        assert!(s.grad[0].abs() < 1e-14);
        assert_eq!(s.grad[1], 0.0);
        assert!((s.hess[(0, 0)] + 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_period() {
        assert!(FieldRealization::flat(0.0).is_err());
        assert!(FieldRealization::ridge(1.0, -1.0).is_err());
        assert!(FieldRealization::ridge(f64::NAN, 1.0).is_err());
    }
}
