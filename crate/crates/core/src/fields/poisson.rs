use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{BumpSpec, FieldRealization, FieldSample};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Random protrusion surface: bumps centred on a homogeneous Poisson point
/// process in the cell `[0, R)²`, wrapped periodically.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonFieldParams {
    /// Expected number of bump centres per unit area.
    pub intensity: f64,
    pub bump: BumpSpec,
    pub cell_size: f64,
    pub seed: u64,
}

impl PoissonFieldParams {
    pub fn new(intensity: f64, amplitude: f64, cell_size: f64, seed: u64) -> Self {
        Self {
            intensity,
            bump: BumpSpec::new(amplitude),
            cell_size,
            seed,
        }
    }

    pub fn expected_count(&self) -> f64 {
        self.intensity * self.cell_size * self.cell_size
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity > 0.0) {
            return Err(Error::invalid("lambda", "intensity must be positive"));
        }
        if !(self.bump.amplitude.is_finite() && self.bump.amplitude > 0.0) {
            return Err(Error::invalid("alpha", "bump amplitude must be positive"));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 2.0 * BumpSpec::RADIUS) {
            return Err(Error::invalid("R", "R must exceed bump diameter 2"));
        }
        Ok(())
    }
}

/// Draws the bump centres and builds the periodic protrusion field.
pub fn sample_poisson_field(params: &PoissonFieldParams) -> Result<FieldRealization> {
    params.validate()?;
    let mut rng = rng::stream(params.seed, streams::POISSON_FIELD);
    let mean = params.expected_count();
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("lambda", e.to_string()))?
        .sample(&mut rng) as usize;
    let r = params.cell_size;
    let centers = (0..count)
        .map(|_| Vector2::new(rng.random::<f64>() * r, rng.random::<f64>() * r))
        .collect();
    let surface = PoissonSurface::new(params.bump, r, centers)?;
    Ok(FieldRealization::from_poisson(surface, params.clone()))
}

/// Bump sum with periodic images, indexed by a uniform bin grid.
///
/// Images of every centre that come within one bump radius of the cell are
/// stored explicitly, so evaluation at a reduced position only has to look
/// at the 3×3 bins around it.
#[derive(Debug, Clone)]
pub struct PoissonSurface {
    bump: BumpSpec,
    cell_size: f64,
    centers: Vec<Vector2<f64>>,
    bin_size: f64,
    bins_per_axis: usize,
    bin_start: Vec<u32>,
    images: Vec<Vector2<f64>>,
}

impl PoissonSurface {
    pub fn new(bump: BumpSpec, cell_size: f64, centers: Vec<Vector2<f64>>) -> Result<Self> {
        if !(cell_size > 2.0 * BumpSpec::RADIUS) {
            return Err(Error::invalid("R", "R must exceed bump diameter 2"));
        }
        let inner = (cell_size / BumpSpec::RADIUS).floor() as usize;
        let bin_size = cell_size / inner as f64;
        // One guard bin on either side holds images that spill over the edge.
        let bins_per_axis = inner + 3;

        let reach = BumpSpec::RADIUS;
        let mut tagged: Vec<(usize, Vector2<f64>)> = Vec::new();
        for c in &centers {
            for sy in -1..=1 {
                for sx in -1..=1 {
                    let img = c + Vector2::new(sx as f64, sy as f64) * cell_size;
                    let inside = (-reach..=cell_size + reach).contains(&img[0])
                        && (-reach..=cell_size + reach).contains(&img[1]);
                    if inside {
                        let b = bin_of(img, bin_size, bins_per_axis);
                        tagged.push((b, img));
                    }
                }
            }
        }
        // Stable: images inside a bin keep generation order.
        tagged.sort_by_key(|(b, _)| *b);
        let mut bin_start = vec![0u32; bins_per_axis * bins_per_axis + 1];
        for (b, _) in &tagged {
            bin_start[b + 1] += 1;
        }
        for i in 0..bins_per_axis * bins_per_axis {
            bin_start[i + 1] += bin_start[i];
        }
        let images = tagged.into_iter().map(|(_, p)| p).collect();
        Ok(Self {
            bump,
            cell_size,
            centers,
            bin_size,
            bins_per_axis,
            bin_start,
            images,
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn centers(&self) -> &[Vector2<f64>] {
        &self.centers
    }

    pub fn bump(&self) -> BumpSpec {
        self.bump
    }

    /// Evaluates at a position already reduced into the cell.
    pub(crate) fn eval_reduced(&self, x: Vector2<f64>) -> FieldSample {
        let nb = self.bins_per_axis;
        let bx = cell_index(x[0], self.bin_size, nb);
        let by = cell_index(x[1], self.bin_size, nb);
        let mut acc = FieldSample::ZERO;
        for j in by.saturating_sub(1)..=(by + 1).min(nb - 1) {
            for i in bx.saturating_sub(1)..=(bx + 1).min(nb - 1) {
                let b = j * nb + i;
                let (lo, hi) = (self.bin_start[b] as usize, self.bin_start[b + 1] as usize);
                for img in &self.images[lo..hi] {
                    let d = x - img;
                    if d.norm_squared() < 1.0 {
                        acc += self.bump.eval(d);
                    }
                }
            }
        }
        acc
    }
}

#[inline]
fn cell_index(x: f64, bin_size: f64, nb: usize) -> usize {
    let k = (x / bin_size).floor() + 1.0;
    (k.max(0.0) as usize).min(nb - 1)
}

#[inline]
fn bin_of(p: Vector2<f64>, bin_size: f64, nb: usize) -> usize {
    cell_index(p[1], bin_size, nb) * nb + cell_index(p[0], bin_size, nb)
}
