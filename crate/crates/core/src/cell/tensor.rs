use nalgebra::{Matrix2, Vector2};

use super::assembly::{assemble_with, sample_coefficients, CellProblem, ElementCoefficient};
use super::cg::{solve_mean_zero, CgOptions};
use super::mesh::{Diagonal, PeriodicMesh};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::fields::FieldRealization;
use crate::par;

/// Nodal values of the two correctors `χ^{e₁}`, `χ^{e₂}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSolution {
    pub chi: [Vec<f64>; 2],
    pub residuals: [f64; 2],
    pub iterations: [usize; 2],
}

pub fn solve_correctors(
    stiffness: &CsrMatrix,
    loads: &[Vec<f64>; 2],
    opts: &CgOptions,
) -> Result<CorrectorSolution> {
    solve_correctors_from(stiffness, loads, None, opts)
}

/// Like [`solve_correctors`], starting CG from `guess` (e.g. a prolongated
/// coarse-mesh solution).
pub fn solve_correctors_from(
    stiffness: &CsrMatrix,
    loads: &[Vec<f64>; 2],
    guess: Option<&[Vec<f64>; 2]>,
    opts: &CgOptions,
) -> Result<CorrectorSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("cg_tol", "tolerance must be positive"));
    }
    let solve = |dir: usize| {
        let out = solve_mean_zero(
            stiffness,
            &loads[dir],
            guess.map(|g| g[dir].as_slice()),
            opts,
        );
        if out.converged {
            Ok(out)
        } else {
            Err(Error::NotConverged {
                iterations: out.iterations,
                residual: out.residual,
            })
        }
    };
    let (a, b) = (solve(0)?, solve(1)?);
    Ok(CorrectorSolution {
        residuals: [a.residual, b.residual],
        iterations: [a.iterations, b.iterations],
        chi: [a.x, b.x],
    })
}

/// Arithmetic (upper) and harmonic (lower) bounds on the effective tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    /// `(1/Z)·(avg g/√|g|)⁻¹`.
    pub lower: Matrix2<f64>,
    /// `(1/Z)·avg √|g| g⁻¹`.
    pub upper: Matrix2<f64>,
    pub z: f64,
}

pub fn bounds_from(coefficients: &[ElementCoefficient]) -> Bounds {
    let n = coefficients.len() as f64;
    let (cond, res, area) = par::reduce(
        coefficients.len(),
        (Matrix2::zeros(), Matrix2::zeros(), 0.0),
        |i| {
            let c = &coefficients[i];
            (c.conductivity, c.resistivity, c.area_element)
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
    );
    let z = area / n;
    let lower = (res / n).try_inverse().expect("resistivity average is SPD") / z;
    Bounds {
        lower: symmetrize(lower),
        upper: symmetrize(cond / (n * z)),
        z,
    }
}

/// Voigt–Reuss bounds from centroid samples of `field` on `mesh`.
pub fn voigt_reuss_bounds(field: &FieldRealization, mesh: &PeriodicMesh) -> Result<Bounds> {
    Ok(bounds_from(&sample_coefficients(field, mesh)?))
}

/// One level of a mesh refinement sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementStep {
    pub n: usize,
    pub d: Matrix2<f64>,
    pub z: f64,
    /// Change relative to the previous level; `None` on the first level.
    pub relative_change: Option<f64>,
}

impl RefinementStep {
    pub fn det_residual(&self) -> f64 {
        (self.d.determinant() * self.z * self.z - 1.0).abs()
    }
}

/// Periodized effective diffusion tensor `D_R` on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTensor {
    pub d: Matrix2<f64>,
    /// Element-centroid average of `√|g|`, the same quadrature as `d`.
    pub z: f64,
    pub period: f64,
    pub n: usize,
    pub bounds: Bounds,
    /// `|D₁₂ − D₂₁|` before symmetrization.
    pub asymmetry: f64,
    pub cg_iterations: [usize; 2],
    pub cg_residuals: [f64; 2],
    pub history: Vec<RefinementStep>,
    pub converged: bool,
}

impl EffectiveTensor {
    /// `|det(D)·Z² − 1|`.
    pub fn det_residual(&self) -> f64 {
        (self.d.determinant() * self.z * self.z - 1.0).abs()
    }
}

/// `D[i,j] = (1/(R²Z_R)) Σ_T |T|·(e_i + ∇χ_i)·A(c_T)(e_j + ∇χ_j)`.
pub fn effective_tensor(problem: &CellProblem<'_>, correctors: &CorrectorSolution) -> EffectiveTensor {
    let mesh = problem.mesh;
    let els = mesh.elements();
    let (raw, area_sum) = par::reduce(els.len(), (Matrix2::zeros(), 0.0), |k| {
        let el = &els[k];
        let grads = mesh.shape_gradients(el);
        let c = &problem.coefficients[k];
        let du = |dir: usize| -> Vector2<f64> {
            let mut u = Vector2::zeros();
            u[dir] = 1.0;
            for (g, &v) in grads.iter().zip(&el.vertices) {
                u += g * correctors.chi[dir][v as usize];
            }
            u
        };
        let u = [du(0), du(1)];
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            let au = c.conductivity * u[i];
            for j in 0..2 {
                m[(j, i)] = u[j].dot(&au);
            }
        }
        (m, c.area_element)
    }, |a, b| (a.0 + b.0, a.1 + b.1));
    let n_el = els.len() as f64;
    let z = area_sum / n_el;
    // |T|/R² = 1/#elements for a uniform mesh.
    let d = raw / (n_el * z);
    let bounds = bounds_from(&problem.coefficients);
    EffectiveTensor {
        asymmetry: (d[(0, 1)] - d[(1, 0)]).abs(),
        d: symmetrize(d),
        z,
        period: mesh.size(),
        n: mesh.subdivisions(),
        bounds,
        cg_iterations: correctors.iterations,
        cg_residuals: correctors.residuals,
        history: Vec::new(),
        converged: true,
    }
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

/// Scale-free change between successive tensors:
/// `max_ij |D_ij − D'_ij| / √(D_ii·D_jj)`.
pub fn relative_change(previous: &Matrix2<f64>, current: &Matrix2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let scale = (current[(i, i)] * current[(j, j)]).abs().sqrt();
            worst = worst.max((current[(i, j)] - previous[(i, j)]).abs() / scale);
        }
    }
    worst
}

/// Starting resolution: at least eight elements across the field's shortest
/// length scale, and never fewer than eight per axis.
pub fn default_start(field: &FieldRealization) -> usize {
    let per_axis = (8.0 * field.period() / field.length_scale()).ceil();
    (per_axis as usize).max(8)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub tol_rel: f64,
    /// First mesh resolution; `None` selects [`default_start`].
    pub n0: Option<usize>,
    /// Resolution past which refinement stops unconverged.
    pub max_n: usize,
    /// Minimum number of levels solved, regardless of convergence.
    pub min_levels: usize,
    pub diagonal: Diagonal,
    pub cg: CgOptions,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-2,
            n0: None,
            max_n: 1024,
            min_levels: 2,
            diagonal: Diagonal::Forward,
            cg: CgOptions::default(),
        }
    }
}

/// Computes `D_R` on meshes `n₀, 2n₀, 4n₀, …` until successive tensors differ
/// by at most `tol_rel`.
///
/// Returns the finest tensor with the whole history. If the next level would
/// exceed `max_n` the last tensor is returned with `converged = false`.
pub fn refine_until(field: &FieldRealization, opts: &RefineOptions) -> Result<EffectiveTensor> {
    if !(opts.tol_rel > 0.0) {
        return Err(Error::invalid("tol_rel", "refinement tolerance must be positive"));
    }
    let mut n = opts.n0.unwrap_or_else(|| default_start(field));
    if n > opts.max_n {
        return Err(Error::invalid("n0", "starting resolution exceeds max_n"));
    }
    let mut history: Vec<RefinementStep> = Vec::new();
    let mut guess: Option<[Vec<f64>; 2]> = None;
    loop {
        let mesh = PeriodicMesh::with_diagonal(field.period(), n, opts.diagonal)?;
        let problem = assemble_with(&mesh, sample_coefficients(field, &mesh)?);
        let correctors =
            solve_correctors_from(&problem.stiffness, &problem.loads, guess.as_ref(), &opts.cg)?;
        let mut tensor = effective_tensor(&problem, &correctors);
        let change = history.last().map(|prev| relative_change(&prev.d, &tensor.d));
        history.push(RefinementStep {
            n,
            d: tensor.d,
            z: tensor.z,
            relative_change: change,
        });
        let done = history.len() >= opts.min_levels.max(2) && change.is_some_and(|c| c <= opts.tol_rel);
        let next = 2 * n;
        if done || next > opts.max_n {
            tensor.converged = done;
            tensor.history = history;
            return Ok(tensor);
        }
        guess = Some(correctors.chi.map(|c| mesh.prolongate(&c)));
        n = next;
    }
}
