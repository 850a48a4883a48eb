use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::mesh::PeriodicMesh;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::fields::FieldRealization;
use crate::geometry::MetricPoint;

/// Metric data sampled at one element centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCoefficient {
    /// `A = √|g|·g⁻¹`.
    pub conductivity: Matrix2<f64>,
    /// `A⁻¹ = g/√|g|`.
    pub resistivity: Matrix2<f64>,
    pub area_element: f64,
}

/// Samples the cell-problem coefficient at every element centroid.
pub fn sample_coefficients(
    field: &FieldRealization,
    mesh: &PeriodicMesh,
) -> Result<Vec<ElementCoefficient>> {
    let (mp, fp) = (mesh.size(), field.period());
    if (mp - fp).abs() > 1e-12 * fp {
        return Err(Error::PeriodMismatch { mesh: mp, field: fp });
    }
    Ok(mesh
        .elements()
        .par_iter()
        .map(|el| {
            let m = MetricPoint::from_sample(&field.eval(el.centroid));
            ElementCoefficient {
                conductivity: m.conductivity(),
                resistivity: m.resistivity(),
                area_element: m.area_element,
            }
        })
        .collect())
}

/// Discrete periodic cell problem on one mesh.
#[derive(Debug, Clone)]
pub struct CellProblem<'m> {
    pub mesh: &'m PeriodicMesh,
    pub coefficients: Vec<ElementCoefficient>,
    /// `K[u,v] = Σ_T |T|·∇φ_u·A(c_T)∇φ_v`.
    pub stiffness: CsrMatrix,
    /// `b_e[v] = −Σ_T |T|·e·A(c_T)∇φ_v` for `e = e₁, e₂`.
    pub loads: [Vec<f64>; 2],
}

/// Assembles the P1 stiffness matrix and the two corrector loads with
/// one-point (centroid) quadrature.
pub fn assemble<'m>(field: &FieldRealization, mesh: &'m PeriodicMesh) -> Result<CellProblem<'m>> {
    let coefficients = sample_coefficients(field, mesh)?;
    Ok(assemble_with(mesh, coefficients))
}

pub(crate) fn assemble_with(mesh: &PeriodicMesh, coefficients: Vec<ElementCoefficient>) -> CellProblem<'_> {
    let area = mesh.element_area();
    let local: Vec<([f64; 9], [[f64; 3]; 2])> = mesh
        .elements()
        .par_iter()
        .zip(&coefficients)
        .map(|(el, c)| {
            let grads = mesh.shape_gradients(el);
            let a = c.conductivity;
            let flux: [Vector2<f64>; 3] = grads.map(|g| a * g);
            let mut k = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    k[3 * i + j] = area * grads[i].dot(&flux[j]);
                }
            }
            let mut b = [[0.0; 3]; 2];
            for (dir, row) in b.iter_mut().enumerate() {
                for (v, out) in row.iter_mut().enumerate() {
                    // e·A∇φ = (A∇φ)_dir since A is symmetric.
                    *out = -area * flux[v][dir];
                }
            }
            (k, b)
        })
        .collect();

    let plan = &mesh.plan;
    let values: Vec<f64> = (0..plan.cols.len())
        .into_par_iter()
        .map(|s| {
            plan.sources[plan.slot_ptr[s]..plan.slot_ptr[s + 1]]
                .iter()
                .map(|&src| local[src as usize / 9].0[src as usize % 9])
                .sum()
        })
        .collect();
    let stiffness = CsrMatrix::from_parts(
        mesh.unknowns(),
        plan.row_ptr.clone(),
        plan.cols.clone(),
        values,
    );

    let load = |dir: usize| -> Vec<f64> {
        (0..mesh.unknowns())
            .into_par_iter()
            .map(|v| {
                let s = plan.diag_slot[v];
                plan.sources[plan.slot_ptr[s]..plan.slot_ptr[s + 1]]
                    .iter()
                    .map(|&src| {
                        let (e, ab) = (src as usize / 9, src as usize % 9);
                        local[e].1[dir][ab / 3]
                    })
                    .sum()
            })
            .collect()
    };
    let loads = [load(0), load(1)];
    CellProblem {
        mesh,
        coefficients,
        stiffness,
        loads,
    }
}
