//! Periodic cell problem: P1 finite elements on `[0, R]²`, Jacobi-CG with the
//! constants projected out, and the effective tensor `D_R` with its bounds.

mod assembly;
mod cg;
mod mesh;
mod sparse;
mod tensor;

pub use assembly::{assemble, sample_coefficients, CellProblem, ElementCoefficient};
pub use cg::{solve_mean_zero, CgOptions, CgOutcome};
pub use mesh::{Diagonal, Element, PeriodicMesh};
pub use sparse::CsrMatrix;
pub use tensor::{
    bounds_from, default_start, effective_tensor, refine_until, relative_change,
    solve_correctors, solve_correctors_from, voigt_reuss_bounds, Bounds, CorrectorSolution,
    EffectiveTensor, RefineOptions, RefinementStep,
};

/// Shorthand for [`PeriodicMesh::new`].
pub fn build_mesh(size: f64, n: usize) -> crate::Result<PeriodicMesh> {
    PeriodicMesh::new(size, n)
}
