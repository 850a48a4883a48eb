use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Which diagonal splits each grid square into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// From `(i, j)` to `(i+1, j+1)`.
    #[default]
    Forward,
    /// From `(i+1, j)` to `(i, j+1)`.
    Backward,
}

/// Hat-function gradients on the four reference right triangles, in units of 1/h.
const SHAPE_GRADS: [[[f64; 2]; 3]; 4] = [
    [[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]],
    [[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]],
    [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
    [[0.0, -1.0], [1.0, 1.0], [-1.0, 0.0]],
];

/// Vertex offsets `(di, dj)` and centroid (in units of h) of each reference shape.
const SHAPE_VERTS: [[(usize, usize); 3]; 4] = [
    [(0, 0), (1, 0), (1, 1)],
    [(0, 0), (1, 1), (0, 1)],
    [(0, 0), (1, 0), (0, 1)],
    [(1, 0), (1, 1), (0, 1)],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub vertices: [u32; 3],
    pub centroid: Vector2<f64>,
    shape: u8,
}

/// Uniform triangulation of `[0, R]²` with opposite edges identified.
///
/// Vertex `(i, j)` has index `j·n + i`; indices are taken modulo `n`, so the
/// unknown count is exactly `n²`.
#[derive(Debug, Clone)]
pub struct PeriodicMesh {
    size: f64,
    n: usize,
    diagonal: Diagonal,
    elements: Vec<Element>,
    pub(crate) plan: AssemblyPlan,
}

impl PeriodicMesh {
    pub fn new(size: f64, n: usize) -> Result<Self> {
        Self::with_diagonal(size, n, Diagonal::Forward)
    }

    pub fn with_diagonal(size: f64, n: usize, diagonal: Diagonal) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "mesh needs at least 2 subdivisions per axis"));
        }
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::invalid("R", "cell size must be positive"));
        }
        if n * n > u32::MAX as usize / 4 {
            return Err(Error::invalid("n", "mesh too large"));
        }
        let h = size / n as f64;
        let shapes: [u8; 2] = match diagonal {
            Diagonal::Forward => [0, 1],
            Diagonal::Backward => [2, 3],
        };
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                for &shape in &shapes {
                    let offs = SHAPE_VERTS[shape as usize];
                    let vertices = offs.map(|(di, dj)| ((j + dj) % n * n + (i + di) % n) as u32);
                    let c = offs.iter().fold(Vector2::zeros(), |acc, &(di, dj)| {
                        acc + Vector2::new((i + di) as f64, (j + dj) as f64)
                    });
                    elements.push(Element {
                        vertices,
                        centroid: c * (h / 3.0),
                        shape,
                    });
                }
            }
        }
        let plan = AssemblyPlan::build(n * n, &elements);
        Ok(Self {
            size,
            n,
            diagonal,
            elements,
            plan,
        })
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> Diagonal {
        self.diagonal
    }

    pub fn spacing(&self) -> f64 {
        self.size / self.n as f64
    }

    pub fn unknowns(&self) -> usize {
        self.n * self.n
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element_area(&self) -> f64 {
        let h = self.spacing();
        0.5 * h * h
    }

    /// Index of grid vertex `(i, j)`, identifying `i ≡ i mod n` and likewise `j`.
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        (j % self.n) * self.n + i % self.n
    }

    pub fn vertex_position(&self, v: usize) -> Vector2<f64> {
        let h = self.spacing();
        Vector2::new((v % self.n) as f64 * h, (v / self.n) as f64 * h)
    }

    /// Gradients of the three local hat functions of `e`.
    pub fn shape_gradients(&self, e: &Element) -> [Vector2<f64>; 3] {
        let inv_h = 1.0 / self.spacing();
        SHAPE_GRADS[e.shape as usize].map(|g| Vector2::new(g[0], g[1]) * inv_h)
    }

    /// Interpolates nodal values from this mesh onto its uniform refinement.
    ///
    /// The refinement is nested (each triangle splits into four congruent
    /// children), so the coarse P1 function is reproduced exactly.
    pub fn prolongate(&self, coarse: &[f64]) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let c = |i: usize, j: usize| coarse[(j % n) * n + i % n];
        let mut fine = vec![0.0; m * m];
        for jj in 0..m {
            for ii in 0..m {
                let (i, j) = (ii / 2, jj / 2);
                fine[jj * m + ii] = match (ii % 2, jj % 2) {
                    (0, 0) => c(i, j),
                    (1, 0) => 0.5 * (c(i, j) + c(i + 1, j)),
                    (0, 1) => 0.5 * (c(i, j) + c(i, j + 1)),
                    _ => match self.diagonal {
                        Diagonal::Forward => 0.5 * (c(i, j) + c(i + 1, j + 1)),
                        Diagonal::Backward => 0.5 * (c(i + 1, j) + c(i, j + 1)),
                    },
                };
            }
        }
        fine
    }
}

/// Sparsity pattern of the stiffness matrix plus, for every nonzero slot, the
/// list of element-matrix entries that sum into it (in element order).
#[derive(Debug, Clone)]
pub(crate) struct AssemblyPlan {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub slot_ptr: Vec<usize>,
    /// `element·9 + 3·a + b`.
    pub sources: Vec<u32>,
    pub diag_slot: Vec<usize>,
}

impl AssemblyPlan {
    fn build(unknowns: usize, elements: &[Element]) -> Self {
        let mut triplets: Vec<(u64, u32)> = Vec::with_capacity(elements.len() * 9);
        for (e, el) in elements.iter().enumerate() {
            for a in 0..3 {
                for b in 0..3 {
                    let key = el.vertices[a] as u64 * unknowns as u64 + el.vertices[b] as u64;
                    triplets.push((key, (e * 9 + 3 * a + b) as u32));
                }
            }
        }
        triplets.sort_by_key(|t| t.0);

        let mut row_ptr = vec![0usize; unknowns + 1];
        let mut cols = Vec::new();
        let mut slot_ptr = vec![0usize];
        let mut diag_slot = vec![usize::MAX; unknowns];
        let mut sources = Vec::with_capacity(triplets.len());
        let mut last = u64::MAX;
        for &(key, src) in &triplets {
            if key != last {
                if last != u64::MAX {
                    slot_ptr.push(sources.len());
                }
                let (r, c) = ((key / unknowns as u64) as usize, (key % unknowns as u64) as usize);
                if r == c {
                    diag_slot[r] = cols.len();
                }
                cols.push(c as u32);
                row_ptr[r + 1] += 1;
                last = key;
            }
            sources.push(src);
        }
        slot_ptr.push(sources.len());
        for r in 0..unknowns {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            row_ptr,
            cols,
            slot_ptr,
            sources,
            diag_slot,
        }
    }
}
