//! Riemannian quantities of a Monge-gauge surface `(x, h(x))`.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::fields::{FieldRealization, FieldSample};
use crate::par;

/// Metric data at one point: `g = I + ∇h⊗∇h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub grad_h: Vector2<f64>,
    pub hess_h: Matrix2<f64>,
    /// `|g| = 1 + ‖∇h‖²`.
    pub det_g: f64,
    /// `g⁻¹ = I − ∇h⊗∇h / |g|` (Sherman–Morrison).
    pub inv_g: Matrix2<f64>,
    /// `√|g|`.
    pub area_element: f64,
}

impl MetricPoint {
    pub fn from_sample(s: &FieldSample) -> Self {
        let p = s.grad;
        let det_g = 1.0 + p.norm_squared();
        let inv_g = Matrix2::identity() - p * p.transpose() / det_g;
        Self {
            grad_h: p,
            hess_h: s.hess,
            det_g,
            inv_g,
            area_element: det_g.sqrt(),
        }
    }

    pub fn metric(&self) -> Matrix2<f64> {
        Matrix2::identity() + self.grad_h * self.grad_h.transpose()
    }

    /// Cell-problem coefficient `A = √|g|·g⁻¹`; unimodular in two dimensions.
    pub fn conductivity(&self) -> Matrix2<f64> {
        self.inv_g * self.area_element
    }

    /// `A⁻¹ = g/√|g|`.
    pub fn resistivity(&self) -> Matrix2<f64> {
        self.metric() / self.area_element
    }

    /// SDE drift `F = |g|^{-1/2} ∇·(√|g| g⁻¹)`.
    ///
    /// With `p = ∇h`, `H = ∇∇h` and `G = 1 + ‖p‖²`, the product rule applied to
    /// `√G·I − p⊗p/√G` gives
    ///
    /// ```text
    /// ∇·(√G I)       = Hp/√G
    /// ∇·(p⊗p/√G)     = (Hp + p·trH)/√G − p·(pᵀHp)/G^{3/2}
    /// ```
    ///
    /// so the `Hp` terms cancel and `F = −p·(trH − pᵀHp/G)/G`.
    pub fn drift(&self) -> Vector2<f64> {
        let p = self.grad_h;
        let h = self.hess_h;
        let g = self.det_g;
        let curvature = h.trace() - p.dot(&(h * p)) / g;
        -p * (curvature / g)
    }

    /// Symmetric positive square root of `2·g⁻¹`.
    ///
    /// For a 2×2 SPD matrix `A`, `√A = (A + √|A|·I)/√(trA + 2√|A|)`.
    pub fn diffusion_sqrt(&self) -> Matrix2<f64> {
        let a = self.inv_g * 2.0;
        // det(2g⁻¹) = 4/|g| exactly.
        let sqrt_det = 2.0 / self.area_element;
        let scale = (a.trace() + 2.0 * sqrt_det).sqrt();
        (a + Matrix2::identity() * sqrt_det) / scale
    }
}

pub fn metric_at(field: &FieldRealization, x: Vector2<f64>) -> MetricPoint {
    MetricPoint::from_sample(&field.eval(x))
}

pub fn drift_at(field: &FieldRealization, x: Vector2<f64>) -> Vector2<f64> {
    metric_at(field, x).drift()
}

pub fn diffusion_sqrt_at(field: &FieldRealization, x: Vector2<f64>) -> Matrix2<f64> {
    metric_at(field, x).diffusion_sqrt()
}

/// Cell average of the area element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageArea {
    pub z: f64,
    pub period: f64,
    pub resolution: usize,
    /// Richardson estimate `|Z(r) − Z(r/2)|/3` of the quadrature error.
    pub error_estimate: f64,
}

/// Midpoint rule on a `resolution × resolution` grid over one period cell.
pub fn average_area(field: &FieldRealization, resolution: usize) -> Result<AverageArea> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "quadrature resolution must be at least 2"));
    }
    let z = midpoint_area(field, resolution);
    let coarse = midpoint_area(field, resolution / 2);
    Ok(AverageArea {
        z,
        period: field.period(),
        resolution,
        error_estimate: (z - coarse).abs() / 3.0,
    })
}

fn midpoint_area(field: &FieldRealization, n: usize) -> f64 {
    let step = field.period() / n as f64;
    let total = par::sum(n * n, 0.0, |k| {
        let (i, j) = (k % n, k / n);
        let x = Vector2::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
        metric_at(field, x).area_element
    });
    total / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn from_grad(p: Vector2<f64>) -> MetricPoint {
        MetricPoint::from_sample(&FieldSample {
            value: 0.0,
            grad: p,
            hess: Matrix2::zeros(),
        })
    }

    #[test]
    fn flat_metric() {
        let f = FieldRealization::flat(3.0).unwrap();
        let m = metric_at(&f, Vector2::new(0.3, 2.9));
        assert_eq!(m.det_g, 1.0);
        assert_eq!(m.inv_g, Matrix2::identity());
        assert_eq!(m.area_element, 1.0);
        assert_eq!(m.drift(), Vector2::zeros());
        assert_relative_eq!(
            m.diffusion_sqrt(),
            Matrix2::identity() * 2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_forms() {
        let m = from_grad(Vector2::new(1.0, 0.0));
        assert_eq!(m.det_g, 2.0);
        assert_relative_eq!(m.inv_g, Matrix2::new(0.5, 0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(m.area_element, 2f64.sqrt(), epsilon = 1e-15);
        let s = m.diffusion_sqrt();
        assert_relative_eq!(s * s, m.inv_g * 2.0, epsilon = 1e-12);

        let m = from_grad(Vector2::new(3.0, 4.0));
        assert_eq!(m.det_g, 26.0);
        let expect = Matrix2::identity() - Matrix2::new(9.0, 12.0, 12.0, 16.0) / 26.0;
        assert_relative_eq!(m.inv_g, expect, epsilon = 1e-15);
    }

    #[test]
    fn sqrt_of_skewed_metric() {
        let m = from_grad(Vector2::new(0.3, -0.7));
        let s = m.diffusion_sqrt();
        assert_eq!(s[(0, 1)], s[(1, 0)]);
        let eig = s.symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&e| e > 0.0));
        assert!((s * s - m.inv_g * 2.0).amax() < 1e-12);
    }

    /// Central differences of the columns of `√|g|·g⁻¹`, divided by `√|g|`.
    fn fd_drift(f: &FieldRealization, x: Vector2<f64>, d: f64) -> Vector2<f64> {
        let a = |y: Vector2<f64>| metric_at(f, y).conductivity();
        let e1 = Vector2::new(d, 0.0);
        let e2 = Vector2::new(0.0, d);
        let d1 = (a(x + e1) - a(x - e1)) / (2.0 * d);
        let d2 = (a(x + e2) - a(x - e2)) / (2.0 * d);
        let div = Vector2::new(d1[(0, 0)] + d2[(0, 1)], d1[(1, 0)] + d2[(1, 1)]);
        div / metric_at(f, x).area_element
    }

    #[test]
    fn ridge_drift() {
        let f = FieldRealization::ridge(1.0, 1.0).unwrap();
        for i in 0..20 {
            let x = Vector2::new(i as f64 * 0.05 + 0.013, i as f64 * 0.31);
            assert_eq!(drift_at(&f, x)[1], 0.0);
        }
        let x = Vector2::new(0.1, 0.4);
        let exact = drift_at(&f, x);
        let fd = fd_drift(&f, x, 1e-6);
        assert!((exact[0] - fd[0]).abs() <= 1e-5 * exact[0].abs());
        // 1-D reduction: F₁ = −h'h''/(1+h'²)².
        let (s, c) = (2.0 * std::f64::consts::PI * 0.1).sin_cos();
        let k = 2.0 * std::f64::consts::PI;
        let (h1, h2) = (k * c, -k * k * s);
        assert_relative_eq!(exact[0], -h1 * h2 / (1.0 + h1 * h1).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn average_area_of_flat_and_ridge() {
        let f = FieldRealization::flat(5.0).unwrap();
        let z = average_area(&f, 8).unwrap();
        assert_eq!(z.z, 1.0);
        assert_eq!(z.error_estimate, 0.0);
        assert!(average_area(&f, 1).is_err());
    }

    #[test]
    fn ridge_area_grows_with_amplitude() {
        let mut last = 0.0;
        for k in 0..8 {
            let a = k as f64 * 0.25;
            let z = average_area(&FieldRealization::ridge(a, 1.0).unwrap(), 64).unwrap().z;
            if k == 0 {
                assert_eq!(z, 1.0);
            } else {
                assert!(z > last);
            }
            last = z;
        }
    }

    proptest! {
        #[test]
        fn metric_invariants(px in -20.0f64..20.0, py in -20.0f64..20.0) {
            let m = from_grad(Vector2::new(px, py));
            prop_assert_eq!(m.det_g, 1.0 + (px * px + py * py));
            let prod = m.inv_g * m.metric();
            prop_assert!((prod - Matrix2::identity()).amax() <= 1e-12);
            prop_assert!((m.conductivity().determinant() - 1.0).abs() <= 1e-10);
            let s = m.diffusion_sqrt();
            prop_assert!((s * s - m.inv_g * 2.0).amax() <= 1e-12);
        }
    }
}
