use nalgebra::{Matrix2, Vector2};

use super::FieldSample;

/// Exponent below which `exp` would leave the normal range; the bump is
/// reported as exactly zero there.
const MIN_EXPONENT: f64 = -708.396_418_532_264_1; // ln(f64::MIN_POSITIVE)

/// Smooth compactly supported protrusion `α·exp(−1/(1−‖x‖²))` on the unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub amplitude: f64,
}

impl BumpSpec {
    pub const RADIUS: f64 = 1.0;

    pub fn new(amplitude: f64) -> Self {
        Self { amplitude }
    }

    /// Value, gradient and Hessian at offset `x` from the bump centre.
    ///
    /// With `s = 1 − ‖x‖²` and `φ = −1/s` the bump is `α·e^φ`, so
    ///
    /// ```text
    /// ∇f  = f·∇φ,              ∇φ  = −2x/s²
    /// ∇∇f = f·(∇φ⊗∇φ + ∇∇φ),   ∇∇φ = −2I/s² − 8 x⊗x/s³
    /// ```
    pub fn eval(&self, x: Vector2<f64>) -> FieldSample {
        let r2 = x.norm_squared();
        if r2 >= 1.0 {
            return FieldSample::ZERO;
        }
        let s = 1.0 - r2;
        let exponent = -1.0 / s;
        if exponent < MIN_EXPONENT {
            return FieldSample::ZERO;
        }
        let value = self.amplitude * exponent.exp();
        let inv_s2 = 1.0 / (s * s);
        let dphi = x * (-2.0 * inv_s2);
        let xx = x * x.transpose();
        let ddphi = Matrix2::identity() * (-2.0 * inv_s2) - xx * (8.0 * inv_s2 / s);
        FieldSample {
            value,
            grad: dphi * value,
            hess: (dphi * dphi.transpose() + ddphi) * value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_grad(b: &BumpSpec, x: Vector2<f64>, d: f64) -> Vector2<f64> {
        let e1 = Vector2::new(d, 0.0);
        let e2 = Vector2::new(0.0, d);
        Vector2::new(
            (b.eval(x + e1).value - b.eval(x - e1).value) / (2.0 * d),
            (b.eval(x + e2).value - b.eval(x - e2).value) / (2.0 * d),
        )
    }

    fn fd_hess(b: &BumpSpec, x: Vector2<f64>, d: f64) -> Matrix2<f64> {
        let e1 = Vector2::new(d, 0.0);
        let e2 = Vector2::new(0.0, d);
        let c1 = (b.eval(x + e1).grad - b.eval(x - e1).grad) / (2.0 * d);
        let c2 = (b.eval(x + e2).grad - b.eval(x - e2).grad) / (2.0 * d);
        Matrix2::from_columns(&[c1, c2])
    }

    #[test]
    fn centre_value() {
        let s = BumpSpec::new(1.0).eval(Vector2::zeros());
        assert_relative_eq!(s.value, (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(s.grad, Vector2::zeros());
        assert_relative_eq!(s.hess[(0, 0)], -2.0 * (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn zero_on_and_outside_support() {
        let b = BumpSpec::new(1.0);
        for x in [
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, -1.0),
            Vector2::new(3.0, 4.0),
        ] {
            assert_eq!(b.eval(x), FieldSample::ZERO);
        }
    }

    #[test]
    fn vanishes_smoothly_at_the_rim() {
        let b = BumpSpec::new(5.0);
        let mut prev = f64::INFINITY;
        for k in 2..=6 {
            let r = 1.0 - 10f64.powi(-k);
            let s = b.eval(Vector2::new(r, 0.0));
            assert!(s.value.is_finite() && s.grad.iter().all(|g| g.is_finite()));
            assert!(s.hess.iter().all(|h| h.is_finite()));
            let size = s.value.abs() + s.grad.norm() + s.hess.norm();
            assert!(size <= prev);
            prev = size;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn off_centre_example_matches_fd() {
        let b = BumpSpec::new(2.0);
        let x = Vector2::new(0.5, 0.0);
        let s = b.eval(x);
        assert_relative_eq!(s.value, 2.0 * (-1.0f64 / 0.75).exp(), epsilon = 1e-15);
        assert_relative_eq!(s.value, 0.527_19, epsilon = 1e-5);
        let g = fd_grad(&b, x, 1e-6);
        assert_relative_eq!(s.grad, g, epsilon = 1e-8);
        let h = fd_hess(&b, x, 1e-6);
        assert_relative_eq!(s.hess, h, epsilon = 1e-7);
        // Radial symmetry: no transverse slope on the x₁ axis.
        assert_eq!(s.grad[1], 0.0);
    }

    #[test]
    fn derivatives_match_fd_across_the_disc() {
        let b = BumpSpec::new(1.3);
        for i in 0..40 {
            let t = i as f64 * 0.37;
            let r = 0.95 * (i as f64 / 40.0);
            let x = Vector2::new(r * t.cos(), r * t.sin());
            let s = b.eval(x);
            let g = fd_grad(&b, x, 1e-5);
            assert!((s.grad - g).norm() <= 1e-5 * (1.0 + s.grad.norm()));
            let h = fd_hess(&b, x, 1e-5);
            assert!((s.hess - h).norm() <= 1e-4 * (1.0 + s.hess.norm()));
        }
    }
}
