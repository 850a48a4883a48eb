mod common;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfdiff::fields::{
    sample_gaussian_field, sample_poisson_field, FieldRealization, GaussianFieldParams, PoissonFieldParams,
};
use surfdiff::geometry::{average_area, diffusion_sqrt_at, drift_at, metric_at};

fn realizations() -> Vec<FieldRealization> {
    vec![
        sample_poisson_field(&PoissonFieldParams::new(1.5, 1.0, 20.0, 3)).unwrap(),
        sample_gaussian_field(&GaussianFieldParams::new(0.1, 1024, 10.0, 3)).unwrap(),
        FieldRealization::ridge(1.3, 2.0).unwrap(),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, l: f64) -> Vector2<f64> {
    Vector2::new(rng.random_range(0.0..l), rng.random_range(0.0..l))
}

#[test]
fn ridge_area_matches_one_dimensional_oracle() {
    let z_ref = common::ridge_area(1.0);
    assert!((z_ref - 4.18827520369843).abs() < 1e-12);
    let ridge = FieldRealization::ridge(1.0, 1.0).unwrap();
    let z = average_area(&ridge, 256).unwrap();
    assert!((z.z - z_ref).abs() <= 1e-3, "{} vs {z_ref}", z.z);
    assert!(z.error_estimate <= 1e-3);
    assert_eq!(z.resolution, 256);
}

#[test]
fn ridge_area_increases_with_amplitude() {
    let mut prev = average_area(&FieldRealization::ridge(0.0, 1.0).unwrap(), 128).unwrap().z;
    assert_eq!(prev, 1.0);
    for k in 1..=12 {
        let a = 0.25 * k as f64;
        let z = average_area(&FieldRealization::ridge(a, 1.0).unwrap(), 128).unwrap().z;
        assert!(z > prev, "a = {a}");
        assert!((z - common::ridge_area(a)).abs() < 1e-3 * z);
        prev = z;
    }
}

#[test]
fn metric_invariants_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for field in realizations() {
        for _ in 0..1000 {
            let x = random_point(&mut rng, field.period());
            let m = metric_at(&field, x);
            let p = m.grad_h;
            assert_eq!(m.det_g, 1.0 + (p[0] * p[0] + p[1] * p[1]));
            let g = Matrix2::identity() + p * p.transpose();
            assert!((m.inv_g * g - Matrix2::identity()).amax() <= 1e-12);
            assert!((m.conductivity().determinant() - 1.0).abs() <= 1e-10);
            let s = diffusion_sqrt_at(&field, x);
            assert_eq!(s, s.transpose());
            assert!((s * s - 2.0 * m.inv_g).amax() <= 1e-12);
        }
    }
}

/// `F_i = (1/√|g|) Σ_j ∂_j (√|g| g⁻¹)_{ij}` by central differences.
fn fd_drift(field: &FieldRealization, x: Vector2<f64>, d: f64) -> Vector2<f64> {
    let a = |y: Vector2<f64>| metric_at(field, y).conductivity();
    let e = [Vector2::new(d, 0.0), Vector2::new(0.0, d)];
    let da0 = (a(x + e[0]) - a(x - e[0])) / (2.0 * d);
    let da1 = (a(x + e[1]) - a(x - e[1])) / (2.0 * d);
    Vector2::new(da0[(0, 0)] + da1[(0, 1)], da0[(1, 0)] + da1[(1, 1)]) / metric_at(field, x).area_element
}

#[test]
fn drift_matches_divergence_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for field in realizations() {
        for _ in 0..100 {
            let x = random_point(&mut rng, field.period());
            let f = drift_at(&field, x);
            let fd = (4.0 * fd_drift(&field, x, 5e-5) - fd_drift(&field, x, 1e-4)) / 3.0;
            assert!(
                (f - fd).norm() <= 1e-4 * f.norm() + 1e-8,
                "{} at {x:?}: {f:?} vs {fd:?}",
                field.family()
            );
        }
    }
}

#[test]
fn ridge_drift_examples() {
    let ridge = FieldRealization::ridge(1.0, 1.0).unwrap();
    for k in 0..50 {
        let x = Vector2::new(k as f64 / 50.0, 0.37 * k as f64);
        assert_eq!(drift_at(&ridge, x)[1], 0.0);
    }
    let x = Vector2::new(0.1, 0.0);
    let f = drift_at(&ridge, x)[0];
    let fd = fd_drift(&ridge, x, 1e-6)[0];
    assert!(((f - fd) / fd).abs() <= 1e-5, "{f} vs {fd}");
}

#[test]
fn flat_geometry() {
    let flat = FieldRealization::flat(3.0).unwrap();
    let x = Vector2::new(0.4, 2.9);
    let m = metric_at(&flat, x);
    assert_eq!((m.det_g, m.area_element), (1.0, 1.0));
    assert_eq!(m.inv_g, Matrix2::identity());
    assert_eq!(drift_at(&flat, x), Vector2::zeros());
    assert!((diffusion_sqrt_at(&flat, x) - Matrix2::identity() * 2f64.sqrt()).amax() < 1e-15);
    assert_eq!(average_area(&flat, 8).unwrap().z, 1.0);
    assert!(average_area(&flat, 1).is_err());
}
