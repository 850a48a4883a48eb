use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use surfdiff::cell::{refine_until, RefineOptions};
use surfdiff::fields::FieldRealization;
use surfdiff::geometry::{diffusion_sqrt_at, drift_at};
use surfdiff::sde::{em_step, simulate, simulate_many, SimulationPlan, TrajectoryStats};

fn normal_pair(rng: &mut ChaCha8Rng) -> Vector2<f64> {
    Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// 99.5% standard normal quantile.
const Z995: f64 = 2.5758;

#[test]
fn flat_increments_have_covariance_two_dt() {
    let flat = FieldRealization::flat(1.0).unwrap();
    let dt = 1e-3;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut x = Vector2::new(0.3, 0.7);
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let y = em_step(&flat, x, dt, normal_pair(&mut rng));
        let d = (y - x) / (2.0 * dt).sqrt();
        s11 += d[0] * d[0];
        s12 += d[0] * d[1];
        s22 += d[1] * d[1];
        x = y;
    }
    // Sums of squared standard normals are χ²(n); the cross sum has variance n.
    let nf = n as f64;
    for s in [s11, s22] {
        assert!(((s - nf) / (2.0 * nf).sqrt()).abs() <= Z995, "{s}");
    }
    assert!((s12 / nf.sqrt()).abs() <= Z995, "{s12}");
}

#[test]
fn flat_variance_grows_linearly() {
    let flat = FieldRealization::flat(1.0).unwrap();
    let plan = SimulationPlan {
        dt: 1e-2,
        horizon: 50.0,
        sample_interval: 1.0,
        start: Vector2::zeros(),
        seed: 2,
    };
    let stats = simulate_many(&flat, &plan, 40).unwrap();
    let msd = stats.msd_curve();
    assert_eq!(msd[0], (0.0, 0.0));
    for &(t, m) in &msd[1..10] {
        // E|X(t) − X(0)|² = 4t in two dimensions; the relative error of the
        // pooled estimate is below 10% at these lags.
        assert!((m / (4.0 * t) - 1.0).abs() < 0.1, "t = {t}: {m}");
    }
}

#[test]
fn ridge_single_step_mean_is_drift() {
    let ridge = FieldRealization::ridge(1.0, 1.0).unwrap();
    let x = Vector2::new(0.1, 0.4);
    let dt = 1e-4;
    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mean = Vector2::zeros();
    for _ in 0..reps {
        mean += em_step(&ridge, x, dt, normal_pair(&mut rng)) - x;
    }
    mean /= reps as f64;
    let f = drift_at(&ridge, x) * dt;
    let s = diffusion_sqrt_at(&ridge, x);
    let cov = s * s * dt;
    for k in 0..2 {
        let se = (cov[(k, k)] / reps as f64).sqrt();
        assert!((mean[k] - f[k]).abs() <= 4.0 * se, "component {k}: {} vs {}", mean[k], f[k]);
    }
    assert!(f[0].abs() > 0.0);
}

fn flat_plan(seed: u64) -> SimulationPlan {
    SimulationPlan {
        dt: 1e-2,
        horizon: 100.0,
        sample_interval: 1.0,
        start: Vector2::zeros(),
        seed,
    }
}

#[test]
fn flat_tensor_is_identity_within_three_se() {
    let flat = FieldRealization::flat(1.0).unwrap();
    let stats = simulate_many(&flat, &flat_plan(4), 20).unwrap();
    assert_eq!(stats.increments(), 2000);
    let d = stats.diffusion_tensor();
    let se = stats.standard_errors();
    assert!((d[(0, 0)] - 1.0).abs() <= 3.0 * se[0], "{d:?} {se:?}");
    assert!(d[(0, 1)].abs() <= 3.0 * se[1], "{d:?} {se:?}");
    assert!((d[(1, 1)] - 1.0).abs() <= 3.0 * se[2], "{d:?} {se:?}");
    assert_eq!(d, d.transpose());
    assert!(d.symmetric_eigen().eigenvalues.min() >= 0.0);
}

#[test]
fn single_run_standard_errors_are_calibrated() {
    // Twenty batches give a t-like statistic with heavy tails, so a few
    // percent of single runs fall outside 3 SE.
    let flat = FieldRealization::flat(1.0).unwrap();
    let runs = 200;
    let mut outside = 0;
    for seed in 0..runs {
        let stats = simulate(&flat, &flat_plan(1000 + seed)).unwrap();
        assert_eq!(stats.increments(), 100);
        let d = stats.diffusion_tensor();
        let se = stats.standard_errors();
        outside += ((d[(0, 0)] - 1.0).abs() > 3.0 * se[0]) as usize;
        outside += ((d[(1, 1)] - 1.0).abs() > 3.0 * se[2]) as usize;
    }
    assert!(outside <= 2 * runs as usize / 20, "{outside} of {}", 2 * runs);
}

/// Integrates with step `dt` driven by `noise`, sampling every `per_sample` steps.
fn path(field: &FieldRealization, dt: f64, noise: &[Vector2<f64>], per_sample: usize) -> Vec<Vector2<f64>> {
    let mut x = Vector2::zeros();
    let mut out = vec![x];
    for (k, xi) in noise.iter().enumerate() {
        x = em_step(field, x, dt, *xi);
        if (k + 1) % per_sample == 0 {
            out.push(x);
        }
    }
    out
}

#[test]
fn halving_the_timestep_changes_little() {
    let ridge = FieldRealization::ridge(0.5, 1.0).unwrap();
    let dt: f64 = 1e-3;
    let delta: f64 = 0.5;
    let horizon: f64 = 200.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fine: Vec<Vector2<f64>> = (0..(horizon / dt * 2.0).round() as usize)
        .map(|_| normal_pair(&mut rng))
        .collect();
    // The coarse step sees the same Brownian path: ξ = (ξ₁ + ξ₂)/√2.
    let coarse: Vec<Vector2<f64>> = fine
        .chunks_exact(2)
        .map(|p| (p[0] + p[1]) / 2f64.sqrt())
        .collect();
    let per = (delta / dt).round() as usize;
    let a = TrajectoryStats::from_positions(&path(&ridge, dt, &coarse, per), delta);
    let b = TrajectoryStats::from_positions(&path(&ridge, dt / 2.0, &fine, 2 * per), delta);
    let (da, db) = (a.diffusion_tensor(), b.diffusion_tensor());
    let se = b.standard_errors();
    let diff = [
        (da[(0, 0)] - db[(0, 0)]).abs(),
        (da[(0, 1)] - db[(0, 1)]).abs(),
        (da[(1, 1)] - db[(1, 1)]).abs(),
    ];
    for k in 0..3 {
        assert!(diff[k] < se[k], "component {k}: change {} vs se {}", diff[k], se[k]);
    }
}

#[test]
fn ridge_simulation_agrees_with_cell_problem() {
    let ridge = FieldRealization::ridge(1.0, 1.0).unwrap();
    let fem = refine_until(
        &ridge,
        &RefineOptions {
            tol_rel: 1e-3,
            ..Default::default()
        },
    )
    .unwrap();
    let plan = SimulationPlan {
        horizon: 100.0,
        ..SimulationPlan::desk_scale(6)
    };
    let stats = simulate_many(&ridge, &plan, 8).unwrap();
    let d: Matrix2<f64> = stats.diffusion_tensor();
    let se = stats.standard_errors();
    let pairs = [((0, 0), se[0]), ((0, 1), se[1]), ((1, 1), se[2])];
    for (ij, s) in pairs {
        assert!(
            (d[ij] - fem.d[ij]).abs() <= 3.0 * s,
            "{ij:?}: simulated {} vs cell {} (se {s})",
            d[ij],
            fem.d[ij]
        );
    }
}
