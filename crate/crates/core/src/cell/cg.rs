//! Jacobi-preconditioned conjugate gradients on the complement of the
//! constant vector.
//!
//! The periodic stiffness matrix is singular with kernel `span{𝟙}`. Every
//! residual and preconditioned residual is projected onto mean-zero vectors,
//! so iterates stay in the subspace where the operator is definite and the
//! returned solution is the mean-zero one.

use super::sparse::CsrMatrix;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once `‖r‖/‖b‖` falls to this value.
    pub tol: f64,
    /// Iteration cap; `None` means `10·dim`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖/‖b‖` (recurrence value).
    pub residual: f64,
    pub converged: bool,
}

pub(crate) fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = par::sum(v.len(), 0.0, |i| v[i]) / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Solves `A x = b` for symmetric positive semidefinite `A` with `A𝟙 = 0`.
///
/// `b` is projected to mean zero first (a consistent right-hand side is
/// already mean-zero). `guess` seeds the iteration.
pub fn solve_mean_zero(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &CgOptions,
) -> CgOutcome {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let max_iter = opts.max_iter.unwrap_or(10 * n);
    let mut rhs = b.to_vec();
    remove_mean(&mut rhs);
    let b_norm = par::dot(&rhs, &rhs).sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match guess {
        Some(g) => {
            let mut g = g.to_vec();
            remove_mean(&mut g);
            g
        }
        None => vec![0.0; n],
    };
    let mut r = rhs.clone();
    let mut q = vec![0.0; n];
    if guess.is_some() {
        a.mul_vec_into(&x, &mut q);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= qi);
        remove_mean(&mut r);
    }
    let precondition = |r: &[f64], z: &mut Vec<f64>| {
        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        remove_mean(z);
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut residual = par::dot(&r, &r).sqrt() / b_norm;
    let mut iterations = 0;

    while residual > opts.tol && iterations < max_iter {
        a.mul_vec_into(&p, &mut q);
        let pq = par::dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let step = rz / pq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= step * qi);
        remove_mean(&mut r);
        precondition(&r, &mut z);
        let rz_next = par::dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        residual = par::dot(&r, &r).sqrt() / b_norm;
        iterations += 1;
    }
    remove_mean(&mut x);
    CgOutcome {
        x,
        iterations,
        residual,
        converged: residual <= opts.tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Weighted periodic 1-D chain Laplacian: PSD with kernel 𝟙.
    fn chain(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let (l, r) = ((i + n - 1) % n, (i + 1) % n);
            let mut entries = vec![(l, -w[l]), (i, w[l] + w[i]), (r, -w[i])];
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix::from_parts(n, row_ptr, cols, vals)
    }

    fn random_mean_zero(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        remove_mean(&mut b);
        b
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = chain(10, 1);
        let out = solve_mean_zero(&a, &[0.0; 10], None, &CgOptions::default());
        assert!(out.converged);
        assert_eq!(out.x, vec![0.0; 10]);
    }

    #[test]
    fn solves_singular_consistent_system() {
        let a = chain(50, 2);
        let b = random_mean_zero(50, 3);
        let out = solve_mean_zero(&a, &b, None, &CgOptions::default());
        assert!(out.converged);
        let ax = a.mul_vec(&out.x);
        let err = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
        let mean: f64 = out.x.iter().sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn energy_error_is_monotone() {
        let a = chain(40, 5);
        let b = random_mean_zero(40, 6);
        let exact = solve_mean_zero(&a, &b, None, &CgOptions { tol: 1e-14, max_iter: None }).x;
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(p, q)| p - q).collect();
            par::dot(&e, &a.mul_vec(&e))
        };
        let mut last = f64::INFINITY;
        for k in 1..40 {
            let out = solve_mean_zero(&a, &b, None, &CgOptions { tol: 0.0, max_iter: Some(k) });
            let en = energy(&out.x);
            assert!(en <= last * (1.0 + 1e-10) + 1e-28, "iteration {k}: {en} > {last}");
            last = en;
        }
    }

    #[test]
    fn reports_non_convergence() {
        let a = chain(200, 7);
        let b = random_mean_zero(200, 8);
        let out = solve_mean_zero(&a, &b, None, &CgOptions { tol: 1e-12, max_iter: Some(3) });
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert!(out.residual > 1e-12);
    }

    #[test]
    fn warm_start_from_solution_needs_no_iterations() {
        let a = chain(30, 9);
        let b = random_mean_zero(30, 10);
        let first = solve_mean_zero(&a, &b, None, &CgOptions::default());
        let again = solve_mean_zero(&a, &b, Some(&first.x), &CgOptions { tol: 1e-8, max_iter: None });
        assert!(again.iterations <= 1);
    }
}
