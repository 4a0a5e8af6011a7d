//! Conjugate gradients and power iteration for symmetric positive operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};

/// A real symmetric operator on `R^dim`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Identity operator, the stand-in for an orthonormal basis.
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖b − Sx‖/‖b‖` after each iteration, starting at 1.
    pub residual_history: Vec<f64>,
}

/// Solves `S x = b` by (optionally preconditioned) conjugate gradients.
/// `precond` applies an approximation of `S^{-1}`.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: Option<&dyn Fn(&[f64], &mut [f64])>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(ShearletError::Shape {
            expected: n.to_string(),
            got: b.len().to_string(),
        });
    }
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual_history: vec![0.0],
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let apply_pre = |r: &[f64], z: &mut [f64]| match precond {
        Some(p) => p(r, z),
        None => z.copy_from_slice(r),
    };
    apply_pre(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut sp = vec![0.0; n];
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        op.apply(&p, &mut sp);
        let denom = dot(&p, &sp);
        if denom <= 0.0 {
            return Err(ShearletError::NoConvergence {
                iterations: it,
                last_residual: *history.last().unwrap_or(&1.0),
                history,
            });
        }
        let step = rz / denom;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * sp[i];
        }
        let rel = norm(&r) / b_norm;
        history.push(rel);
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual_history: history,
            });
        }
        apply_pre(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(ShearletError::NoConvergence {
        iterations: max_iter,
        last_residual: *history.last().unwrap_or(&1.0),
        history,
    })
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Iterates `x ← T x/‖T x‖` and returns the Rayleigh quotient once its
/// relative change drops below `tol`.
fn rayleigh_iteration(
    n: usize,
    mut step: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, usize)> {
    let mut x = random_unit(n, seed);
    let mut last = f64::NAN;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let y = step(&x)?;
        let q = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok((0.0, it));
        }
        let change = ((q - last) / q).abs();
        history.push(change);
        if change < tol {
            return Ok((q, it));
        }
        last = q;
        x = y.iter().map(|v| v / ny).collect();
    }
    Err(ShearletError::NoConvergence {
        iterations: max_iter,
        last_residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Largest eigenvalue by power iteration.
pub fn power_iteration(op: &dyn LinearOperator, max_iter: usize, tol: f64, seed: u64) -> Result<(f64, usize)> {
    let n = op.dim();
    rayleigh_iteration(
        n,
        |x| {
            let mut y = vec![0.0; n];
            op.apply(x, &mut y);
            Ok(y)
        },
        max_iter,
        tol,
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBounds {
    pub a: f64,
    pub b: f64,
    pub power_iterations: usize,
    pub inverse_iterations: usize,
}

/// Estimates the extreme eigenvalues of a frame operator: `B` by power
/// iteration, `A` by inverse iteration with inner CG solves.
pub fn empirical_frame_bounds(
    op: &dyn LinearOperator,
    precond: Option<&dyn Fn(&[f64], &mut [f64])>,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<EmpiricalBounds> {
    let n = op.dim();
    let (b, pi) = power_iteration(op, max_iter, tol, seed)?;
    let (inv, ii) = rayleigh_iteration(
        n,
        |x| Ok(conjugate_gradient(op, x, precond, 1e-10, 10 * n.min(2000) + 100)?.x),
        max_iter,
        tol,
        seed.wrapping_add(1),
    )?;
    let a = if inv > 0.0 { 1.0 / inv } else { 0.0 };
    Ok(EmpiricalBounds {
        a: a.min(b),
        b,
        power_iterations: pi,
        inverse_iterations: ii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<f64>);
    impl LinearOperator for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for i in 0..x.len() {
                out[i] = self.0[i] * x[i];
            }
        }
    }

    #[test]
    fn identity_bounds() {
        let e = empirical_frame_bounds(&Identity(64), None, 100, 1e-4, 3).unwrap();
        assert!((e.a - 1.0).abs() < 1e-6 && (e.b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_bounds_and_cg() {
        let d: Vec<f64> = (0..50).map(|i| 0.5 + i as f64 / 10.0).collect();
        let op = Diag(d.clone());
        let e = empirical_frame_bounds(&op, None, 2000, 1e-9, 5).unwrap();
        assert!(e.a <= e.b);
        assert!((e.b - 5.4).abs() < 1e-2 && (e.a - 0.5).abs() < 1e-2);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let out = conjugate_gradient(&op, &b, None, 1e-12, 200).unwrap();
        for i in 0..50 {
            assert!((out.x[i] * d[i] - b[i]).abs() < 1e-10);
        }
        let zero = conjugate_gradient(&op, &vec![0.0; 50], None, 1e-12, 10).unwrap();
        assert_eq!(zero.iterations, 0);
    }
}
