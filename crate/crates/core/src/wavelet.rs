//! Orthogonal Daubechies filters by spectral factorization of the maximally
//! flat magnitude response, and a periodized separable 3D wavelet transform.

use rustfft::num_complex::Complex64;

use crate::error::{Result, ShearletError};
use crate::generators::binomial;

/// Roots of `Σ coeffs[i] x^i` by Durand–Kerner iteration.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let radius = 1.0 + monic[..deg].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|i| Complex64::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * i as f64 / deg as f64))
        .collect();
    for _ in 0..2000 {
        let mut change = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            change = change.max(step.norm() / roots[i].norm().max(1.0));
        }
        if change < 1e-15 {
            break;
        }
    }
    // Newton polish
    let deriv: Vec<f64> = (1..=deg).map(|i| i as f64 * monic[i]).collect();
    let eval_d = |z: Complex64| deriv.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval_d(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Minimum-phase orthogonal low-pass taps `h` (length `2K`, `Σh = √2`) with
/// `|Σ h_k e^{−2πikx}|² = 2 cos^{2K}(πx) Σ_{n<K} C(K−1+n,n) sin^{2n}(πx)`.
pub fn daubechies_lowpass(k: u32) -> Result<Vec<f64>> {
    if !(1..=20).contains(&k) {
        return Err(ShearletError::Constraint(format!("Daubechies order must lie in 1..=20, got {k}")));
    }
    let p: Vec<f64> = (0..k).map(|n| binomial(k - 1 + n, n) as f64).collect();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    if k > 1 {
        for y in polynomial_roots(&p) {
            // y = (2 − z − 1/z)/4 gives z² − (2 − 4y) z + 1 = 0
            let b = Complex64::new(2.0, 0.0) - 4.0 * y;
            let disc = (b * b - 4.0).sqrt();
            let z1 = (b + disc) / 2.0;
            let z = if z1.norm() < 1.0 { z1 } else { (b - disc) / 2.0 };
            poly = poly_mul(&poly, &[-z, Complex64::new(1.0, 0.0)]);
        }
    }
    let one_plus = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
    for _ in 0..k {
        poly = poly_mul(&poly, &one_plus);
    }
    let mut h: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let sum: f64 = h.iter().sum();
    let s = std::f64::consts::SQRT_2 / sum;
    h.iter_mut().for_each(|v| *v *= s);
    Ok(h)
}

/// Quadrature mirror high-pass `g_k = (−1)^k h_{T−1−k}`.
pub fn highpass(h: &[f64]) -> Vec<f64> {
    let t = h.len();
    (0..t)
        .map(|k| if k % 2 == 0 { h[t - 1 - k] } else { -h[t - 1 - k] })
        .collect()
}

/// Periodized separable orthonormal wavelet transform of an `n³` cube.
#[derive(Debug, Clone)]
pub struct Dwt3 {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub levels: usize,
}

impl Dwt3 {
    /// Decomposes while the low-pass cube has side at least `min_side·2`.
    pub fn new(order: u32, n: usize, min_side: usize) -> Result<Self> {
        let h = daubechies_lowpass(order)?;
        let g = highpass(&h);
        let mut levels = 0;
        let mut side = n;
        while side >= 2 * min_side.max(1) && side % 2 == 0 {
            side /= 2;
            levels += 1;
        }
        Ok(Dwt3 { h, g, levels })
    }

    fn forward_1d(&self, x: &[f64], out: &mut [f64]) {
        let l = x.len();
        let half = l / 2;
        for i in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (k, (&hk, &gk)) in self.h.iter().zip(&self.g).enumerate() {
                let v = x[(2 * i + k) % l];
                a += hk * v;
                d += gk * v;
            }
            out[i] = a;
            out[half + i] = d;
        }
    }

    fn inverse_1d(&self, y: &[f64], out: &mut [f64]) {
        let l = y.len();
        let half = l / 2;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..half {
            let (a, d) = (y[i], y[half + i]);
            for (k, (&hk, &gk)) in self.h.iter().zip(&self.g).enumerate() {
                out[(2 * i + k) % l] += hk * a + gk * d;
            }
        }
    }

    /// Applies a 1D map to every line along `axis` of the leading `side³`
    /// sub-cube of an `n³` array.
    fn lines(&self, data: &mut [f64], n: usize, side: usize, axis: usize, inverse: bool) {
        let stride = [1, n, n * n][axis];
        let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let so = [[1, n, n * n][others[0]], [1, n, n * n][others[1]]];
        let mut line = vec![0.0; side];
        let mut out = vec![0.0; side];
        for p in 0..side {
            for q in 0..side {
                let base = p * so[0] + q * so[1];
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                if inverse {
                    self.inverse_1d(&line, &mut out);
                } else {
                    self.forward_1d(&line, &mut out);
                }
                for (i, v) in out.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [f64], n: usize) {
        let mut side = n;
        for _ in 0..self.levels {
            for axis in 0..3 {
                self.lines(data, n, side, axis, false);
            }
            side /= 2;
        }
    }

    pub fn inverse(&self, data: &mut [f64], n: usize) {
        let mut side = n >> self.levels;
        for _ in 0..self.levels {
            side *= 2;
            for axis in (0..3).rev() {
                self.lines(data, n, side, axis, true);
            }
        }
    }
}
