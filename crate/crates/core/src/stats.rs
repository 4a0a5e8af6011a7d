//! Small numeric helpers shared by the fitting routines.

use crate::error::{Result, ShearletError};

/// Ordinary least squares `y ≈ slope·x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(ShearletError::InsufficientPoints {
            need: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(ShearletError::DegenerateFit(
            "abscissae have no spread".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, intercept, r2))
}

/// Log-log fit of `y ∝ x^slope` over strictly positive pairs.
pub fn log_log_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    least_squares(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..6).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, b, r2) = least_squares(&pts).unwrap();
        assert!((s + 2.0).abs() < 1e-14 && (b - 3.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
        assert!(least_squares(&[(1.0, 1.0)]).is_err());
        assert!(least_squares(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
