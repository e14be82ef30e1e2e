//! Ordinary least-squares line fits.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination; 1 for a perfect fit, including the
    /// degenerate case of constant data.
    pub r2: T,
    pub slope_stderr: T,
}

pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Shape { expected: n, got: y.len() });
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let nf = T::from_count(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::Numerical("line fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = y
        .iter()
        .zip(x)
        .map(|(&yi, &xi)| {
            let e = yi - (intercept + slope * xi);
            e * e
        })
        .sum::<T>();
    let r2 = if syy == T::zero() { T::one() } else { (T::one() - sse / syy).max(T::zero()).min(T::one()) };
    let slope_stderr = (sse / (nf - T::lit(2.0)) / sxx).sqrt();
    Ok(LineFit { slope, intercept, r2, slope_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| 3.0 + 0.42 * t).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 0.42).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-13);
        assert_eq!(f.r2, 1.0);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn noisy_line_has_error_bar() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, t)| 2.0 * t + if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 3.0 * f.slope_stderr + 1e-3);
        assert!(f.slope_stderr > 0.0 && f.r2 < 1.0);
        assert!(fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
