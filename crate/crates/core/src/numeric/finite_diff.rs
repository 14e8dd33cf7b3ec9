use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Central-difference gradient `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h`.
///
/// Used as the reference for every hand-assembled backward pass.
pub fn finite_diff_gradient<T: Scalar>(
    mut f: impl FnMut(&[T]) -> T,
    x: &[T],
    h: T,
) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let two_h = h + h;
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        for v in [plus, minus] {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i, value: v.to_f64_lossy() });
            }
        }
        grad.push((plus - minus) / two_h);
    }
    Ok(grad)
}

/// Largest relative error between two gradients, with an absolute floor so
/// entries that are both tiny compare by absolute difference.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn square_derivative() {
        let g = finite_diff_gradient(|x: &[f64]| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = finite_diff_gradient(|_: &[f64]| 4.2, &[1.0, -2.0, 0.5], 1e-4).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn real_part_of_rotating_phasor() {
        // Re e^{-jx} = cos x, so the slope at π/2 is −sin(π/2) = −1.
        let f = |x: &[f64]| (Complex::new(0.0, -x[0])).exp().re;
        let g = finite_diff_gradient(f, &[FRAC_PI_2], 1e-5).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_offending_coordinate() {
        let f = |x: &[f64]| if x[1] > 1.0 { f64::INFINITY } else { x[0] };
        match finite_diff_gradient(f, &[0.0, 1.0], 1e-3) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(finite_diff_gradient(|x: &[f64]| x[0], &[0.0], 0.0).is_err());
    }
}
