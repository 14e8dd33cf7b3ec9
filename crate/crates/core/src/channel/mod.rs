//! Wireless channel generation (Ricean and Saleh-Valenzuela), additive
//! noise and the metasurface-parametrized transmission function.

mod fading;
mod geometry;
mod pool;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numeric::{ComplexMatrix, ComplexVector, SeededRng};
use crate::scalar::Scalar;

pub use fading::{
    sample_ricean, sample_ricean_state, sample_saleh_valenzuela, Arena, RiceanFactors, SvEnvironment,
    SCATTERER_ARENA,
};
pub use geometry::{
    distance, los_matrices, pathloss_amplitude, steering_vector, Point3, SystemGeometry, DEFAULT_WAVELENGTH_M,
    PATHLOSS_REFERENCE_M,
};
pub use pool::{read_pool, write_pool, ChannelFrame, ChannelModel, ChannelPool, PoolMode};

/// Instantaneous CSI: direct link `H_D` (N_r×N_t), TX–MS link `H_1`
/// (N_t×N_m) and MS–RX link `H_2` (N_r×N_m).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState<T> {
    pub direct: ComplexMatrix<T>,
    pub tx_to_ms: ComplexMatrix<T>,
    pub ms_to_rx: ComplexMatrix<T>,
}

impl<T: Scalar> ChannelState<T> {
    pub fn new(direct: ComplexMatrix<T>, tx_to_ms: ComplexMatrix<T>, ms_to_rx: ComplexMatrix<T>) -> Result<Self> {
        let (n_r, n_t) = direct.shape();
        let n_m = tx_to_ms.cols();
        if tx_to_ms.rows() != n_t || ms_to_rx.shape() != (n_r, n_m) {
            return Err(Error::DimensionMismatch {
                context: "ChannelState",
                expected: format!("H_D {n_r}x{n_t}, H_1 {n_t}xN_m, H_2 {n_r}xN_m"),
                found: format!(
                    "H_1 {:?}, H_2 {:?}",
                    tx_to_ms.shape(),
                    ms_to_rx.shape()
                ),
            });
        }
        let state = Self {
            direct,
            tx_to_ms,
            ms_to_rx,
        };
        if !state.is_finite() {
            return Err(Error::InvalidArgument("channel matrices contain non-finite entries".into()));
        }
        Ok(state)
    }

    pub fn n_t(&self) -> usize {
        self.direct.cols()
    }

    pub fn n_r(&self) -> usize {
        self.direct.rows()
    }

    pub fn n_m(&self) -> usize {
        self.tx_to_ms.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.direct.is_finite() && self.tx_to_ms.is_finite() && self.ms_to_rx.is_finite()
    }

    /// Length of [`Self::features`].
    pub fn feature_len(&self) -> usize {
        feature_len(self.n_t(), self.n_r(), self.n_m())
    }

    /// Real parts then imaginary parts of `H_D`, `H_1`, `H_2`, each
    /// row-major.
    pub fn features(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.feature_len());
        for m in [&self.direct, &self.tx_to_ms, &self.ms_to_rx] {
            out.extend(m.as_slice().iter().map(|z| z.re));
            out.extend(m.as_slice().iter().map(|z| z.im));
        }
        out
    }

    /// End-to-end matrix `H_D + H_2·Φ·H_1ᴴ`.
    pub fn effective(&self, phi_effect: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let n_m = self.n_m();
        if phi_effect.shape() != (n_m, n_m) {
            return Err(Error::DimensionMismatch {
                context: "ChannelState::effective",
                expected: format!("{n_m}x{n_m}"),
                found: format!("{:?}", phi_effect.shape()),
            });
        }
        let cascaded = self.ms_to_rx.matmul(phi_effect)?.matmul(&self.tx_to_ms.adjoint())?;
        self.direct.add(&cascaded)
    }
}

pub fn feature_len(n_t: usize, n_r: usize, n_m: usize) -> usize {
    2 * (n_r * n_t + n_t * n_m + n_r * n_m)
}

/// `y = (H_D + H_2·Φ·H_1ᴴ)·s + ñ` with `ñ ~ CN(0, noise_var·I)`.
pub fn transmit<T: Scalar>(
    state: &ChannelState<T>,
    phi_effect: &ComplexMatrix<T>,
    s: &[Complex<T>],
    noise_var: f64,
    rng: &mut SeededRng,
) -> Result<ComplexVector<T>> {
    let y = state.effective(phi_effect)?.matvec(s)?;
    Ok(add_noise(y, noise_var, rng))
}

pub fn sample_noise<T: Scalar>(n: usize, noise_var: f64, rng: &mut SeededRng) -> ComplexVector<T> {
    if noise_var == 0.0 {
        return vec![Complex::new(T::zero(), T::zero()); n];
    }
    (0..n).map(|_| rng.complex_gaussian(noise_var)).collect()
}

fn add_noise<T: Scalar>(mut y: ComplexVector<T>, noise_var: f64, rng: &mut SeededRng) -> ComplexVector<T> {
    if noise_var > 0.0 {
        let noise = sample_noise::<T>(y.len(), noise_var, rng);
        for (v, n) in y.iter_mut().zip(noise) {
            *v = *v + n;
        }
    }
    y
}

/// Ratio of transmit power to noise variance in dB.
pub fn snr_db(p: f64, noise_var: f64) -> Result<f64> {
    if !(p > 0.0) || !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SNR needs positive power and noise variance, got {p} and {noise_var}"
        )));
    }
    Ok(linear_to_db(p / noise_var))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power in watts from dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: Complex<f64>) -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(1, 1, |_, _| v)
    }

    fn random_state(rng: &mut SeededRng, n_t: usize, n_r: usize, n_m: usize) -> ChannelState<f64> {
        let g = |r, c, rng: &mut SeededRng| crate::numeric::sample_complex_gaussian(rng, r, c, 1.0).unwrap();
        ChannelState::new(g(n_r, n_t, rng), g(n_t, n_m, rng), g(n_r, n_m, rng)).unwrap()
    }

    #[test]
    fn no_cascaded_path_gives_direct_link() {
        let mut rng = SeededRng::new(1);
        let mut st = random_state(&mut rng, 3, 2, 4);
        st.ms_to_rx = ComplexMatrix::zeros(2, 4);
        let s: Vec<Complex<f64>> = (0..3).map(|_| rng.complex_gaussian(1.0)).collect();
        let phi = ComplexMatrix::identity(4);
        let y = transmit(&st, &phi, &s, 0.0, &mut rng).unwrap();
        assert_eq!(y, st.direct.matvec(&s).unwrap());
    }

    #[test]
    fn scalar_link() {
        let one = scalar(Complex::new(1.0, 0.0));
        let st = ChannelState::new(one.clone(), one.clone(), one).unwrap();
        let theta = 0.7;
        let phi = scalar(Complex::from_polar(1.0, theta));
        let s = [Complex::new(0.3, -1.1)];
        let y = transmit(&st, &phi, &s, 0.0, &mut SeededRng::new(0)).unwrap();
        let want = (Complex::new(1.0, 0.0) + Complex::from_polar(1.0, theta)) * s[0];
        assert!((y[0] - want).norm() < 1e-15);
    }

    #[test]
    fn noiseless_transmit_is_linear() {
        let mut rng = SeededRng::new(2);
        let st = random_state(&mut rng, 4, 3, 5);
        let phi = ComplexMatrix::diag(&crate::metasurface::response_from_phase(&[0.1, 0.9, 2.0, 4.0, 5.5]));
        let s1: Vec<Complex<f64>> = (0..4).map(|_| rng.complex_gaussian(1.0)).collect();
        let s2: Vec<Complex<f64>> = (0..4).map(|_| rng.complex_gaussian(1.0)).collect();
        let (a, b) = (Complex::new(0.4, -2.0), Complex::new(-1.3, 0.2));
        let mix: Vec<_> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
        let lhs = transmit(&st, &phi, &mix, 0.0, &mut rng).unwrap();
        let y1 = transmit(&st, &phi, &s1, 0.0, &mut rng).unwrap();
        let y2 = transmit(&st, &phi, &s2, 0.0, &mut rng).unwrap();
        let rhs: Vec<_> = y1.iter().zip(&y2).map(|(x, y)| a * x + b * y).collect();
        assert!(crate::numeric::vec_max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let mut rng = SeededRng::new(3);
        let st = random_state(&mut rng, 2, 2, 3);
        let s = vec![Complex::new(1.0, 0.0); 2];
        assert!(transmit(&st, &ComplexMatrix::identity(2), &s, 0.0, &mut rng).is_err());
        assert!(transmit(&st, &ComplexMatrix::identity(3), &s[..1], 0.0, &mut rng).is_err());
        let g = |r, c| ComplexMatrix::<f64>::zeros(r, c);
        assert!(ChannelState::new(g(2, 2), g(3, 4), g(2, 4)).is_err());
        assert!(ChannelState::new(g(2, 2), g(2, 4), g(2, 3)).is_err());
    }

    #[test]
    fn noise_has_requested_variance() {
        let mut rng = SeededRng::new(4);
        let n: Vec<Complex<f64>> = sample_noise(100_000, 0.25, &mut rng);
        let p = n.iter().map(|z| z.norm_sqr()).sum::<f64>() / n.len() as f64;
        assert!((p - 0.25).abs() < 0.005);
    }

    #[test]
    fn snr_conversions() {
        assert_eq!(snr_db(2.0, 2.0).unwrap(), 0.0);
        assert!((snr_db(1000.0, 1.0).unwrap() - 30.0).abs() < 1e-12);
        assert!(snr_db(0.0, 1.0).is_err());
        assert!(snr_db(1.0, -1.0).is_err());
        for db in [-37.5, -10.0, 0.0, 3.0, 42.0] {
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-12);
        }
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert!((watts_to_dbm(10.0) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn features_layout() {
        let mut rng = SeededRng::new(5);
        let st = random_state(&mut rng, 2, 3, 4);
        let f = st.features();
        assert_eq!(f.len(), st.feature_len());
        assert_eq!(f[0], st.direct.as_slice()[0].re);
        assert_eq!(f[6], st.direct.as_slice()[0].im);
        assert_eq!(f[12], st.tx_to_ms.as_slice()[0].re);
    }
}
