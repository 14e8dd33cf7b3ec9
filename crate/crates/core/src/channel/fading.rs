use num_complex::Complex;

use super::geometry::{los_matrices, path_matrix, pathloss_amplitude, Point3, SystemGeometry};
use super::{db_to_linear, ChannelState};
use crate::error::{Error, Result};
use crate::numeric::{ComplexMatrix, SeededRng};
use crate::scalar::Scalar;

/// `√(K/(K+1))·H_LoS + √(1/(K+1))·H_NLoS` with `H_NLoS` i.i.d. `CN(0,1)`.
/// The output shape follows `los`.
pub fn sample_ricean<T: Scalar>(k_factor_db: f64, los: &ComplexMatrix<T>, rng: &mut SeededRng) -> ComplexMatrix<T> {
    let k = db_to_linear(k_factor_db);
    let (a, b) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    let (a, b) = (T::of(a), T::of(b));
    let data = los
        .as_slice()
        .iter()
        .map(|&z| {
            let n: Complex<T> = rng.complex_gaussian(1.0);
            z * a + n * b
        })
        .collect();
    ComplexMatrix::from_row_major(los.rows(), los.cols(), data).expect("shape preserved")
}

/// Per-link Ricean factors in dB: `[TX–MS, MS–RX, TX–RX]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiceanFactors {
    pub tx_ms_db: f64,
    pub ms_rx_db: f64,
    pub tx_rx_db: f64,
}

impl Default for RiceanFactors {
    fn default() -> Self {
        Self {
            tx_ms_db: 13.0,
            ms_rx_db: 7.0,
            tx_rx_db: 3.0,
        }
    }
}

/// Draws all three links with Ricean fading around the geometric
/// line-of-sight, each scaled by its free-space pathloss.
pub fn sample_ricean_state<T: Scalar>(
    geom: &SystemGeometry,
    factors: RiceanFactors,
    rng: &mut SeededRng,
) -> Result<ChannelState<T>> {
    let [direct_los, to_ms_los, from_ms_los] = los_matrices::<T>(geom)?;
    let direct = sample_ricean(factors.tx_rx_db, &direct_los, rng).scale(pl(geom.tx, geom.rx));
    let to_ms = sample_ricean(factors.tx_ms_db, &to_ms_los, rng).scale(pl(geom.tx, geom.ms));
    let from_ms = sample_ricean(factors.ms_rx_db, &from_ms_los, rng).scale(pl(geom.ms, geom.rx));
    ChannelState::new(direct, to_ms.adjoint(), from_ms)
}

fn pl<T: Scalar>(a: Point3, b: Point3) -> Complex<T> {
    Complex::new(T::of(pathloss_amplitude(a, b)), T::zero())
}

/// Axis-aligned box used both for scatterer placement and RX mobility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arena {
    pub min: Point3,
    pub max: Point3,
}

impl Arena {
    pub fn sample(&self, rng: &mut SeededRng) -> Point3 {
        [
            rng.uniform_range(self.min[0], self.max[0]),
            rng.uniform_range(self.min[1], self.max[1]),
            rng.uniform_range(self.min[2], self.max[2]),
        ]
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// `[x, y]` scaled into `[0, 1]²`.
    pub fn normalize_xy(&self, p: Point3) -> [f64; 2] {
        let f = |i: usize| {
            let span = self.max[i] - self.min[i];
            if span > 0.0 {
                (p[i] - self.min[i]) / span
            } else {
                0.5
            }
        };
        [f(0), f(1)]
    }
}

/// Default scatterer volume around the TX-RX-MS triangle.
pub const SCATTERER_ARENA: Arena = Arena {
    min: [-2.0, -6.0, -2.0],
    max: [12.0, 6.0, 3.0],
};

/// Saleh-Valenzuela environment with frozen scatterer positions and path
/// gains. Realizing it at a given RX position is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct SvEnvironment {
    pub geometry: SystemGeometry,
    /// `[link][scatterer]` gains for RX←TX, MS←TX and RX←MS.
    gains: [Vec<Complex<f64>>; 3],
}

impl SvEnvironment {
    /// Draws `n_scatterers` positions (unless the geometry already lists
    /// them) and `CN(0, 1/n_scatterers)` gains per link and scatterer.
    pub fn draw(geometry: &SystemGeometry, n_scatterers: usize, rng: &mut SeededRng) -> Result<Self> {
        geometry.validate()?;
        if n_scatterers == 0 {
            return Err(Error::InvalidArgument("at least one scatterer is required".into()));
        }
        let mut geometry = geometry.clone();
        if geometry.scatterers.is_empty() {
            geometry.scatterers = (0..n_scatterers).map(|_| SCATTERER_ARENA.sample(rng)).collect();
        } else if geometry.scatterers.len() != n_scatterers {
            return Err(Error::InvalidArgument(format!(
                "geometry lists {} scatterers but {n_scatterers} were requested",
                geometry.scatterers.len()
            )));
        }
        let var = 1.0 / n_scatterers as f64;
        let mut link = || (0..n_scatterers).map(|_| rng.complex_gaussian::<f64>(var)).collect::<Vec<_>>();
        let gains = [link(), link(), link()];
        Ok(Self { geometry, gains })
    }

    pub fn scatterer_count(&self) -> usize {
        self.geometry.scatterers.len()
    }

    pub fn realize<T: Scalar>(&self) -> Result<ChannelState<T>> {
        self.realize_at(self.geometry.rx)
    }

    /// Channel seen by a receiver placed at `rx`.
    pub fn realize_at<T: Scalar>(&self, rx: Point3) -> Result<ChannelState<T>> {
        let g = &self.geometry;
        let (tx_arr, rx_arr, ms_arr) = (g.tx_array(), g.rx_array(), g.ms_array());
        let link = |a: Point3, a_off: &[Point3], b: Point3, b_off: &[Point3], gains: &[Complex<f64>]| {
            let mut acc = ComplexMatrix::<T>::zeros(b_off.len(), a_off.len());
            for (&s, &gain) in g.scatterers.iter().zip(gains) {
                let p = path_matrix::<T>(a, a_off, b, b_off, Some(s), g.wavelength)?;
                acc = acc.add(&p.scale(Complex::new(T::of(gain.re), T::of(gain.im))))?;
            }
            Ok::<_, Error>(acc.scale(pl(a, b)))
        };
        let direct = link(g.tx, &tx_arr, rx, &rx_arr, &self.gains[0])?;
        let to_ms = link(g.tx, &tx_arr, g.ms, &ms_arr, &self.gains[1])?;
        let from_ms = link(g.ms, &ms_arr, rx, &rx_arr, &self.gains[2])?;
        ChannelState::new(direct, to_ms.adjoint(), from_ms)
    }
}

/// Geometric multipath channel: every link is a sum of scatterer paths.
pub fn sample_saleh_valenzuela<T: Scalar>(
    geom: &SystemGeometry,
    n_scatterers: usize,
    rng: &mut SeededRng,
) -> Result<ChannelState<T>> {
    SvEnvironment::draw(geom, n_scatterers, rng)?.realize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_power(samples: &[ComplexMatrix<f64>]) -> f64 {
        let n: usize = samples.iter().map(|m| m.as_slice().len()).sum();
        samples.iter().flat_map(|m| m.as_slice()).map(|z| z.norm_sqr()).sum::<f64>() / n as f64
    }

    #[test]
    fn very_large_k_is_pure_los() {
        let los = los_matrices::<f64>(&SystemGeometry::new(2, 2, 4)).unwrap()[1].clone();
        let h = sample_ricean(300.0, &los, &mut SeededRng::new(1));
        assert!(h.max_abs_diff(&los).unwrap() < 1e-6);
    }

    #[test]
    fn ricean_power_is_normalized() {
        let los = los_matrices::<f64>(&SystemGeometry::new(4, 4, 16)).unwrap()[2].clone();
        let mut rng = SeededRng::new(2);
        for k_db in [-10.0, 0.0, 7.0, 13.0] {
            let draws: Vec<_> = (0..1600).map(|_| sample_ricean(k_db, &los, &mut rng)).collect();
            let p = mean_power(&draws);
            assert!((p - 1.0).abs() < 0.02, "K={k_db} dB: {p}");
        }
    }

    #[test]
    fn zero_db_random_part_has_half_variance() {
        let los = ComplexMatrix::<f64>::zeros(10, 10);
        let mut rng = SeededRng::new(3);
        let draws: Vec<_> = (0..1000).map(|_| sample_ricean(0.0, &los, &mut rng)).collect();
        let p = mean_power(&draws);
        assert!((p - 0.5).abs() < 0.01, "{p}");
    }

    #[test]
    fn sv_is_deterministic_under_seed() {
        let g = SystemGeometry::new(4, 4, 16);
        let a: ChannelState<f64> = sample_saleh_valenzuela(&g, 10, &mut SeededRng::new(5)).unwrap();
        let b: ChannelState<f64> = sample_saleh_valenzuela(&g, 10, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sv_requires_a_scatterer() {
        assert!(sample_saleh_valenzuela::<f64>(&SystemGeometry::new(1, 1, 1), 0, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn mobility_changes_only_rx_links() {
        let g = SystemGeometry::new(2, 2, 4);
        let env = SvEnvironment::draw(&g, 5, &mut SeededRng::new(9)).unwrap();
        let a: ChannelState<f64> = env.realize_at([8.0, 1.0, 0.0]).unwrap();
        let b: ChannelState<f64> = env.realize_at([9.0, -1.0, 0.0]).unwrap();
        assert_eq!(a.tx_to_ms, b.tx_to_ms);
        assert_ne!(a.direct, b.direct);
        assert_ne!(a.ms_to_rx, b.ms_to_rx);
    }

    #[test]
    fn ricean_state_shapes() {
        let g = SystemGeometry::new(3, 2, 8);
        let s: ChannelState<f64> = sample_ricean_state(&g, RiceanFactors::default(), &mut SeededRng::new(4)).unwrap();
        assert_eq!(s.direct.shape(), (2, 3));
        assert_eq!(s.tx_to_ms.shape(), (3, 8));
        assert_eq!(s.ms_to_rx.shape(), (2, 8));
    }

    #[test]
    fn arena_normalization() {
        let a = Arena {
            min: [0.0, -5.0, 0.0],
            max: [10.0, 5.0, 0.0],
        };
        assert_eq!(a.normalize_xy([5.0, 0.0, 0.0]), [0.5, 0.5]);
        let mut rng = SeededRng::new(1);
        assert!((0..100).all(|_| a.contains(a.sample(&mut rng))));
    }
}
