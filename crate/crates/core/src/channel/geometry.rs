use num_complex::Complex;

use crate::error::{Error, Result};
use crate::metasurface::grid_dims;
use crate::numeric::{ComplexMatrix, ComplexVector};
use crate::scalar::Scalar;

pub type Point3 = [f64; 3];

/// Node placement and array sizes. Positions are in meters.
///
/// Transmit and receive arrays are uniform linear arrays along the y axis;
/// the metasurface is a planar grid in the x-z plane. All use half-wavelength
/// spacing and are centred on their node position.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemGeometry {
    pub tx: Point3,
    pub rx: Point3,
    pub ms: Point3,
    pub wavelength: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub n_m: usize,
    pub scatterers: Vec<Point3>,
}

/// Reference distance of the free-space amplitude law `d0/d`.
pub const PATHLOSS_REFERENCE_M: f64 = 1.0;

/// 30 GHz carrier.
pub const DEFAULT_WAVELENGTH_M: f64 = 0.01;

impl SystemGeometry {
    /// TX at the origin, RX 10 m down the x axis, metasurface 5 m along and
    /// 2 m to the side.
    pub fn new(n_t: usize, n_r: usize, n_m: usize) -> Self {
        Self {
            tx: [0.0, 0.0, 0.0],
            rx: [10.0, 0.0, 0.0],
            ms: [5.0, 2.0, 0.0],
            wavelength: DEFAULT_WAVELENGTH_M,
            n_t,
            n_r,
            n_m,
            scatterers: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::InvalidArgument(format!("wavelength must be positive, got {}", self.wavelength)));
        }
        if self.n_t == 0 || self.n_r == 0 || self.n_m == 0 {
            return Err(Error::InvalidArgument(format!(
                "antenna and element counts must be at least 1 (n_t={}, n_r={}, n_m={})",
                self.n_t, self.n_r, self.n_m
            )));
        }
        Ok(())
    }

    pub(crate) fn tx_array(&self) -> Vec<Point3> {
        ula(self.n_t, self.wavelength)
    }

    pub(crate) fn rx_array(&self) -> Vec<Point3> {
        ula(self.n_r, self.wavelength)
    }

    pub(crate) fn ms_array(&self) -> Vec<Point3> {
        let (rows, cols) = grid_dims(self.n_m);
        let h = self.wavelength / 2.0;
        (0..self.n_m)
            .map(|n| {
                let (r, c) = (n / cols, n % cols);
                [
                    (c as f64 - (cols as f64 - 1.0) / 2.0) * h,
                    0.0,
                    (r as f64 - (rows as f64 - 1.0) / 2.0) * h,
                ]
            })
            .collect()
    }
}

fn ula(n: usize, wavelength: f64) -> Vec<Point3> {
    let h = wavelength / 2.0;
    (0..n)
        .map(|k| [0.0, (k as f64 - (n as f64 - 1.0) / 2.0) * h, 0.0])
        .collect()
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn unit_direction(from: Point3, to: Point3) -> Result<Point3> {
    let d = distance(from, to);
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("coincident points {from:?}")));
    }
    Ok([(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d])
}

/// Far-field response `a(u)_k = exp(j·2π/λ·u·δ_k)` of an array with element
/// offsets `δ_k` to a plane wave along direction `u`.
pub fn steering_vector<T: Scalar>(offsets: &[Point3], direction: Point3, wavelength: f64) -> ComplexVector<T> {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    offsets
        .iter()
        .map(|o| {
            let phase = k * (direction[0] * o[0] + direction[1] * o[1] + direction[2] * o[2]);
            Complex::new(T::of(phase.cos()), T::of(phase.sin()))
        })
        .collect()
}

/// Plane-wave path from array `A` (at `a`) to array `B` (at `b`) bouncing
/// off `via` (or direct when `via` is `None`): `a_B(u_B)·a_A(u_A)ᵀ`, with
/// `u_A`, `u_B` the unit directions from each array towards the bounce
/// point. Every entry has unit modulus. Returned shape is `|B|×|A|`.
pub(crate) fn path_matrix<T: Scalar>(
    a: Point3,
    a_offsets: &[Point3],
    b: Point3,
    b_offsets: &[Point3],
    via: Option<Point3>,
    wavelength: f64,
) -> Result<ComplexMatrix<T>> {
    let (toward_a, toward_b) = match via {
        Some(s) => (s, s),
        None => (b, a),
    };
    let ua = unit_direction(a, toward_a)?;
    let ub = unit_direction(b, toward_b)?;
    let sa = steering_vector::<T>(a_offsets, ua, wavelength);
    let sb = steering_vector::<T>(b_offsets, ub, wavelength);
    Ok(ComplexMatrix::from_fn(sb.len(), sa.len(), |i, j| sb[i] * sa[j]))
}

/// Free-space amplitude scaling `d0/d`.
pub fn pathloss_amplitude(a: Point3, b: Point3) -> f64 {
    PATHLOSS_REFERENCE_M / distance(a, b).max(PATHLOSS_REFERENCE_M)
}

/// Deterministic line-of-sight matrices `(RX←TX, MS←TX, RX←MS)` without
/// pathloss, each entry unit modulus.
pub fn los_matrices<T: Scalar>(geom: &SystemGeometry) -> Result<[ComplexMatrix<T>; 3]> {
    geom.validate()?;
    let (tx, rx, ms) = (geom.tx_array(), geom.rx_array(), geom.ms_array());
    let direct = path_matrix(geom.tx, &tx, geom.rx, &rx, None, geom.wavelength)?;
    let to_ms = path_matrix(geom.tx, &tx, geom.ms, &ms, None, geom.wavelength)?;
    let from_ms = path_matrix(geom.ms, &ms, geom.rx, &rx, None, geom.wavelength)?;
    Ok([direct, to_ms, from_ms])
}
