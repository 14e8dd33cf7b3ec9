use std::sync::Arc;

use num_complex::Complex;

use crate::error::{check_len, Error, Result};
use crate::numeric::{ComplexMatrix, ComplexVector};
use crate::scalar::Scalar;

/// Layout of a stacked metasurface. Lengths are in carrier wavelengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimGeometry {
    pub layers: usize,
    pub rows: usize,
    pub cols: usize,
    /// Centre-to-centre element pitch.
    pub pitch: f64,
    /// Element area.
    pub area: f64,
    /// Layer-to-layer spacing.
    pub spacing: f64,
}

/// Spacing below which the diffraction model's thin-element assumption is
/// questionable.
pub const MIN_RECOMMENDED_SPACING: f64 = 5.0;

impl SimGeometry {
    /// Half-wavelength pitch, quarter-square-wavelength elements and
    /// five-wavelength spacing.
    pub fn new(layers: usize, rows: usize, cols: usize) -> Self {
        Self {
            layers,
            rows,
            cols,
            pitch: 0.5,
            area: 0.25,
            spacing: MIN_RECOMMENDED_SPACING,
        }
    }

    /// Most nearly square grid holding `elements` per layer.
    pub fn square(layers: usize, elements: usize) -> Self {
        let (rows, cols) = grid_dims(elements);
        Self::new(layers, rows, cols)
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn elements_per_layer(&self) -> usize {
        self.rows * self.cols
    }

    pub fn total_elements(&self) -> usize {
        self.layers * self.elements_per_layer()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "SIM needs at least one layer and one element, got {}x{}x{}",
                self.layers, self.rows, self.cols
            )));
        }
        if !(self.spacing > 0.0) || !(self.area > 0.0) || !(self.pitch >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "degenerate SIM geometry: spacing {}, area {}, pitch {}",
                self.spacing, self.area, self.pitch
            )));
        }
        Ok(())
    }

    /// In-plane coordinates of element `n` (row-major over the grid).
    fn element_xy(&self, n: usize) -> (f64, f64) {
        let r = n / self.cols;
        let c = n % self.cols;
        (c as f64 * self.pitch, r as f64 * self.pitch)
    }
}

/// `(rows, cols)` with `rows ≤ cols` and `rows` the largest divisor not
/// exceeding `√n`.
pub fn grid_dims(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

/// Layer-to-layer Rayleigh-Sommerfeld propagation matrix.
///
/// `[Ξ]_{n,n'} = (d·S/r²)·(1/(2πr) − j)·exp(j2πr)` with `r` the distance
/// between element `n` of one layer and `n'` of the previous one.
pub fn diffraction_matrix<T: Scalar>(geom: &SimGeometry) -> Result<ComplexMatrix<T>> {
    geom.validate()?;
    if geom.spacing < MIN_RECOMMENDED_SPACING {
        log::warn!(
            "SIM layer spacing {} is below the recommended {} wavelengths",
            geom.spacing,
            MIN_RECOMMENDED_SPACING
        );
    }
    let n = geom.elements_per_layer();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let (xi, yi) = geom.element_xy(i);
        for j in 0..n {
            let (xj, yj) = geom.element_xy(j);
            let (dx, dy) = (xi - xj, yi - yj);
            let dist = (dx * dx + dy * dy + geom.spacing * geom.spacing).sqrt();
            if !(dist > 0.0) {
                return Err(Error::InvalidArgument("zero inter-element distance".into()));
            }
            let amp = geom.spacing * geom.area / (dist * dist);
            let factor = Complex::new(amp / (two_pi * dist), -amp);
            let z = factor * Complex::from_polar(1.0, two_pi * dist);
            out[(i, j)] = Complex::new(T::of(z.re), T::of(z.im));
        }
    }
    Ok(out)
}

/// Stacked metasurface state: geometry, phase vector (layer-major) and the
/// shared propagation matrix.
#[derive(Clone, Debug)]
pub struct SimConfig<T> {
    pub geometry: SimGeometry,
    pub phases: Vec<T>,
    xi: Arc<ComplexMatrix<T>>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(geometry: SimGeometry, phases: Vec<T>) -> Result<Self> {
        let xi = Arc::new(diffraction_matrix(&geometry)?);
        Self::with_propagation(geometry, phases, xi)
    }

    /// Reuses an already computed propagation matrix.
    pub fn with_propagation(geometry: SimGeometry, phases: Vec<T>, xi: Arc<ComplexMatrix<T>>) -> Result<Self> {
        geometry.validate()?;
        check_len("SimConfig phases", geometry.total_elements(), phases.len())?;
        let n = geometry.elements_per_layer();
        if xi.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "SimConfig propagation matrix",
                expected: format!("{n}x{n}"),
                found: format!("{:?}", xi.shape()),
            });
        }
        Ok(Self { geometry, phases, xi })
    }

    pub fn propagation(&self) -> &Arc<ComplexMatrix<T>> {
        &self.xi
    }

    pub fn responses(&self) -> ComplexVector<T> {
        super::response_from_phase(&self.phases)
    }
}

/// Overall response `diag(φ_M)·Ξ·…·diag(φ_2)·Ξ·diag(φ_1)`.
pub fn sim_cascade<T: Scalar>(cfg: &SimConfig<T>) -> ComplexMatrix<T> {
    let n = cfg.geometry.elements_per_layer();
    let resp = cfg.responses();
    cascade_matrix(&cfg.xi, &resp, n)
}

pub(crate) fn cascade_matrix<T: Scalar>(xi: &ComplexMatrix<T>, responses: &[Complex<T>], n: usize) -> ComplexMatrix<T> {
    let mut acc = ComplexMatrix::diag(&responses[..n]);
    for layer in responses.chunks_exact(n).skip(1) {
        let mut next = xi.matmul(&acc).expect("square propagation matrix");
        for (i, &phi) in layer.iter().enumerate() {
            for j in 0..n {
                next[(i, j)] = phi * next[(i, j)];
            }
        }
        acc = next;
    }
    acc
}

/// Intermediate signals of one pass through the layer stack.
#[derive(Clone, Debug)]
pub struct CascadeTrace<T> {
    /// Signal impinging on each layer, before its phase shift.
    pub incoming: Vec<ComplexVector<T>>,
    pub output: ComplexVector<T>,
}

/// Applies the layer stack to `input` one layer at a time. `xi` may be
/// `None` only for a single layer.
pub fn cascade_apply<T: Scalar>(
    xi: Option<&ComplexMatrix<T>>,
    responses: &[Complex<T>],
    input: &[Complex<T>],
) -> Result<CascadeTrace<T>> {
    let n = input.len();
    if n == 0 || responses.len() % n != 0 {
        return Err(Error::DimensionMismatch {
            context: "cascade_apply",
            expected: format!("a multiple of {n} responses"),
            found: responses.len().to_string(),
        });
    }
    let layers = responses.len() / n;
    let mut incoming = Vec::with_capacity(layers);
    let mut current = input.to_vec();
    for (m, layer) in responses.chunks_exact(n).enumerate() {
        if m > 0 {
            let xi = xi.ok_or_else(|| Error::InvalidArgument("multi-layer cascade needs a propagation matrix".into()))?;
            current = xi.matvec(&current)?;
        }
        incoming.push(current.clone());
        for (z, &phi) in current.iter_mut().zip(layer) {
            *z = phi * *z;
        }
    }
    Ok(CascadeTrace {
        incoming,
        output: current,
    })
}

/// Reverse pass of [`cascade_apply`]. Gradients use the real-pair
/// convention: for a real loss `L` and complex `z`, the gradient is
/// `∂L/∂Re z + j·∂L/∂Im z`. Returns gradients for the input and every
/// response entry.
pub fn cascade_backward<T: Scalar>(
    xi: Option<&ComplexMatrix<T>>,
    responses: &[Complex<T>],
    trace: &CascadeTrace<T>,
    grad_output: &[Complex<T>],
) -> Result<(ComplexVector<T>, ComplexVector<T>)> {
    let n = grad_output.len();
    check_len("cascade_backward responses", trace.incoming.len() * n, responses.len())?;
    let mut grad_resp = vec![Complex::new(T::zero(), T::zero()); responses.len()];
    let mut g = grad_output.to_vec();
    for m in (0..trace.incoming.len()).rev() {
        let layer = &responses[m * n..(m + 1) * n];
        let w = &trace.incoming[m];
        for k in 0..n {
            grad_resp[m * n + k] = w[k].conj() * g[k];
            g[k] = layer[k].conj() * g[k];
        }
        if m > 0 {
            let xi = xi.ok_or_else(|| Error::InvalidArgument("multi-layer cascade needs a propagation matrix".into()))?;
            g = xi.adjoint_matvec(&g)?;
        }
    }
    Ok((g, grad_resp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metasurface::response_from_phase;
    use crate::numeric::{vec_max_abs_diff, SeededRng};

    fn random_phases(rng: &mut SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.uniform_range(0.0, 2.0 * std::f64::consts::PI)).collect()
    }

    #[test]
    fn facing_pair_entry() {
        let geom = SimGeometry::new(2, 1, 1);
        let xi = diffraction_matrix::<f64>(&geom).unwrap();
        // 0.05·(1/(10π) − j)·e^{j10π}
        let want = Complex::new(0.05 / (10.0 * std::f64::consts::PI), -0.05);
        assert!((xi[(0, 0)] - want).norm() < 1e-10);
        assert!((xi[(0, 0)].re - 0.0015915).abs() < 1e-7);
    }

    #[test]
    fn attenuates_with_distance() {
        for d in [5.0, 7.5, 12.0] {
            let near = diffraction_matrix::<f64>(&SimGeometry::new(2, 1, 1).with_spacing(d)).unwrap()[(0, 0)];
            let far = diffraction_matrix::<f64>(&SimGeometry::new(2, 1, 1).with_spacing(2.0 * d)).unwrap()[(0, 0)];
            assert!(far.norm() < near.norm());
        }
    }

    #[test]
    fn doubling_transverse_offsets_reduces_off_axis_entries() {
        let base = SimGeometry::new(2, 3, 3);
        let wide = SimGeometry { pitch: 1.0, ..base };
        let a = diffraction_matrix::<f64>(&base).unwrap();
        let b = diffraction_matrix::<f64>(&wide).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    assert!(b[(i, j)].norm() < a[(i, j)].norm(), "entry ({i},{j})");
                } else {
                    assert!((b[(i, j)] - a[(i, j)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn degenerate_geometry_rejected() {
        assert!(diffraction_matrix::<f64>(&SimGeometry::new(2, 2, 2).with_spacing(0.0)).is_err());
        assert!(diffraction_matrix::<f64>(&SimGeometry::new(0, 2, 2)).is_err());
    }

    #[test]
    fn single_layer_cascade_is_diagonal() {
        let mut rng = SeededRng::new(1);
        let cfg = SimConfig::new(SimGeometry::new(1, 2, 3), random_phases(&mut rng, 6)).unwrap();
        assert_eq!(sim_cascade(&cfg), ComplexMatrix::diag(&cfg.responses()));
    }

    #[test]
    fn zero_phase_cascade_is_propagation_product() {
        for layers in 2..=4 {
            let cfg = SimConfig::new(SimGeometry::new(layers, 2, 2), vec![0.0; layers * 4]).unwrap();
            let xi = cfg.propagation().as_ref().clone();
            let mut want = ComplexMatrix::identity(4);
            for _ in 1..layers {
                want = xi.matmul(&want).unwrap();
            }
            assert!(sim_cascade(&cfg).max_abs_diff(&want).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn cascade_matches_sequential_application() {
        let mut rng = SeededRng::new(8);
        let geom = SimGeometry::new(3, 2, 4);
        let cfg = SimConfig::new(geom, random_phases(&mut rng, 24)).unwrap();
        let x: Vec<Complex<f64>> = (0..8).map(|_| rng.complex_gaussian(1.0)).collect();
        let via_matrix = sim_cascade(&cfg).matvec(&x).unwrap();
        let trace = cascade_apply(Some(cfg.propagation()), &cfg.responses(), &x).unwrap();
        assert!(vec_max_abs_diff(&via_matrix, &trace.output) <= 1e-12);
    }

    #[test]
    fn wrapping_phases_changes_nothing() {
        let mut rng = SeededRng::new(2);
        let phases = random_phases(&mut rng, 12);
        let shifted: Vec<f64> = phases.iter().map(|p| p + 2.0 * std::f64::consts::PI).collect();
        let a = sim_cascade(&SimConfig::new(SimGeometry::new(3, 2, 2), phases).unwrap());
        let b = sim_cascade(&SimConfig::new(SimGeometry::new(3, 2, 2), shifted).unwrap());
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn output_norm_bounded_by_propagation_norms() {
        let mut rng = SeededRng::new(13);
        let geom = SimGeometry::new(4, 3, 3);
        for _ in 0..10 {
            let cfg = SimConfig::new(geom, random_phases(&mut rng, 36)).unwrap();
            let bound = cfg.propagation().operator_norm(300).powi(3) * (1.0 + 1e-9);
            let x: Vec<Complex<f64>> = (0..9).map(|_| rng.complex_gaussian(1.0)).collect();
            let y = sim_cascade(&cfg).matvec(&x).unwrap();
            let ratio = crate::numeric::vec_norm(&y) / crate::numeric::vec_norm(&x);
            assert!(ratio <= bound, "{ratio} > {bound}");
        }
    }

    #[test]
    fn grid_dims_near_square() {
        assert_eq!(grid_dims(64), (8, 8));
        assert_eq!(grid_dims(144), (12, 12));
        assert_eq!(grid_dims(16), (4, 4));
        assert_eq!(grid_dims(8), (2, 4));
        assert_eq!(grid_dims(7), (1, 7));
        assert_eq!(grid_dims(1), (1, 1));
    }

    #[test]
    fn responses_match_phase_helper() {
        let cfg = SimConfig::new(SimGeometry::new(1, 1, 2), vec![0.0, std::f64::consts::PI]).unwrap();
        assert_eq!(cfg.responses(), response_from_phase(&[0.0, std::f64::consts::PI]));
    }
}
