//! Single-layer (RIS) and stacked (SIM) metasurface responses, inter-layer
//! diffraction and the standalone diffractive classifier readout.

mod sim;

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{check_len, Error, Result};
use crate::numeric::ComplexVector;
use crate::scalar::Scalar;

pub use sim::{
    cascade_apply, cascade_backward, diffraction_matrix, grid_dims, sim_cascade, CascadeTrace, SimConfig,
    SimGeometry, MIN_RECOMMENDED_SPACING,
};

/// Maps any real phase into `[0, 2π)`.
pub fn wrap_phase<T: Scalar>(omega: T) -> T {
    let two_pi = T::TAU();
    let w = omega % two_pi;
    if w < T::zero() {
        w + two_pi
    } else {
        w
    }
}

/// Unit-modulus element responses `exp(−jω)`.
pub fn response_from_phase<T: Scalar>(omega: &[T]) -> ComplexVector<T> {
    omega
        .iter()
        .map(|&w| {
            let w = wrap_phase(w);
            Complex::new(w.cos(), -w.sin())
        })
        .collect()
}

/// Phase encoding of a pixel intensity in `[0, 1]`.
pub fn pixel_to_phase<T: Scalar>(v: T) -> T {
    T::TAU() * v
}

/// Single reflective surface.
#[derive(Clone, Debug, PartialEq)]
pub struct RisConfig<T> {
    pub phases: Vec<T>,
}

impl<T: Scalar> RisConfig<T> {
    pub fn new(phases: Vec<T>) -> Self {
        Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
        }
    }

    pub fn elements(&self) -> usize {
        self.phases.len()
    }

    pub fn responses(&self) -> ComplexVector<T> {
        response_from_phase(&self.phases)
    }
}

/// Classifies by writing `input_phases` onto the first layer, sending a
/// unit beacon through the stack and one further diffraction hop to the
/// receptor plane, and picking the strongest of the first `readout_count`
/// receptors. Ties go to the lowest index.
pub fn d2nn_classify<T: Scalar>(cfg: &SimConfig<T>, input_phases: &[T], readout_count: usize) -> Result<usize> {
    d2nn_intensities(cfg, input_phases, T::one()).and_then(|out| {
        if readout_count == 0 || readout_count > out.len() {
            return Err(Error::InvalidArgument(format!(
                "readout_count {readout_count} outside 1..={}",
                out.len()
            )));
        }
        Ok(argmax(&out[..readout_count]))
    })
}

/// Receptor-plane intensities `|·|²` for a beacon of the given amplitude.
pub fn d2nn_intensities<T: Scalar>(cfg: &SimConfig<T>, input_phases: &[T], beacon: T) -> Result<Vec<T>> {
    let n = cfg.geometry.elements_per_layer();
    check_len("d2nn input phases", n, input_phases.len())?;
    let mut phases = cfg.phases.clone();
    phases[..n].copy_from_slice(input_phases);
    let resp = response_from_phase(&phases);
    let xi = cfg.propagation();
    let input = vec![Complex::new(beacon, T::zero()); n];
    let trace = cascade_apply(Some(xi), &resp, &input)?;
    let at_receptors = xi.matvec(&trace.output)?;
    Ok(at_receptors.iter().map(|z| z.norm_sqr()).collect())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

const PHASE_HEADER: &str = "# metasurface phase configuration (radians)";

/// Writes one phase per line under a header naming the layer count and
/// elements per layer. Values use the shortest round-trip decimal form.
pub fn write_phases<W: Write>(mut w: W, layers: usize, elements_per_layer: usize, phases: &[f64]) -> Result<()> {
    check_len("write_phases", layers * elements_per_layer, phases.len())?;
    writeln!(w, "{PHASE_HEADER}")?;
    writeln!(w, "layers {layers}")?;
    writeln!(w, "elements_per_layer {elements_per_layer}")?;
    for p in phases {
        writeln!(w, "{p:?}")?;
    }
    Ok(())
}

/// Returns `(layers, elements_per_layer, phases)`.
pub fn read_phases<R: BufRead>(r: R) -> Result<(usize, usize, Vec<f64>)> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format(format!("phase file ends before {what}")))
    };
    let header = next("header")?;
    if header.trim() != PHASE_HEADER {
        return Err(Error::Format(format!("unexpected phase file header {header:?}")));
    }
    let field = |line: String, key: &str| -> Result<usize> {
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| Error::Format(format!("expected `{key} <n>`, got {line:?}")))?;
        rest.trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad count in {line:?}")))
    };
    let layers = field(next("layer count")?, "layers")?;
    let per_layer = field(next("element count")?, "elements_per_layer")?;
    let mut phases = Vec::with_capacity(layers * per_layer);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad phase value {line:?} at entry {}", phases.len())))?;
        phases.push(v);
    }
    check_len("read_phases", layers * per_layer, phases.len())?;
    Ok((layers, per_layer, phases))
}

pub fn save_phases(path: impl AsRef<Path>, layers: usize, elements_per_layer: usize, phases: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_phases(&mut f, layers, elements_per_layer, phases)?;
    f.flush()?;
    Ok(())
}

pub fn load_phases(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    read_phases(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::SeededRng;
    use std::f64::consts::PI;

    #[test]
    fn response_fixed_points() {
        let r = response_from_phase(&[0.0, PI, PI / 2.0]);
        assert_eq!(r[0], Complex::new(1.0, 0.0));
        assert!((r[1] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[2] - Complex::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn responses_are_unit_modulus() {
        let mut rng = SeededRng::new(3);
        let w: Vec<f64> = (0..1000).map(|_| rng.uniform_range(-50.0, 50.0)).collect();
        assert!(response_from_phase(&w).iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn wrap_lands_in_range() {
        for w in [-7.0, -0.1, 0.0, 3.0, 6.5, 100.0] {
            let v = wrap_phase(w);
            assert!((0.0..2.0 * PI).contains(&v), "{w} -> {v}");
        }
        assert_eq!(RisConfig::new(vec![-PI]).phases[0], PI);
    }

    fn toy() -> SimConfig<f64> {
        SimConfig::new(SimGeometry::new(1, 2, 2), vec![0.0; 4]).unwrap()
    }

    /// Input phases that make every element's contribution arrive in phase
    /// at receptor `target`.
    fn focusing_phases(cfg: &SimConfig<f64>, target: usize) -> Vec<f64> {
        let xi = cfg.propagation();
        (0..4).map(|n| xi[(target, n)].arg()).collect()
    }

    #[test]
    fn conjugate_phase_focus_selects_receptor() {
        let cfg = toy();
        for target in 0..4 {
            let phases = focusing_phases(&cfg, target);
            assert_eq!(d2nn_classify(&cfg, &phases, 4).unwrap(), target);
        }
    }

    #[test]
    fn beacon_scale_does_not_change_decision() {
        let cfg = toy();
        let phases = focusing_phases(&cfg, 3);
        let a = d2nn_intensities(&cfg, &phases, 1.0).unwrap();
        let b = d2nn_intensities(&cfg, &phases, 7.5).unwrap();
        assert_eq!(argmax(&a), argmax(&b));
        assert_eq!(argmax(&a), 3);
    }

    #[test]
    fn readout_prefix_and_bounds() {
        let cfg = toy();
        let phases = focusing_phases(&cfg, 3);
        assert!(d2nn_classify(&cfg, &phases, 3).unwrap() < 3);
        assert!(d2nn_classify(&cfg, &phases, 5).is_err());
        assert!(d2nn_classify(&cfg, &phases[..3], 4).is_err());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn phase_file_round_trip_is_bitwise() {
        let mut rng = SeededRng::new(17);
        let phases: Vec<f64> = (0..12).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
        let mut buf = Vec::new();
        write_phases(&mut buf, 3, 4, &phases).unwrap();
        let (m, n, back) = read_phases(buf.as_slice()).unwrap();
        assert_eq!((m, n), (3, 4));
        assert!(phases.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn phase_file_rejects_short_body() {
        let mut buf = Vec::new();
        write_phases(&mut buf, 1, 2, &[0.5, 1.5]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("elements_per_layer 2", "elements_per_layer 3");
        assert!(read_phases(text.as_bytes()).is_err());
    }
}
