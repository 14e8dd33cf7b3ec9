//! The metasurface-parametrized channel as a differentiable layer.
//!
//! Gradients follow the real-pair convention: for a real loss `L` and a
//! complex quantity `z`, `g_z = ∂L/∂Re z + j·∂L/∂Im z`. A complex-linear map
//! `y = A·x` then back-propagates as `g_x = Aᴴ·g_y`.
//!
//! Two routes are provided. Training uses an adjoint pass that never forms
//! the `N_m×N_m` cascade. The Kronecker route builds the explicit Jacobians
//! `∂y/∂φ` from `vec(AXB) = (Bᵀ⊗A)·vec(X)` and the selection matrix `D`; it
//! is slower and exists to cross-check the adjoint pass.

use num_complex::Complex;

use crate::channel::ChannelState;
use crate::error::{check_len, Error, Result};
use crate::metasurface::{cascade_apply, cascade_backward, CascadeTrace};
use crate::numeric::{kron, selection_matrix, ComplexMatrix, ComplexVector};
use crate::scalar::Scalar;

/// Intermediates of one channel-layer forward pass.
#[derive(Clone, Debug)]
pub struct ChannelTape<T> {
    pub s: ComplexVector<T>,
    pub responses: Option<ComplexVector<T>>,
    pub trace: Option<CascadeTrace<T>>,
    pub noiseless: ComplexVector<T>,
    pub noise: ComplexVector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGrads<T> {
    pub s: ComplexVector<T>,
    /// Per element response, layer-major. Empty without a metasurface.
    pub responses: ComplexVector<T>,
}

/// `y = H_D·s + H_2·Φ·H_1ᴴ·s + noise`, where `Φ` is the layer stack given
/// by `responses` (one diagonal for a single layer, interleaved with `xi`
/// for several) or absent when `responses` is `None`.
pub fn channel_layer_forward<T: Scalar>(
    state: &ChannelState<T>,
    xi: Option<&ComplexMatrix<T>>,
    responses: Option<&[Complex<T>]>,
    s: &[Complex<T>],
    noise: &[Complex<T>],
) -> Result<(ComplexVector<T>, ChannelTape<T>)> {
    check_len("channel layer input", state.n_t(), s.len())?;
    check_len("channel layer noise", state.n_r(), noise.len())?;
    let mut noiseless = state.direct.matvec(s)?;
    let trace = match responses {
        Some(resp) => {
            if resp.is_empty() || resp.len() % state.n_m() != 0 {
                return Err(Error::DimensionMismatch {
                    context: "channel layer responses",
                    expected: format!("a positive multiple of {}", state.n_m()),
                    found: resp.len().to_string(),
                });
            }
            let at_ms = state.tx_to_ms.adjoint_matvec(s)?;
            let trace = cascade_apply(xi, resp, &at_ms)?;
            let cascaded = state.ms_to_rx.matvec(&trace.output)?;
            for (y, c) in noiseless.iter_mut().zip(cascaded) {
                *y = *y + c;
            }
            Some(trace)
        }
        None => None,
    };
    let y = noiseless.iter().zip(noise).map(|(a, b)| *a + *b).collect();
    Ok((
        y,
        ChannelTape {
            s: s.to_vec(),
            responses: responses.map(<[_]>::to_vec),
            trace,
            noiseless,
            noise: noise.to_vec(),
        },
    ))
}

/// Adjoint pass. Consumes the tape of the matching forward call.
pub fn channel_layer_backward<T: Scalar>(
    state: &ChannelState<T>,
    xi: Option<&ComplexMatrix<T>>,
    tape: ChannelTape<T>,
    grad_y: &[Complex<T>],
) -> Result<ChannelGrads<T>> {
    check_len("channel layer upstream", state.n_r(), grad_y.len())?;
    let mut g_s = state.direct.adjoint_matvec(grad_y)?;
    let g_resp = match (&tape.responses, &tape.trace) {
        (Some(resp), Some(trace)) => {
            let g_out = state.ms_to_rx.adjoint_matvec(grad_y)?;
            let (g_at_ms, g_resp) = cascade_backward(xi, resp, trace, &g_out)?;
            let back = state.tx_to_ms.matvec(&g_at_ms)?;
            for (a, b) in g_s.iter_mut().zip(back) {
                *a = *a + b;
            }
            g_resp
        }
        _ => Vec::new(),
    };
    Ok(ChannelGrads { s: g_s, responses: g_resp })
}

/// Chain rule through `φ = exp(−jω)`: `∂L/∂ω = Im(conj(g_φ)·φ)`.
pub fn phase_gradient<T: Scalar>(responses: &[Complex<T>], grad_responses: &[Complex<T>]) -> Vec<T> {
    responses
        .iter()
        .zip(grad_responses)
        .map(|(phi, g)| (g.conj() * phi).im)
        .collect()
}

/// `∂y/∂s = H_2·Φ·H_1ᴴ + H_D` for an explicit response matrix `Φ`.
pub fn input_jacobian<T: Scalar>(state: &ChannelState<T>, phi_effect: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    state.effective(phi_effect)
}

/// Single-surface Jacobian `∂y/∂φ = ((sᵀ·H_1*) ⊗ H_2)·D`, shape `N_r×N_m`.
pub fn ris_phase_jacobian<T: Scalar>(state: &ChannelState<T>, s: &[Complex<T>]) -> Result<ComplexMatrix<T>> {
    check_len("ris_phase_jacobian s", state.n_t(), s.len())?;
    let s_row = ComplexMatrix::from_row_major(1, s.len(), s.to_vec())?;
    let left = s_row.matmul(&state.tx_to_ms.conj())?;
    kron(&left, &state.ms_to_rx).matmul(&selection_matrix(state.n_m())?)
}

/// Jacobian of `y` with respect to the responses of layer `layer`
/// (0-based) of a stack: `(w_mᵀ ⊗ (H_2·A_m))·D`, where `A_m` is the part of
/// the stack after layer `m` and `w_m` the signal arriving at it.
pub fn sim_layer_jacobian<T: Scalar>(
    state: &ChannelState<T>,
    xi: &ComplexMatrix<T>,
    responses: &[Complex<T>],
    layer: usize,
    s: &[Complex<T>],
) -> Result<ComplexMatrix<T>> {
    let n = state.n_m();
    let layers = responses.len() / n;
    if responses.len() != layers * n || layer >= layers {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} out of range for {} responses of {n} elements",
            responses.len()
        )));
    }
    let layer_diag = |m: usize| ComplexMatrix::diag(&responses[m * n..(m + 1) * n]);
    // w_m = Ξ·Φ_{m−1}·…·Ξ·Φ_1·H_1ᴴ·s
    let s_col = ComplexMatrix::from_row_major(s.len(), 1, s.to_vec())?;
    let mut w = state.tx_to_ms.adjoint().matmul(&s_col)?;
    for m in 0..layer {
        w = xi.matmul(&layer_diag(m).matmul(&w)?)?;
    }
    // H_2·Φ_M·Ξ·…·Φ_{m+1}·Ξ
    let mut after = state.ms_to_rx.clone();
    for m in (layer + 1..layers).rev() {
        after = after.matmul(&layer_diag(m))?.matmul(xi)?;
    }
    kron(&w.transpose(), &after).matmul(&selection_matrix(n)?)
}

/// Response gradient from an explicit Jacobian of a complex-linear map:
/// `g_φ = Jᴴ·g_y`.
pub fn jacobian_response_gradient<T: Scalar>(jacobian: &ComplexMatrix<T>, grad_y: &[Complex<T>]) -> Result<ComplexVector<T>> {
    jacobian.adjoint_matvec(grad_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metasurface::{response_from_phase, sim_cascade, SimConfig, SimGeometry};
    use crate::numeric::{finite_diff_gradient, max_relative_error, sample_complex_gaussian, vec_max_abs_diff, SeededRng};

    fn state(rng: &mut SeededRng, n_t: usize, n_r: usize, n_m: usize) -> ChannelState<f64> {
        ChannelState::new(
            sample_complex_gaussian(rng, n_r, n_t, 1.0).unwrap(),
            sample_complex_gaussian(rng, n_t, n_m, 1.0).unwrap(),
            sample_complex_gaussian(rng, n_r, n_m, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn cvec(rng: &mut SeededRng, n: usize) -> Vec<Complex<f64>> {
        (0..n).map(|_| rng.complex_gaussian(1.0)).collect()
    }

    fn phases(rng: &mut SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.uniform_range(0.0, 6.28)).collect()
    }

    #[test]
    fn forward_matches_explicit_cascade() {
        let mut rng = SeededRng::new(1);
        let st = state(&mut rng, 2, 3, 4);
        let cfg = SimConfig::new(SimGeometry::new(3, 2, 2), phases(&mut rng, 12)).unwrap();
        let s = cvec(&mut rng, 2);
        let noise = cvec(&mut rng, 3);
        let (y, tape) = channel_layer_forward(&st, Some(cfg.propagation()), Some(&cfg.responses()), &s, &noise).unwrap();
        let want = st.effective(&sim_cascade(&cfg)).unwrap().matvec(&s).unwrap();
        assert!(vec_max_abs_diff(&tape.noiseless, &want) < 1e-12);
        let with_noise: Vec<_> = want.iter().zip(&noise).map(|(a, b)| a + b).collect();
        assert!(vec_max_abs_diff(&y, &with_noise) < 1e-12);
    }

    #[test]
    fn no_metasurface_is_direct_link() {
        let mut rng = SeededRng::new(2);
        let st = state(&mut rng, 2, 2, 4);
        let s = cvec(&mut rng, 2);
        let noise = cvec(&mut rng, 2);
        let (y, _) = channel_layer_forward(&st, None, None, &s, &noise).unwrap();
        let hd = st.direct.matvec(&s).unwrap();
        assert!(y.iter().zip(hd.iter().zip(&noise)).all(|(a, (b, n))| *a == b + n));
    }

    #[test]
    fn one_layer_stack_equals_surface() {
        let mut rng = SeededRng::new(3);
        let st = state(&mut rng, 2, 2, 4);
        let resp = response_from_phase(&phases(&mut rng, 4));
        let cfg = SimConfig::new(SimGeometry::new(1, 2, 2), vec![0.0; 4]).unwrap();
        let s = cvec(&mut rng, 2);
        let z = vec![Complex::new(0.0, 0.0); 2];
        let (a, _) = channel_layer_forward(&st, None, Some(&resp), &s, &z).unwrap();
        let (b, _) = channel_layer_forward(&st, Some(cfg.propagation()), Some(&resp), &s, &z).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scalar_surface_jacobian_reduces() {
        let mut rng = SeededRng::new(4);
        for _ in 0..20 {
            let st = state(&mut rng, 1, 1, 1);
            let s = cvec(&mut rng, 1);
            let j = ris_phase_jacobian(&st, &s).unwrap();
            let want = st.ms_to_rx[(0, 0)] * st.tx_to_ms[(0, 0)].conj() * s[0];
            assert!((j[(0, 0)] - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn adjoint_route_matches_kronecker_route() {
        let mut rng = SeededRng::new(5);
        let st = state(&mut rng, 2, 2, 4);
        let s = cvec(&mut rng, 2);
        let g_y = cvec(&mut rng, 2);
        let zero = vec![Complex::new(0.0, 0.0); 2];

        let resp = response_from_phase(&phases(&mut rng, 4));
        let (_, tape) = channel_layer_forward(&st, None, Some(&resp), &s, &zero).unwrap();
        let adj = channel_layer_backward(&st, None, tape, &g_y).unwrap();
        let kr = jacobian_response_gradient(&ris_phase_jacobian(&st, &s).unwrap(), &g_y).unwrap();
        assert!(vec_max_abs_diff(&adj.responses, &kr) < 1e-12);
        let gs = input_jacobian(&st, &ComplexMatrix::diag(&resp)).unwrap().adjoint_matvec(&g_y).unwrap();
        assert!(vec_max_abs_diff(&adj.s, &gs) < 1e-12);

        let cfg = SimConfig::new(SimGeometry::new(3, 2, 2), phases(&mut rng, 12)).unwrap();
        let resp = cfg.responses();
        let xi = cfg.propagation().as_ref();
        let (_, tape) = channel_layer_forward(&st, Some(xi), Some(&resp), &s, &zero).unwrap();
        let adj = channel_layer_backward(&st, Some(xi), tape, &g_y).unwrap();
        for m in 0..3 {
            let j = sim_layer_jacobian(&st, xi, &resp, m, &s).unwrap();
            let kr = jacobian_response_gradient(&j, &g_y).unwrap();
            assert!(vec_max_abs_diff(&adj.responses[m * 4..(m + 1) * 4], &kr) < 1e-12, "layer {m}");
        }
        let gs = input_jacobian(&st, &sim_cascade(&cfg)).unwrap().adjoint_matvec(&g_y).unwrap();
        assert!(vec_max_abs_diff(&adj.s, &gs) < 1e-12);
    }

    #[test]
    fn phase_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(6);
        let st = state(&mut rng, 2, 2, 4);
        let geom = SimGeometry::new(3, 2, 2);
        let xi = crate::metasurface::diffraction_matrix::<f64>(&geom).unwrap();
        let s = cvec(&mut rng, 2);
        let noise = cvec(&mut rng, 2);
        let c = cvec(&mut rng, 2);
        // L = Σ |y_i|² + Re(c_i*·y_i), so g_y = 2y + c
        let loss = |w: &[f64]| {
            let (y, _) = channel_layer_forward(&st, Some(&xi), Some(&response_from_phase(w)), &s, &noise).unwrap();
            y.iter().zip(&c).map(|(v, ci)| v.norm_sqr() + (ci.conj() * v).re).sum::<f64>()
        };
        let omega = phases(&mut rng, 12);
        let resp = response_from_phase(&omega);
        let (y, tape) = channel_layer_forward(&st, Some(&xi), Some(&resp), &s, &noise).unwrap();
        let g_y: Vec<_> = y.iter().zip(&c).map(|(v, ci)| v * 2.0 + ci).collect();
        let g = channel_layer_backward(&st, Some(&xi), tape, &g_y).unwrap();
        let analytic = phase_gradient(&resp, &g.responses);
        let fd = finite_diff_gradient(loss, &omega, 1e-5).unwrap();
        assert!(max_relative_error(&analytic, &fd, 1e-8) < 1e-6);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = SeededRng::new(7);
        let st = state(&mut rng, 2, 2, 4);
        let xi = crate::metasurface::diffraction_matrix::<f64>(&SimGeometry::new(2, 2, 2)).unwrap();
        let resp = response_from_phase(&phases(&mut rng, 8));
        let s = cvec(&mut rng, 2);
        let (_, tape) = channel_layer_forward(&st, Some(&xi), Some(&resp), &s, &cvec(&mut rng, 2)).unwrap();
        let g = channel_layer_backward(&st, Some(&xi), tape, &[Complex::new(0.0, 0.0); 2]).unwrap();
        assert!(g.s.iter().chain(&g.responses).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn shape_errors() {
        let mut rng = SeededRng::new(8);
        let st = state(&mut rng, 2, 2, 4);
        let z2 = vec![Complex::new(0.0, 0.0); 2];
        assert!(channel_layer_forward(&st, None, None, &z2[..1], &z2).is_err());
        let bad = vec![Complex::new(1.0, 0.0); 3];
        assert!(channel_layer_forward(&st, None, Some(&bad), &z2, &z2).is_err());
        assert!(sim_layer_jacobian(&st, &ComplexMatrix::identity(4), &[Complex::new(1.0, 0.0); 8], 2, &z2).is_err());
    }
}
