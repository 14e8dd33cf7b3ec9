use std::sync::Arc;

use num_complex::Complex;

use super::branch::BranchNet;
use super::channel_layer::{channel_layer_backward, channel_layer_forward, phase_gradient, ChannelTape};
use super::variant::{CsiMode, MinnConfig, MsMode, MsType, PhaseParam};
use crate::channel::{sample_noise, ChannelState};
use crate::error::{check_len, Error, Result};
use crate::metasurface::{diffraction_matrix, response_from_phase};
use crate::nn::{sigmoid, softmax_cross_entropy, Activation, LossValue, Mlp, NamedArray};
use crate::numeric::{vec_norm, ComplexMatrix, ComplexVector, SeededRng};
use crate::scalar::Scalar;

/// Trainable parameters. Which optional groups exist depends on the
/// variant: a controller for controllable metasurfaces, raw phases for
/// static ones, neither without a metasurface.
#[derive(Clone, Debug)]
pub struct ModelParams<T> {
    pub encoder: BranchNet<T>,
    pub decoder: BranchNet<T>,
    pub controller: Option<Mlp<T>>,
    pub phases: Option<Vec<T>>,
}

/// How the unit-direction encoder output is scaled before transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TxScaling {
    /// `s = √p·u/‖u‖`, so `‖s‖² = p`.
    Normalized(f64),
    /// `s = a·u/‖u‖`.
    Amplitude(f64),
}

impl TxScaling {
    fn amplitude(&self) -> f64 {
        match *self {
            Self::Normalized(p) => p.sqrt(),
            Self::Amplitude(a) => a,
        }
    }
}

/// Source of the receiver noise for one forward pass.
pub enum Noise<'a, T> {
    Sampled { variance: f64, rng: &'a mut SeededRng },
    Fixed(&'a [Complex<T>]),
}

/// Everything the backward pass needs from one forward pass. Consumed by
/// [`MinnModel::backward`].
#[derive(Clone, Debug)]
pub struct ForwardTape<T> {
    pub x: Vec<T>,
    pub state: ChannelState<T>,
    pub encoder_out: Vec<T>,
    /// Encoder output before normalization.
    pub u: ComplexVector<T>,
    /// Transmitted signal.
    pub s: ComplexVector<T>,
    pub amplitude: f64,
    /// Raw static phases or controller sigmoids, per element.
    phase_inputs: Vec<T>,
    pub omega: Vec<T>,
    pub channel: ChannelTape<T>,
    pub y: ComplexVector<T>,
    pub logits: Vec<T>,
    pub prediction: Vec<T>,
}

impl<T: Scalar> ForwardTape<T> {
    pub fn noise(&self) -> &[Complex<T>] {
        &self.channel.noise
    }

    pub fn transmit_power(&self) -> f64 {
        self.s.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum()
    }
}

/// Gradient of the loss with respect to every parameter group, plus the
/// transmit amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads<T> {
    pub encoder: Vec<Vec<T>>,
    pub decoder: Vec<Vec<T>>,
    pub controller: Vec<Vec<T>>,
    pub phases: Vec<T>,
    pub amplitude: f64,
}

impl<T: Scalar> ModelGrads<T> {
    /// Blocks in [`MinnModel::param_slices_mut`] order.
    pub fn blocks(&self) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = Vec::new();
        out.extend(self.encoder.iter().cloned());
        out.extend(self.decoder.iter().cloned());
        out.extend(self.controller.iter().cloned());
        if !self.phases.is_empty() {
            out.push(self.phases.clone());
        }
        out
    }

    pub fn accumulate(&mut self, other: &Self) {
        fn add<T: Scalar>(a: &mut [Vec<T>], b: &[Vec<T>]) {
            for (x, y) in a.iter_mut().zip(b) {
                for (p, q) in x.iter_mut().zip(y) {
                    *p = *p + *q;
                }
            }
        }
        add(&mut self.encoder, &other.encoder);
        add(&mut self.decoder, &other.decoder);
        add(&mut self.controller, &other.controller);
        for (p, q) in self.phases.iter_mut().zip(&other.phases) {
            *p = *p + *q;
        }
        self.amplitude += other.amplitude;
    }

    pub fn scale(&mut self, f: T) {
        for b in self.encoder.iter_mut().chain(&mut self.decoder).chain(&mut self.controller) {
            b.iter_mut().for_each(|v| *v = *v * f);
        }
        self.phases.iter_mut().for_each(|v| *v = *v * f);
        self.amplitude *= f.to_f64_lossy();
    }
}

/// Multiply-accumulate counts of one inference, in real MACs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacBreakdown {
    pub encoder: u64,
    pub decoder: u64,
    pub controller: u64,
    pub channel: u64,
}

impl MacBreakdown {
    pub fn total(&self) -> u64 {
        self.encoder + self.decoder + self.controller + self.channel
    }
}

/// End-to-end model: encoder, metasurface-parametrized channel and decoder.
#[derive(Clone, Debug)]
pub struct MinnModel<T> {
    config: MinnConfig,
    pub params: ModelParams<T>,
    xi: Option<Arc<ComplexMatrix<T>>>,
}

enum Nets<'a, T> {
    Train(&'a mut ModelParams<T>),
    Infer(&'a ModelParams<T>),
}

impl<T: Scalar> Nets<'_, T> {
    fn encoder(&mut self, x: &[T], side: Option<&[T]>) -> Result<Vec<T>> {
        match self {
            Self::Train(p) => p.encoder.forward(x, side),
            Self::Infer(p) => p.encoder.apply(x, side),
        }
    }

    fn decoder(&mut self, x: &[T], side: Option<&[T]>) -> Result<Vec<T>> {
        match self {
            Self::Train(p) => p.decoder.forward(x, side),
            Self::Infer(p) => p.decoder.apply(x, side),
        }
    }

    fn controller(&mut self, features: &[T]) -> Result<Vec<T>> {
        let missing = || Error::InvalidArgument("controllable variant has no controller".into());
        match self {
            Self::Train(p) => p.controller.as_mut().ok_or_else(missing)?.forward(features),
            Self::Infer(p) => p.controller.as_ref().ok_or_else(missing)?.apply(features),
        }
    }

    fn params(&self) -> &ModelParams<T> {
        match self {
            Self::Train(p) => p,
            Self::Infer(p) => p,
        }
    }
}

impl<T: Scalar> MinnModel<T> {
    pub fn new(config: MinnConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let variant = config.variant;
        let csi_len = config.csi_feature_len();
        let side = (variant.csi == CsiMode::Aware).then_some((csi_len, config.csi_hidden.as_slice()));
        let encoder = BranchNet::new(config.input_dim, &config.encoder_hidden, 2 * config.n_t, side, rng)?;
        let decoder = BranchNet::new(2 * config.n_r, &config.decoder_hidden, config.classes, side, rng)?;
        let n_phases = config.phase_count();
        let controller = if variant.ms_mode == MsMode::Controllable {
            let mut w = vec![csi_len];
            w.extend_from_slice(&config.controller_hidden);
            w.push(n_phases);
            Some(Mlp::new(&w, Activation::Identity, rng)?)
        } else {
            None
        };
        let phases = (variant.ms_mode == MsMode::Static).then(|| {
            (0..n_phases)
                .map(|_| {
                    T::of(match config.phase_param {
                        PhaseParam::Periodic => rng.uniform_range(0.0, 2.0 * std::f64::consts::PI),
                        _ => rng.uniform_range(-1.0, 1.0),
                    })
                })
                .collect()
        });
        let xi = if variant.has_ms() && variant.ms_type == MsType::Sim {
            Some(Arc::new(diffraction_matrix(&config.sim_geometry())?))
        } else {
            None
        };
        Ok(Self {
            config,
            params: ModelParams {
                encoder,
                decoder,
                controller,
                phases,
            },
            xi,
        })
    }

    pub fn config(&self) -> &MinnConfig {
        &self.config
    }

    pub fn propagation(&self) -> Option<&ComplexMatrix<T>> {
        self.xi.as_deref()
    }

    pub fn param_count(&self) -> usize {
        self.params.encoder.param_count()
            + self.params.decoder.param_count()
            + self.params.controller.as_ref().map_or(0, Mlp::param_count)
            + self.params.phases.as_ref().map_or(0, Vec::len)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let p = &mut self.params;
        let mut out = p.encoder.param_slices_mut();
        out.extend(p.decoder.param_slices_mut());
        if let Some(c) = &mut p.controller {
            out.extend(c.param_slices_mut());
        }
        if let Some(ph) = &mut p.phases {
            out.push(ph.as_mut_slice());
        }
        out
    }

    pub fn named_params(&self) -> Vec<NamedArray> {
        let p = &self.params;
        let mut out = p.encoder.named_params("encoder");
        out.extend(p.decoder.named_params("decoder"));
        if let Some(c) = &p.controller {
            out.extend(c.named_params("controller"));
        }
        if let Some(ph) = &p.phases {
            out.push(NamedArray::new("phases", vec![ph.len()], ph.iter().map(|v| v.to_f64_lossy()).collect()));
        }
        out
    }

    pub fn load_named(&mut self, arrays: &[NamedArray]) -> Result<()> {
        let p = &mut self.params;
        p.encoder.load_named("encoder", arrays)?;
        p.decoder.load_named("decoder", arrays)?;
        if let Some(c) = &mut p.controller {
            c.load_named("controller", arrays)?;
        }
        if let Some(ph) = &mut p.phases {
            let a = arrays
                .iter()
                .find(|a| a.name == "phases")
                .ok_or_else(|| Error::Format("checkpoint lacks array phases".into()))?;
            check_len("phases", ph.len(), a.data.len())?;
            for (d, &v) in ph.iter_mut().zip(&a.data) {
                *d = T::of(v);
            }
        }
        Ok(())
    }

    /// Static phases in radians, after the configured parametrization.
    pub fn static_phases(&self) -> Option<Vec<T>> {
        let pp = self.config.phase_param;
        self.params
            .phases
            .as_ref()
            .map(|raw| raw.iter().map(|&r| T::of(pp.map(r.to_f64_lossy()))).collect())
    }

    pub fn macs(&self) -> MacBreakdown {
        let c = &self.config;
        let channel = if c.variant.has_ms() {
            let (m, n) = (c.effective_layers() as u64, c.n_m as u64);
            let complex = (c.n_r as u64) * n + n * (c.n_t as u64) + (m - 1) * n * n + m * n;
            4 * complex
        } else {
            0
        };
        MacBreakdown {
            encoder: self.params.encoder.macs(),
            decoder: self.params.decoder.macs(),
            controller: self.params.controller.as_ref().map_or(0, Mlp::macs),
            channel,
        }
    }

    fn check_csi(&self, csi: Option<&ChannelState<T>>) -> Result<Option<Vec<T>>> {
        let aware = self.config.variant.csi == CsiMode::Aware;
        let needs = aware || self.config.variant.ms_mode == MsMode::Controllable;
        match csi {
            Some(st) => {
                check_len("CSI n_t", self.config.n_t, st.n_t())?;
                check_len("CSI n_r", self.config.n_r, st.n_r())?;
                check_len("CSI n_m", self.config.n_m, st.n_m())?;
                Ok(Some(st.features()))
            }
            None if needs => Err(Error::InvalidArgument(
                "this variant needs channel state information".into(),
            )),
            None => Ok(None),
        }
    }

    fn side<'a>(&self, features: &'a Option<Vec<T>>) -> Option<&'a [T]> {
        if self.config.variant.csi == CsiMode::Aware {
            features.as_deref()
        } else {
            None
        }
    }

    /// Complex transmit vector before normalization: the encoder's `2·N_t`
    /// outputs read as `(re, im)` pairs.
    pub fn encoder_forward(&mut self, x: &[T], csi: Option<&ChannelState<T>>) -> Result<ComplexVector<T>> {
        if csi.is_some() != (self.config.variant.csi == CsiMode::Aware) {
            return Err(Error::InvalidArgument(
                "CSI must be given to the encoder exactly when the variant is channel-aware".into(),
            ));
        }
        let features = self.check_csi(csi)?;
        let side = self.side(&features).map(<[T]>::to_vec);
        let out = self.params.encoder.forward(x, side.as_deref())?;
        Ok(pairs_to_complex(&out))
    }

    /// Per-frame responses `exp(−j·2π·sigmoid(z))` from the controller.
    pub fn controller_forward(&mut self, csi: &ChannelState<T>) -> Result<ComplexVector<T>> {
        if self.config.variant.ms_mode != MsMode::Controllable {
            return Err(Error::InvalidArgument("variant has no controller".into()));
        }
        let features = self.check_csi(Some(csi))?.expect("features present");
        let z = Nets::Train(&mut self.params).controller(&features)?;
        check_len("controller output", self.config.phase_count(), z.len())?;
        let omega: Vec<T> = z.iter().map(|&v| T::TAU() * sigmoid(v)).collect();
        Ok(response_from_phase(&omega))
    }

    /// Full forward pass; network caches are kept for [`Self::backward`].
    pub fn e2e_forward(
        &mut self,
        x: &[T],
        csi: &ChannelState<T>,
        scaling: TxScaling,
        noise: Noise<'_, T>,
    ) -> Result<ForwardTape<T>> {
        let config = self.config.clone();
        let xi = self.xi.clone();
        let features = self.check_csi(Some(csi))?;
        forward_impl(&config, xi.as_deref(), Nets::Train(&mut self.params), x, csi, features, scaling, noise)
    }

    /// Forward pass without touching any cache.
    pub fn predict(
        &self,
        x: &[T],
        csi: &ChannelState<T>,
        scaling: TxScaling,
        noise: Noise<'_, T>,
    ) -> Result<ForwardTape<T>> {
        let features = self.check_csi(Some(csi))?;
        forward_impl(&self.config, self.propagation(), Nets::Infer(&self.params), x, csi, features, scaling, noise)
    }

    /// Cross-entropy of `target` against a forward pass.
    pub fn loss(tape: &ForwardTape<T>, label: usize) -> Result<LossValue<T>> {
        let target = crate::data::one_hot::<T>(label, tape.logits.len())?;
        Ok(softmax_cross_entropy(&target, &tape.logits)?.0)
    }

    /// Back-propagates `∂L/∂logits` through the pass recorded on `tape`.
    pub fn backward(&mut self, tape: ForwardTape<T>, grad_logits: &[T]) -> Result<ModelGrads<T>> {
        let cfg = &self.config;
        let n_r = cfg.n_r;
        let (g_in, decoder) = self.params.decoder.backward(grad_logits)?;
        let g_y: ComplexVector<T> = (0..n_r).map(|k| Complex::new(g_in[k], g_in[n_r + k])).collect();
        let xi = self.xi.clone();
        let g_ch = channel_layer_backward(&tape.state, xi.as_deref(), tape.channel, &g_y)?;

        let mut controller = Vec::new();
        let mut phases = Vec::new();
        if cfg.variant.has_ms() {
            let resp = response_from_phase(&tape.omega);
            let g_omega = phase_gradient(&resp, &g_ch.responses);
            match cfg.variant.ms_mode {
                MsMode::Static => {
                    let pp = cfg.phase_param;
                    phases = g_omega
                        .iter()
                        .zip(&tape.phase_inputs)
                        .map(|(&g, &r)| g * T::of(pp.derivative(r.to_f64_lossy())))
                        .collect();
                }
                MsMode::Controllable => {
                    let g_z: Vec<T> = g_omega
                        .iter()
                        .zip(&tape.phase_inputs)
                        .map(|(&g, &sg)| g * T::TAU() * sg * (T::one() - sg))
                        .collect();
                    let ctrl = self
                        .params
                        .controller
                        .as_mut()
                        .ok_or_else(|| Error::InvalidArgument("controllable variant has no controller".into()))?;
                    controller = ctrl.backward(&g_z)?.1;
                }
                MsMode::None => {}
            }
        }

        let (g_u, amplitude) = normalize_backward(&tape.u, tape.amplitude, &g_ch.s)?;
        let g_out: Vec<T> = g_u.iter().flat_map(|z| [z.re, z.im]).collect();
        let (_, encoder) = self.params.encoder.backward(&g_out)?;
        Ok(ModelGrads {
            encoder,
            decoder,
            controller,
            phases,
            amplitude,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn forward_impl<T: Scalar>(
    config: &MinnConfig,
    xi: Option<&ComplexMatrix<T>>,
    mut nets: Nets<'_, T>,
    x: &[T],
    csi: &ChannelState<T>,
    features: Option<Vec<T>>,
    scaling: TxScaling,
    noise: Noise<'_, T>,
) -> Result<ForwardTape<T>> {
    let aware = config.variant.csi == CsiMode::Aware;
    let side = if aware { features.as_deref() } else { None };
    let encoder_out = nets.encoder(x, side)?;
    let u = pairs_to_complex(&encoder_out);
    let amplitude = scaling.amplitude();
    if !(amplitude > 0.0) {
        return Err(Error::InvalidArgument(format!("transmit scaling must be positive, got {scaling:?}")));
    }
    let s = power_normalize(&u, T::of(amplitude * amplitude))?;

    let (phase_inputs, omega): (Vec<T>, Vec<T>) = match config.variant.ms_mode {
        MsMode::None => (Vec::new(), Vec::new()),
        MsMode::Static => {
            let raw = nets
                .params()
                .phases
                .clone()
                .ok_or_else(|| Error::InvalidArgument("static variant has no phases".into()))?;
            let pp = config.phase_param;
            let omega = raw.iter().map(|&r| T::of(pp.map(r.to_f64_lossy()))).collect();
            (raw, omega)
        }
        MsMode::Controllable => {
            let f = features.as_deref().expect("controllable variants always see CSI");
            let z = nets.controller(f)?;
            check_len("controller output", config.phase_count(), z.len())?;
            let sg: Vec<T> = z.iter().map(|&v| sigmoid(v)).collect();
            let omega = sg.iter().map(|&v| T::TAU() * v).collect();
            (sg, omega)
        }
    };
    let responses = config.variant.has_ms().then(|| response_from_phase(&omega));

    let noise_vec = match noise {
        Noise::Sampled { variance, rng } => sample_noise(config.n_r, variance, rng),
        Noise::Fixed(n) => {
            check_len("fixed noise", config.n_r, n.len())?;
            n.to_vec()
        }
    };
    let (y, channel) = channel_layer_forward(csi, xi, responses.as_deref(), &s, &noise_vec)?;
    let dec_in: Vec<T> = y.iter().map(|z| z.re).chain(y.iter().map(|z| z.im)).collect();
    let logits = nets.decoder(&dec_in, side)?;
    let prediction = crate::nn::softmax(&logits);
    Ok(ForwardTape {
        x: x.to_vec(),
        state: csi.clone(),
        encoder_out,
        u,
        s,
        amplitude,
        phase_inputs,
        omega,
        channel,
        y,
        logits,
        prediction,
    })
}

fn pairs_to_complex<T: Scalar>(v: &[T]) -> ComplexVector<T> {
    v.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

/// `√p·s/‖s‖`.
pub fn power_normalize<T: Scalar>(s: &[Complex<T>], p: T) -> Result<ComplexVector<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument(format!("transmit power must be positive, got {p}")));
    }
    let norm = vec_norm(s);
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let f = p.sqrt() / norm;
    Ok(s.iter().map(|z| z * f).collect())
}

/// Backward of `a·u/‖u‖`: returns `(g_u, ∂L/∂a)`.
pub fn normalize_backward<T: Scalar>(u: &[Complex<T>], amplitude: f64, g_s: &[Complex<T>]) -> Result<(ComplexVector<T>, f64)> {
    check_len("normalize_backward", u.len(), g_s.len())?;
    let norm = vec_norm(u);
    if !(norm > T::zero()) {
        return Err(Error::ZeroNorm);
    }
    let proj = u
        .iter()
        .zip(g_s)
        .map(|(a, g)| (a.conj() * g).re)
        .sum::<T>()
        / norm;
    let f = T::of(amplitude) / norm;
    let g_u = u
        .iter()
        .zip(g_s)
        .map(|(a, g)| (g - a * (proj / norm)) * f)
        .collect();
    Ok((g_u, proj.to_f64_lossy()))
}
