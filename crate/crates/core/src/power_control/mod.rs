//! Position-driven transmit power control trained with a fixed Lagrange
//! penalty on the emitted power.

use crate::channel::Arena;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, softplus, Activation, LossValue, Mlp, NamedArray};
use crate::numeric::SeededRng;
use crate::scalar::Scalar;

pub use crate::minn::{scheduled_train, Schedule};

/// 40 dBm.
pub const DEFAULT_CEILING_W: f64 = 10.0;
/// −60 dBm; keeps the emitted power strictly positive.
pub const POWER_FLOOR_W: f64 = 1e-9;
/// 30 dBm, the fixed power used before the policy joins training.
pub const WARMUP_POWER_W: f64 = 1.0;
pub const DEFAULT_WARMUP_EPOCHS: usize = 30;

/// How the policy output scales the unit-norm encoder signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingMode {
    /// `s̄ = P·ŝ`: the output multiplies the amplitude directly.
    AmplitudeLiteral,
    /// `s̄ = √P·ŝ`, so `‖s̄‖² = P`.
    Power,
}

impl ScalingMode {
    pub fn amplitude(&self, p: f64) -> f64 {
        match self {
            Self::AmplitudeLiteral => p,
            Self::Power => p.sqrt(),
        }
    }

    pub fn amplitude_derivative(&self, p: f64) -> f64 {
        match self {
            Self::AmplitudeLiteral => 1.0,
            Self::Power => 0.5 / p.sqrt(),
        }
    }
}

/// Receiver position `[x, y]` in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxPosition {
    pub x: f64,
    pub y: f64,
}

impl RxPosition {
    pub fn from_point(p: [f64; 3]) -> Self {
        Self { x: p[0], y: p[1] }
    }
}

#[derive(Clone, Debug)]
pub struct PowerPolicy<T> {
    net: Mlp<T>,
    pub gamma: f64,
    /// Average-power target used to report constraint satisfaction.
    pub p_max: f64,
    pub ceiling: f64,
    /// `P = scale·softplus(z)`; the default makes a zero output emit the
    /// warmup power.
    pub scale: f64,
    pub mode: ScalingMode,
    pub arena: Arena,
    cached_pre: Option<(f64, bool)>,
}

impl<T: Scalar> PowerPolicy<T> {
    pub fn new(hidden: &[usize], gamma: f64, arena: Arena, rng: &mut SeededRng) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {gamma}")));
        }
        let mut widths = vec![2];
        widths.extend_from_slice(hidden);
        widths.push(1);
        Ok(Self {
            net: Mlp::new(&widths, Activation::Identity, rng)?,
            gamma,
            p_max: WARMUP_POWER_W,
            ceiling: DEFAULT_CEILING_W,
            scale: WARMUP_POWER_W / std::f64::consts::LN_2,
            mode: ScalingMode::AmplitudeLiteral,
            arena,
            cached_pre: None,
        })
    }

    pub fn net(&self) -> &Mlp<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp<T> {
        &mut self.net
    }

    fn inputs(&self, pos: RxPosition) -> [T; 2] {
        let n = self.arena.normalize_xy([pos.x, pos.y, 0.0]);
        [T::of(n[0]), T::of(n[1])]
    }

    fn map(&self, z: f64) -> (f64, bool) {
        let p = self.scale * softplus(z);
        if p >= self.ceiling {
            (self.ceiling, true)
        } else if p <= POWER_FLOOR_W {
            (POWER_FLOOR_W, true)
        } else {
            (p, false)
        }
    }

    pub fn apply(&self, pos: RxPosition) -> Result<f64> {
        let z = self.net.apply(&self.inputs(pos))?[0].to_f64_lossy();
        Ok(self.map(z).0)
    }

    pub fn forward(&mut self, pos: RxPosition) -> Result<f64> {
        let z = self.net.forward(&self.inputs(pos))?[0].to_f64_lossy();
        let (p, clamped) = self.map(z);
        self.cached_pre = Some((z, clamped));
        Ok(p)
    }

    /// Parameter gradient blocks for an upstream `∂L/∂P`. Zero once the
    /// ceiling or floor is active.
    pub fn backward(&mut self, grad_power: f64) -> Result<Vec<Vec<T>>> {
        let (z, clamped) = self
            .cached_pre
            .take()
            .ok_or(Error::BackwardBeforeForward("PowerPolicy"))?;
        let dz = if clamped { 0.0 } else { grad_power * self.scale * sigmoid(z) };
        Ok(self.net.backward(&[T::of(dz)])?.1)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.net.param_slices_mut()
    }

    pub fn named_params(&self) -> Vec<NamedArray> {
        self.net.named_params("power")
    }
}

/// Power emitted for a receiver at `pos`.
pub fn power_net_forward<T: Scalar>(policy: &PowerPolicy<T>, pos: RxPosition) -> Result<f64> {
    policy.apply(pos)
}

/// Cross-entropy plus the power penalty `γ·P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lagrangian<T> {
    pub value: T,
    pub ce: LossValue<T>,
    /// `∂/∂P`, equal to `γ`.
    pub power_grad: T,
}

pub fn lagrangian_loss<T: Scalar>(ce: LossValue<T>, p: T, gamma: T) -> Result<Lagrangian<T>> {
    if !(gamma >= T::zero()) {
        return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {gamma}")));
    }
    Ok(Lagrangian {
        value: ce.value + gamma * p,
        ce,
        power_grad: gamma,
    })
}

/// `2·atan(r) + π`, landing strictly inside `(0, 2π)`.
pub fn phase_constraint<T: Scalar>(omega_raw: &[T]) -> Vec<T> {
    omega_raw
        .iter()
        .map(|&r| T::of(crate::minn::PhaseParam::Arctan.map(r.to_f64_lossy())))
        .collect()
}

pub fn phase_constraint_derivative<T: Scalar>(omega_raw: &[T]) -> Vec<T> {
    omega_raw
        .iter()
        .map(|&r| T::of(crate::minn::PhaseParam::Arctan.derivative(r.to_f64_lossy())))
        .collect()
}
