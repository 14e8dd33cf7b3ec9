use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Learning rate, Adam moments and the step counter for one parameter set.
///
/// Parameters are handled as an ordered list of flat blocks; the moments are
/// allocated on the first step and must keep the same block shapes after.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub lr: f64,
    pub kind: OptimizerKind,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            lr,
            kind,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimizerKind::adam(), lr)
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[Vec<T>]) -> Result<()> {
        match self.kind {
            OptimizerKind::Sgd => self.sgd_step(params, grads),
            OptimizerKind::Adam { .. } => self.adam_step(params, grads),
        }
    }

    /// `w ← w − η·∇`.
    pub fn sgd_step(&mut self, params: &mut [&mut [T]], grads: &[Vec<T>]) -> Result<()> {
        check_shapes(params, grads)?;
        let lr = T::of(self.lr);
        for (p, g) in params.iter_mut().zip(grads) {
            for (w, &d) in p.iter_mut().zip(g) {
                *w = *w - lr * d;
            }
        }
        self.step += 1;
        Ok(())
    }

    /// Bias-corrected Adam update.
    pub fn adam_step(&mut self, params: &mut [&mut [T]], grads: &[Vec<T>]) -> Result<()> {
        check_shapes(params, grads)?;
        let (beta1, beta2, eps) = match self.kind {
            OptimizerKind::Adam { beta1, beta2, eps } => (beta1, beta2, eps),
            OptimizerKind::Sgd => (0.9, 0.999, 1e-8),
        };
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![T::zero(); g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != grads.len() || self.m.iter().zip(grads).any(|(m, g)| m.len() != g.len()) {
            return Err(Error::DimensionMismatch {
                context: "adam_step moments",
                expected: format!("{} blocks", self.m.len()),
                found: format!("{} blocks", grads.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::of(1.0 - beta1.powi(t));
        let bc2 = T::of(1.0 - beta2.powi(t));
        let (b1, b2, eps, lr) = (T::of(beta1), T::of(beta2), T::of(eps), T::of(self.lr));
        let one = T::one();
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((w, &d), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (one - b1) * d;
                *vi = b2 * *vi + (one - b2) * d * d;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

fn check_shapes<T>(params: &[&mut [T]], grads: &[Vec<T>]) -> Result<()> {
    check_len("optimizer parameter blocks", params.len(), grads.len())?;
    for (p, g) in params.iter().zip(grads) {
        check_len("optimizer block length", p.len(), g.len())?;
    }
    Ok(())
}
