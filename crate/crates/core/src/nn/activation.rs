use crate::scalar::Scalar;

pub fn relu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v.max(T::zero())).collect()
}

/// Gradient through ReLU given the pre-activation values.
pub fn relu_backward<T: Scalar>(pre: &[T], upstream: &[T]) -> Vec<T> {
    pre.iter()
        .zip(upstream)
        .map(|(&p, &g)| if p > T::zero() { g } else { T::zero() })
        .collect()
}

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Vector-Jacobian product of softmax: `p ∘ (g − ⟨g, p⟩)`.
pub fn softmax_backward<T: Scalar>(probs: &[T], upstream: &[T]) -> Vec<T> {
    let dot: T = probs.iter().zip(upstream).map(|(&p, &g)| p * g).sum();
    probs.iter().zip(upstream).map(|(&p, &g)| p * (g - dot)).collect()
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + eˣ)` without overflow.
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::of(30.0) {
        x
    } else {
        x.exp().ln_1p()
    }
}
