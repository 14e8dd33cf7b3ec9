use crate::error::{check_len, Error, Result};
use crate::nn::activation::softmax;
use crate::scalar::Scalar;

/// Loss scalar together with its gradient with respect to the prediction
/// (or logits, for the fused softmax variant).
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue<T> {
    pub value: T,
    pub grad: Vec<T>,
}

fn one_hot_index<T: Scalar>(target: &[T]) -> Result<usize> {
    let mut hot = None;
    for (i, &t) in target.iter().enumerate() {
        if t == T::one() {
            if hot.is_some() {
                return Err(Error::InvalidArgument("target has more than one hot entry".into()));
            }
            hot = Some(i);
        } else if t != T::zero() {
            return Err(Error::InvalidArgument(format!("target entry {i} is neither 0 nor 1")));
        }
    }
    hot.ok_or_else(|| Error::InvalidArgument("target has no hot entry".into()))
}

/// `−Σ targetⱼ·ln predictionⱼ` with gradient `−target/prediction`.
pub fn cross_entropy<T: Scalar>(target: &[T], prediction: &[T]) -> Result<LossValue<T>> {
    check_len("cross_entropy", target.len(), prediction.len())?;
    let k = one_hot_index(target)?;
    let p = prediction[k];
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "prediction assigns zero probability to target class {k}"
        )));
    }
    let mut grad = vec![T::zero(); target.len()];
    grad[k] = -T::one() / p;
    Ok(LossValue { value: -p.ln(), grad })
}

/// Fused softmax + cross-entropy on raw logits. The gradient is with respect
/// to the logits: `softmax(logits) − target`.
pub fn softmax_cross_entropy<T: Scalar>(target: &[T], logits: &[T]) -> Result<(LossValue<T>, Vec<T>)> {
    check_len("softmax_cross_entropy", target.len(), logits.len())?;
    let k = one_hot_index(target)?;
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
    let probs = softmax(logits);
    let grad = probs.iter().zip(target).map(|(&p, &t)| p - t).collect();
    let value = (log_sum - logits[k]).max(T::zero());
    Ok((LossValue { value, grad }, probs))
}

/// `(1/d)·‖target − prediction‖²`.
pub fn mse<T: Scalar>(target: &[T], prediction: &[T]) -> Result<LossValue<T>> {
    check_len("mse", target.len(), prediction.len())?;
    let d = T::of(target.len() as f64);
    let diff: Vec<T> = prediction.iter().zip(target).map(|(&p, &t)| p - t).collect();
    let value = diff.iter().map(|&v| v * v).sum::<T>() / d;
    let grad = diff.iter().map(|&v| (v + v) / d).collect();
    Ok(LossValue { value, grad })
}
