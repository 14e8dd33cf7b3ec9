use super::model::{MinnModel, ModelGrads, Noise, TxScaling};
use crate::channel::ChannelPool;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metasurface::argmax;
use crate::nn::{softmax_cross_entropy, OptimizerState};
use crate::numeric::SeededRng;
use crate::power_control::{PowerPolicy, RxPosition};
use crate::scalar::Scalar;

const DATA_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fixed transmit power in watts, used whenever no policy is active.
    pub power_w: f64,
    pub noise_var: f64,
    pub seed: u64,
    /// Evaluate on the test set every this many epochs; 0 disables it.
    pub eval_every: usize,
}

impl TrainOptions {
    pub fn new(epochs: usize, batch_size: usize, power_w: f64, noise_var: f64, seed: u64) -> Self {
        Self {
            epochs,
            batch_size,
            power_w,
            noise_var,
            seed,
            eval_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.batch_size == 0 {
            problems.push("batch_size must be at least 1".to_string());
        }
        if !(self.power_w > 0.0 && self.power_w.is_finite()) {
            problems.push(format!("power_w must be positive, got {}", self.power_w));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            problems.push(format!("noise_var must be non-negative, got {}", self.noise_var));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// One row of the metric history, written once per epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub epoch: usize,
    pub step: usize,
    /// Mean objective over the epoch, including any power penalty.
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Mean `‖s‖²` over the epoch, in watts.
    pub mean_power: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub rows: Vec<MetricRow>,
}

impl History {
    pub fn last(&self) -> Option<&MetricRow> {
        self.rows.last()
    }
}

/// Warmup length for [`scheduled_train`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Epochs at the fixed warmup power with the policy frozen.
    pub warmup_epochs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
    /// Mean `‖s‖²` over every evaluated sample.
    pub mean_power: f64,
}

/// Minibatch training with a fixed transmit power.
pub fn train<T: Scalar>(
    model: &mut MinnModel<T>,
    optimizer: &mut OptimizerState<T>,
    train_set: &Dataset<T>,
    test_set: Option<&Dataset<T>>,
    pool: &mut ChannelPool<T>,
    opts: &TrainOptions,
) -> Result<History> {
    run(model, optimizer, None, train_set, test_set, pool, opts)
}

/// Joint training with a power policy. The first `warmup_epochs` use the
/// fixed `opts.power_w` and leave the policy untouched; afterwards the
/// policy sets the amplitude and the objective gains the `γ·P` penalty.
#[allow(clippy::too_many_arguments)]
pub fn scheduled_train<T: Scalar>(
    model: &mut MinnModel<T>,
    optimizer: &mut OptimizerState<T>,
    policy: &mut PowerPolicy<T>,
    policy_optimizer: &mut OptimizerState<T>,
    schedule: Schedule,
    train_set: &Dataset<T>,
    test_set: Option<&Dataset<T>>,
    pool: &mut ChannelPool<T>,
    opts: &TrainOptions,
) -> Result<History> {
    run(
        model,
        optimizer,
        Some((policy, policy_optimizer, schedule)),
        train_set,
        test_set,
        pool,
        opts,
    )
}

type PolicySlot<'a, T> = Option<(&'a mut PowerPolicy<T>, &'a mut OptimizerState<T>, Schedule)>;

fn run<T: Scalar>(
    model: &mut MinnModel<T>,
    optimizer: &mut OptimizerState<T>,
    mut policy: PolicySlot<'_, T>,
    train_set: &Dataset<T>,
    test_set: Option<&Dataset<T>>,
    pool: &mut ChannelPool<T>,
    opts: &TrainOptions,
) -> Result<History> {
    opts.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut data_rng = SeededRng::with_stream(opts.seed, DATA_STREAM);
    let mut noise_rng = SeededRng::with_stream(opts.seed, NOISE_STREAM);
    let eval_rng = SeededRng::with_stream(opts.seed, EVAL_STREAM);
    let mut history = History::default();
    let mut step = 0;

    for epoch in 1..=opts.epochs {
        let active = policy.as_ref().is_some_and(|(_, _, s)| epoch > s.warmup_epochs);
        let order = data_rng.permutation(train_set.len());
        let (mut loss_sum, mut correct, mut power_sum) = (0.0, 0usize, 0.0);

        for batch in order.chunks(opts.batch_size) {
            let mut total: Option<ModelGrads<T>> = None;
            let mut policy_total: Option<Vec<Vec<T>>> = None;
            for &i in batch {
                let sample = &train_set.samples()[i];
                let frame = pool.draw()?;
                let (scaling, power) = match (&mut policy, active) {
                    (Some((p, _, _)), true) => {
                        let w = p.forward(RxPosition::from_point(frame.rx))?;
                        (TxScaling::Amplitude(p.mode.amplitude(w)), Some(w))
                    }
                    _ => (TxScaling::Normalized(opts.power_w), None),
                };
                let tape = model.e2e_forward(
                    &sample.features,
                    &frame.state,
                    scaling,
                    Noise::Sampled {
                        variance: opts.noise_var,
                        rng: &mut noise_rng,
                    },
                )?;
                let target = sample.one_hot(train_set.classes());
                let (ce, _) = softmax_cross_entropy(&target, &tape.logits)?;
                let mut loss = ce.value.to_f64_lossy();
                if let (Some((p, _, _)), Some(w)) = (&policy, power) {
                    loss += p.gamma * w;
                }
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch, step });
                }
                loss_sum += loss;
                power_sum += tape.transmit_power();
                if argmax(&tape.logits) == sample.label {
                    correct += 1;
                }
                let grads = model.backward(tape, &ce.grad)?;
                if let (Some((p, _, _)), Some(w)) = (&mut policy, power) {
                    let d_power = grads.amplitude * p.mode.amplitude_derivative(w) + p.gamma;
                    let blocks = p.backward(d_power)?;
                    accumulate_blocks(&mut policy_total, blocks);
                }
                match &mut total {
                    Some(t) => t.accumulate(&grads),
                    None => total = Some(grads),
                }
            }
            let inv = T::of(1.0 / batch.len() as f64);
            let mut total = total.expect("batches are non-empty");
            total.scale(inv);
            optimizer.step(&mut model.param_slices_mut(), &total.blocks())?;
            if let (Some((p, popt, _)), Some(mut blocks)) = (&mut policy, policy_total) {
                blocks.iter_mut().flatten().for_each(|v| *v = *v * inv);
                popt.step(&mut p.param_slices_mut(), &blocks)?;
            }
            step += 1;
        }

        let test_acc = match test_set {
            Some(ts) if opts.eval_every > 0 && epoch % opts.eval_every == 0 => {
                let pol = policy.as_ref().filter(|_| active).map(|(p, _, _)| &**p);
                let mut rng = eval_rng.child(epoch as u64);
                Some(evaluate(model, pol, ts, pool, opts.power_w, opts.noise_var, &mut rng, 1)?.mean)
            }
            _ => None,
        };
        let n = train_set.len() as f64;
        history.rows.push(MetricRow {
            epoch,
            step,
            loss: loss_sum / n,
            train_acc: correct as f64 / n,
            test_acc,
            mean_power: power_sum / n,
            seed: opts.seed,
        });
    }
    Ok(history)
}

fn accumulate_blocks<T: Scalar>(total: &mut Option<Vec<Vec<T>>>, blocks: Vec<Vec<T>>) {
    match total {
        Some(t) => {
            for (a, b) in t.iter_mut().zip(&blocks) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = *x + *y;
                }
            }
        }
        None => *total = Some(blocks),
    }
}

/// Test accuracy over `repeats` passes with fresh noise and channel draws.
/// The pool is reseeded from `rng`, so the caller's pool does not advance.
#[allow(clippy::too_many_arguments)]
pub fn evaluate<T: Scalar>(
    model: &MinnModel<T>,
    policy: Option<&PowerPolicy<T>>,
    test_set: &Dataset<T>,
    pool: &ChannelPool<T>,
    power_w: f64,
    noise_var: f64,
    rng: &mut SeededRng,
    repeats: usize,
) -> Result<EvalResult> {
    if repeats == 0 || test_set.is_empty() {
        return Err(Error::InvalidArgument("evaluation needs a non-empty test set and at least one repeat".into()));
    }
    let mut accuracies = Vec::with_capacity(repeats);
    let mut power_sum = 0.0;
    for r in 0..repeats {
        let mut pool = pool.reseeded(rng.child(2 * r as u64));
        let mut noise_rng = rng.child(2 * r as u64 + 1);
        let mut correct = 0usize;
        for sample in test_set.samples() {
            let frame = pool.draw()?;
            let scaling = match policy {
                Some(p) => TxScaling::Amplitude(p.mode.amplitude(p.apply(RxPosition::from_point(frame.rx))?)),
                None => TxScaling::Normalized(power_w),
            };
            let tape = model.predict(
                &sample.features,
                &frame.state,
                scaling,
                Noise::Sampled {
                    variance: noise_var,
                    rng: &mut noise_rng,
                },
            )?;
            power_sum += tape.transmit_power();
            if argmax(&tape.logits) == sample.label {
                correct += 1;
            }
        }
        accuracies.push(correct as f64 / test_set.len() as f64);
    }
    rng.next_u64();
    let mean = accuracies.iter().sum::<f64>() / repeats as f64;
    let std = if repeats > 1 {
        (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(EvalResult {
        mean,
        std,
        accuracies,
        mean_power: power_sum / (repeats * test_set.len()) as f64,
    })
}
