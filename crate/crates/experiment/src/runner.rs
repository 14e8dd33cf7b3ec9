use std::path::Path;

use anyhow::{bail, Context};
use log::info;
use minn_core::channel::{dbm_to_watts, ChannelModel, ChannelPool, SvEnvironment};
use minn_core::data::{load_idx, split_shuffle, synthetic_blobs, Dataset};
use minn_core::metasurface::argmax;
use minn_core::minn::{evaluate, scheduled_train, train, MetricRow, MinnModel, Schedule, TrainOptions};
use minn_core::nn::{softmax_cross_entropy, Activation, Mlp};
use minn_core::numeric::SeededRng;
use minn_core::power_control::PowerPolicy;
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig, FadingKind, MsModeChoice, MsTypeChoice};

const ENV_STREAM: u64 = 10;
const POOL_STREAM: u64 = 11;
const INIT_STREAM: u64 = 12;
const POLICY_STREAM: u64 = 13;
const FINAL_EVAL_STREAM: u64 = 14;
const DATA_STREAM: u64 = 1;

/// Train and test sets shared by every seed of a run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
}

/// Loads (or synthesizes) the data and splits it with `data.split_seed`.
pub fn prepare_data(config: &ExperimentConfig, data_dir: &Path) -> anyhow::Result<Prepared> {
    let d = &config.data;
    let full = match d.source {
        DataSource::Idx => {
            let dir = data_dir.join(&d.dir);
            load_idx(dir.join(&d.images), dir.join(&d.labels))
                .with_context(|| format!("loading IDX data from {}", dir.display()))?
        }
        DataSource::Blobs => {
            let per_class = (d.train + d.test) / d.blob_classes;
            let mut rng = SeededRng::with_stream(d.split_seed, 0);
            synthetic_blobs(d.blob_classes, d.blob_dim, per_class, d.blob_separation, &mut rng)?
        }
    };
    let wanted = d.train + d.test;
    if full.len() < wanted {
        bail!("data has {} samples but data.train + data.test = {wanted}", full.len());
    }
    let pool = full.take(full.len());
    let mut rng = SeededRng::with_stream(d.split_seed, 1);
    let (train, rest) = split_shuffle(&pool, d.train as f64 / full.len() as f64, &mut rng)?;
    Ok(Prepared {
        train: train.take(d.train),
        test: rest.take(d.test),
    })
}

/// Per-module multiply-accumulate counts of one inference, in real MACs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MacReport {
    pub modules: Vec<(String, u64)>,
}

impl MacReport {
    pub fn total(&self) -> u64 {
        self.modules.iter().map(|(_, v)| v).sum()
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.modules.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// One seed's outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    #[serde(skip)]
    pub history: Vec<MetricRow>,
    pub accuracy: f64,
    /// Spread over evaluation repeats.
    pub accuracy_std: f64,
    pub mean_power_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub config_hash: String,
    pub seeds: Vec<SeedResult>,
    pub accuracy_mean: f64,
    /// Spread over seeds.
    pub accuracy_std: f64,
    pub mean_power_w: f64,
    pub macs: MacReport,
    /// `Some(γ)` for power-controlled runs.
    pub gamma: Option<f64>,
    pub p_max_w: Option<f64>,
}

impl RunRecord {
    fn assemble(config: &ExperimentConfig, seeds: Vec<SeedResult>, macs: MacReport) -> Self {
        let n = seeds.len() as f64;
        let accuracy_mean = seeds.iter().map(|s| s.accuracy).sum::<f64>() / n;
        let accuracy_std = if seeds.len() > 1 {
            (seeds.iter().map(|s| (s.accuracy - accuracy_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mean_power_w = seeds.iter().map(|s| s.mean_power_w).sum::<f64>() / n;
        Self {
            name: config.name.clone(),
            config_hash: config.hash(),
            seeds,
            accuracy_mean,
            accuracy_std,
            mean_power_w,
            macs,
            gamma: config.power_control.as_ref().map(|p| p.gamma),
            p_max_w: config.power_control.as_ref().map(|p| dbm_to_watts(p.p_max_dbm)),
        }
    }
}

fn check(config: &ExperimentConfig, data_dir: Option<&Path>) -> anyhow::Result<()> {
    if let Err(problems) = config.validate(data_dir) {
        bail!("invalid config:\n  - {}", problems.join("\n  - "));
    }
    Ok(())
}

/// Trains and evaluates the configured model once per seed.
pub fn run(config: &ExperimentConfig, data_dir: &Path) -> anyhow::Result<RunRecord> {
    check(config, Some(data_dir))?;
    let data = prepare_data(config, data_dir)?;
    run_prepared(config, &data)
}

/// [`run`] on data that is already loaded.
pub fn run_prepared(config: &ExperimentConfig, data: &Prepared) -> anyhow::Result<RunRecord> {
    check(config, None)?;
    let seeds = config
        .seeds
        .iter()
        .map(|&seed| run_seed(config, data, seed))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let macs = mac_count(config, data.train.feature_dim(), data.train.classes())?;
    Ok(RunRecord::assemble(config, seeds, macs))
}

fn build_pool(config: &ExperimentConfig, seed: u64) -> anyhow::Result<ChannelPool<f64>> {
    let geometry = config.geometry();
    let mut env_rng = SeededRng::with_stream(seed, ENV_STREAM);
    let pool_rng = SeededRng::with_stream(seed, POOL_STREAM);
    let c = &config.channel;
    Ok(match c.model {
        FadingKind::StaticSv => {
            let env = SvEnvironment::draw(&geometry, c.scatterers, &mut env_rng)?;
            ChannelPool::fixed(env.realize()?, geometry.rx)
        }
        FadingKind::Ricean => ChannelPool::dynamic(
            ChannelModel::Ricean {
                geometry,
                factors: c.factors(),
            },
            pool_rng,
        )?,
        FadingKind::MobileSv => {
            let env = SvEnvironment::draw(&geometry, c.scatterers, &mut env_rng)?;
            ChannelPool::dynamic(ChannelModel::MobileSv { env, arena: c.arena() }, pool_rng)?
        }
    })
}

fn train_options(config: &ExperimentConfig, seed: u64) -> TrainOptions {
    let mut opts = TrainOptions::new(config.epochs, config.batch_size, config.power_w(), config.noise_var(), seed);
    opts.eval_every = config.eval_every;
    opts
}

pub fn run_seed(config: &ExperimentConfig, data: &Prepared, seed: u64) -> anyhow::Result<SeedResult> {
    let mc = config.minn_config(data.train.feature_dim(), data.train.classes());
    let mut model = MinnModel::<f64>::new(mc, &mut SeededRng::with_stream(seed, INIT_STREAM))?;
    let mut pool = build_pool(config, seed)?;
    let mut opt = config.optimizer.build(config.optimizer.lr);
    let opts = train_options(config, seed);
    let test = (config.eval_every > 0).then_some(&data.test);
    let mut eval_rng = SeededRng::with_stream(seed, FINAL_EVAL_STREAM);

    let (history, eval) = match &config.power_control {
        None => {
            let h = train(&mut model, &mut opt, &data.train, test, &mut pool, &opts)?;
            let e = evaluate(&model, None, &data.test, &pool, opts.power_w, opts.noise_var, &mut eval_rng, config.eval_repeats)?;
            (h, e)
        }
        Some(pc) => {
            let mut policy = PowerPolicy::<f64>::new(
                &pc.hidden,
                pc.gamma,
                config.channel.arena(),
                &mut SeededRng::with_stream(seed, POLICY_STREAM),
            )?;
            policy.mode = pc.scaling_mode();
            policy.p_max = dbm_to_watts(pc.p_max_dbm);
            policy.ceiling = dbm_to_watts(pc.ceiling_dbm);
            let mut policy_opt = config.optimizer.build(pc.lr);
            let schedule = Schedule {
                warmup_epochs: pc.warmup_epochs,
            };
            let h = scheduled_train(
                &mut model,
                &mut opt,
                &mut policy,
                &mut policy_opt,
                schedule,
                &data.train,
                test,
                &mut pool,
                &opts,
            )?;
            let active = config.epochs > pc.warmup_epochs;
            let e = evaluate(
                &model,
                active.then_some(&policy),
                &data.test,
                &pool,
                opts.power_w,
                opts.noise_var,
                &mut eval_rng,
                config.eval_repeats,
            )?;
            (h, e)
        }
    };
    info!(
        "{} seed {seed}: accuracy {:.4} at mean power {:.3e} W",
        config.name, eval.mean, eval.mean_power
    );
    Ok(SeedResult {
        seed,
        history: history.rows,
        accuracy: eval.mean,
        accuracy_std: eval.std,
        mean_power_w: eval.mean_power,
    })
}

/// The configured run with the metasurface removed: `y = H_D·s + n`.
pub fn baseline_no_ms(config: &ExperimentConfig, data_dir: &Path) -> anyhow::Result<RunRecord> {
    run(&no_ms_config(config), data_dir)
}

pub fn no_ms_config(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.name = format!("{}-no-ms", config.name);
    c.variant.ms_mode = MsModeChoice::None;
    c.variant.ms_type = MsTypeChoice::Ris;
    c.system.layers = 1;
    c.power_control = None;
    c
}

/// Encoder and decoder layers composed into one network with no channel
/// in between.
pub fn baseline_digital(config: &ExperimentConfig, data_dir: &Path) -> anyhow::Result<RunRecord> {
    check(config, Some(data_dir))?;
    let data = prepare_data(config, data_dir)?;
    baseline_digital_prepared(config, &data)
}

pub fn digital_widths(config: &ExperimentConfig, input_dim: usize, classes: usize) -> Vec<usize> {
    let mut w = vec![input_dim];
    w.extend(&config.network.encoder_hidden);
    w.push(2 * config.system.n_t);
    w.extend(&config.network.decoder_hidden);
    w.push(classes);
    w
}

pub fn baseline_digital_prepared(config: &ExperimentConfig, data: &Prepared) -> anyhow::Result<RunRecord> {
    check(config, None)?;
    let widths = digital_widths(config, data.train.feature_dim(), data.train.classes());
    let mut seeds = Vec::new();
    for &seed in &config.seeds {
        let mut net = Mlp::<f64>::new(&widths, Activation::Identity, &mut SeededRng::with_stream(seed, INIT_STREAM))?;
        let mut opt = config.optimizer.build(config.optimizer.lr);
        let mut data_rng = SeededRng::with_stream(seed, DATA_STREAM);
        let mut history = Vec::new();
        let mut step = 0;
        for epoch in 1..=config.epochs {
            let order = data_rng.permutation(data.train.len());
            let (mut loss_sum, mut correct) = (0.0, 0usize);
            for batch in order.chunks(config.batch_size) {
                let mut total: Option<Vec<Vec<f64>>> = None;
                for &i in batch {
                    let s = &data.train.samples()[i];
                    let logits = net.forward(&s.features)?;
                    let (ce, _) = softmax_cross_entropy(&s.one_hot(data.train.classes()), &logits)?;
                    if !ce.value.is_finite() {
                        bail!("digital baseline diverged at epoch {epoch}, step {step}");
                    }
                    loss_sum += ce.value;
                    correct += usize::from(argmax(&logits) == s.label);
                    let (_, g) = net.backward(&ce.grad)?;
                    match &mut total {
                        Some(t) => t.iter_mut().flatten().zip(g.iter().flatten()).for_each(|(a, b)| *a += b),
                        None => total = Some(g),
                    }
                }
                let mut g = total.expect("batches are non-empty");
                let inv = 1.0 / batch.len() as f64;
                g.iter_mut().flatten().for_each(|v| *v *= inv);
                opt.step(&mut net.param_slices_mut(), &g)?;
                step += 1;
            }
            let test_acc = (config.eval_every > 0 && epoch % config.eval_every == 0)
                .then(|| digital_accuracy(&net, &data.test))
                .transpose()?;
            let n = data.train.len() as f64;
            history.push(MetricRow {
                epoch,
                step,
                loss: loss_sum / n,
                train_acc: correct as f64 / n,
                test_acc,
                mean_power: 0.0,
                seed,
            });
        }
        let accuracy = digital_accuracy(&net, &data.test)?;
        info!("{} digital seed {seed}: accuracy {accuracy:.4}", config.name);
        seeds.push(SeedResult {
            seed,
            history,
            accuracy,
            accuracy_std: 0.0,
            mean_power_w: 0.0,
        });
    }
    let probe = Mlp::<f64>::new(&widths, Activation::Identity, &mut SeededRng::new(0))?;
    let macs = MacReport {
        modules: vec![("digital".into(), probe.macs())],
    };
    let mut c = config.clone();
    c.name = format!("{}-digital", config.name);
    c.power_control = None;
    Ok(RunRecord::assemble(&c, seeds, macs))
}

fn digital_accuracy(net: &Mlp<f64>, test: &Dataset<f64>) -> anyhow::Result<f64> {
    let mut correct = 0usize;
    for s in test.samples() {
        correct += usize::from(argmax(&net.apply(&s.features)?) == s.label);
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Closed-form per-module MAC counts for the configured model.
pub fn mac_count(config: &ExperimentConfig, input_dim: usize, classes: usize) -> anyhow::Result<MacReport> {
    let model = MinnModel::<f64>::new(config.minn_config(input_dim, classes), &mut SeededRng::new(0))?;
    let m = model.macs();
    let mut modules = vec![
        ("encoder".to_string(), m.encoder),
        ("channel".to_string(), m.channel),
        ("decoder".to_string(), m.decoder),
    ];
    if config.variant.ms_mode == MsModeChoice::Controllable {
        modules.push(("controller".into(), m.controller));
    }
    if let Some(pc) = &config.power_control {
        let mut w = vec![2];
        w.extend(&pc.hidden);
        w.push(1);
        let net = Mlp::<f64>::new(&w, Activation::Identity, &mut SeededRng::new(0))?;
        modules.push(("power".into(), net.macs()));
    }
    Ok(MacReport { modules })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    Elements,
    Layers,
    Gamma,
    NT,
}

impl std::str::FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "snr" => Self::Snr,
            "elements" => Self::Elements,
            "layers" => Self::Layers,
            "gamma" => Self::Gamma,
            "n_t" | "n-t" => Self::NT,
            other => bail!("unknown sweep axis {other:?}; expected snr, elements, layers, gamma or n_t"),
        })
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Snr => "snr",
            Self::Elements => "elements",
            Self::Layers => "layers",
            Self::Gamma => "gamma",
            Self::NT => "n_t",
        }
    }

    /// The config with this axis set to `value`.
    pub fn apply(&self, config: &ExperimentConfig, value: f64) -> anyhow::Result<ExperimentConfig> {
        let mut c = config.clone();
        let count = || -> anyhow::Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                bail!("{} values must be positive integers, got {value}", self.name())
            }
        };
        let has_ms = config.variant.ms_mode != MsModeChoice::None;
        match self {
            Self::Snr => c.transmit.snr_db = Some(value),
            Self::Elements if has_ms => c.system.n_m = count()?,
            Self::Layers if has_ms && config.variant.ms_type == MsTypeChoice::Sim => c.system.layers = count()?,
            Self::Gamma => match &mut c.power_control {
                Some(pc) => pc.gamma = value,
                None => bail!("the gamma axis needs a [power_control] section"),
            },
            Self::NT => c.system.n_t = count()?,
            Self::Elements => bail!("the elements axis needs a metasurface"),
            Self::Layers => bail!("the layers axis needs a SIM"),
        }
        c.name = format!("{}-{}={value}", config.name, self.name());
        Ok(c)
    }
}

/// One run per value with shared seeds and data.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[f64], data_dir: &Path) -> anyhow::Result<Vec<(f64, RunRecord)>> {
    check(config, Some(data_dir))?;
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let configs = values
        .iter()
        .map(|&v| axis.apply(config, v).map(|c| (v, c)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    for (_, c) in &configs {
        check(c, None)?;
    }
    let data = prepare_data(config, data_dir)?;
    configs
        .into_iter()
        .map(|(v, c)| Ok((v, run_prepared(&c, &data)?)))
        .collect()
}
