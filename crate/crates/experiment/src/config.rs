use std::collections::HashSet;
use std::path::Path;

use minn_core::channel::{Arena, RiceanFactors, SystemGeometry};
use minn_core::minn::{CsiMode, MinnConfig, MinnVariant, MsMode, MsType, PhaseParam};
use minn_core::nn::{OptimizerKind, OptimizerState};
use minn_core::power_control::ScalingMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Full description of one experiment. Every section has defaults matching
/// the desk-scale recipe; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    /// Test-set evaluation period in epochs; 0 only evaluates at the end.
    pub eval_every: usize,
    /// Noise/channel redraws averaged in the final evaluation.
    pub eval_repeats: usize,
    pub system: SystemSection,
    pub channel: ChannelSection,
    pub transmit: TransmitSection,
    pub variant: VariantSection,
    pub network: NetworkSection,
    pub optimizer: OptimizerSection,
    pub data: DataSection,
    pub power_control: Option<PowerControlSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "desk-scale".into(),
            seeds: vec![1, 2, 3],
            epochs: 50,
            batch_size: 32,
            eval_every: 0,
            eval_repeats: 1,
            system: SystemSection::default(),
            channel: ChannelSection::default(),
            transmit: TransmitSection::default(),
            variant: VariantSection::default(),
            network: NetworkSection::default(),
            optimizer: OptimizerSection::default(),
            data: DataSection::default(),
            power_control: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_t: usize,
    pub n_r: usize,
    /// Elements per metasurface layer.
    pub n_m: usize,
    /// SIM layers; must be 1 for a RIS.
    pub layers: usize,
    /// SIM layer spacing in wavelengths.
    pub layer_spacing: f64,
    pub wavelength_m: f64,
    pub tx: [f64; 3],
    pub rx: [f64; 3],
    pub ms: [f64; 3],
}

impl Default for SystemSection {
    fn default() -> Self {
        let g = SystemGeometry::new(4, 4, 64);
        Self {
            n_t: 4,
            n_r: 4,
            n_m: 64,
            layers: 3,
            layer_spacing: minn_core::metasurface::MIN_RECOMMENDED_SPACING,
            wavelength_m: g.wavelength,
            tx: g.tx,
            rx: g.rx,
            ms: g.ms,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingKind {
    /// One frozen Saleh-Valenzuela realization for the whole run.
    StaticSv,
    /// Fresh Ricean draws on every channel use.
    Ricean,
    /// Frozen scatterers, receiver placed at random inside the arena.
    MobileSv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub model: FadingKind,
    pub scatterers: usize,
    /// TX–MS, MS–RX and TX–RX factors.
    pub k_factors_db: [f64; 3],
    pub noise_dbm: f64,
    /// Receiver region for the mobile model.
    pub arena_min: [f64; 3],
    pub arena_max: [f64; 3],
}

impl Default for ChannelSection {
    fn default() -> Self {
        let k = RiceanFactors::default();
        Self {
            model: FadingKind::StaticSv,
            scatterers: 10,
            k_factors_db: [k.tx_ms_db, k.ms_rx_db, k.tx_rx_db],
            noise_dbm: -90.0,
            arena_min: [6.0, -4.0, 0.0],
            arena_max: [14.0, 4.0, 0.0],
        }
    }
}

impl ChannelSection {
    pub fn factors(&self) -> RiceanFactors {
        RiceanFactors {
            tx_ms_db: self.k_factors_db[0],
            ms_rx_db: self.k_factors_db[1],
            tx_rx_db: self.k_factors_db[2],
        }
    }

    pub fn arena(&self) -> Arena {
        Arena {
            min: self.arena_min,
            max: self.arena_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmitSection {
    pub power_dbm: f64,
    /// Transmit SNR `P/σ²`; when set it replaces `channel.noise_dbm`.
    pub snr_db: Option<f64>,
}

impl Default for TransmitSection {
    fn default() -> Self {
        Self {
            power_dbm: 30.0,
            snr_db: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiChoice {
    Agnostic,
    Aware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MsModeChoice {
    Static,
    Controllable,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MsTypeChoice {
    Ris,
    Sim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseParamChoice {
    Periodic,
    Arctan,
    ArctanLiteral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantSection {
    pub csi: CsiChoice,
    pub ms_mode: MsModeChoice,
    pub ms_type: MsTypeChoice,
    pub phase_param: PhaseParamChoice,
}

impl Default for VariantSection {
    fn default() -> Self {
        Self {
            csi: CsiChoice::Agnostic,
            ms_mode: MsModeChoice::Static,
            ms_type: MsTypeChoice::Sim,
            phase_param: PhaseParamChoice::Periodic,
        }
    }
}

impl VariantSection {
    pub fn variant(&self) -> MinnVariant {
        MinnVariant::new(
            match self.csi {
                CsiChoice::Agnostic => CsiMode::Agnostic,
                CsiChoice::Aware => CsiMode::Aware,
            },
            match self.ms_mode {
                MsModeChoice::Static => MsMode::Static,
                MsModeChoice::Controllable => MsMode::Controllable,
                MsModeChoice::None => MsMode::None,
            },
            match self.ms_type {
                MsTypeChoice::Ris => MsType::Ris,
                MsTypeChoice::Sim => MsType::Sim,
            },
        )
    }

    pub fn phase_param(&self) -> PhaseParam {
        match self.phase_param {
            PhaseParamChoice::Periodic => PhaseParam::Periodic,
            PhaseParamChoice::Arctan => PhaseParam::Arctan,
            PhaseParamChoice::ArctanLiteral => PhaseParam::ArctanLiteral,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub csi_hidden: Vec<usize>,
    pub controller_hidden: Vec<usize>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            encoder_hidden: vec![64, 64],
            decoder_hidden: vec![64, 64],
            csi_hidden: vec![64, 32],
            controller_hidden: vec![64],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerChoice {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub kind: OptimizerChoice,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            kind: OptimizerChoice::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerSection {
    pub fn build(&self, lr: f64) -> OptimizerState<f64> {
        let kind = match self.kind {
            OptimizerChoice::Sgd => OptimizerKind::Sgd,
            OptimizerChoice::Adam => OptimizerKind::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
        };
        OptimizerState::new(kind, lr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// IDX image/label files.
    Idx,
    /// Gaussian clusters, for quick checks without files.
    Blobs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub source: DataSource,
    /// Directory of the IDX files, relative to the data directory.
    pub dir: String,
    pub images: String,
    pub labels: String,
    pub train: usize,
    pub test: usize,
    /// Seed of the train/test split, shared by every run seed.
    pub split_seed: u64,
    pub blob_classes: usize,
    pub blob_dim: usize,
    pub blob_separation: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: DataSource::Idx,
            dir: "mnist10k".into(),
            images: "images.idx3-ubyte".into(),
            labels: "labels.idx1-ubyte".into(),
            train: 8000,
            test: 2000,
            split_seed: 0,
            blob_classes: 4,
            blob_dim: 16,
            blob_separation: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingChoice {
    AmplitudeLiteral,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerControlSection {
    pub gamma: f64,
    pub warmup_epochs: usize,
    pub hidden: Vec<usize>,
    pub scaling: ScalingChoice,
    /// Average-power target reported as constraint satisfaction.
    pub p_max_dbm: f64,
    pub ceiling_dbm: f64,
    pub lr: f64,
}

impl Default for PowerControlSection {
    fn default() -> Self {
        Self {
            gamma: 1e-2,
            warmup_epochs: minn_core::power_control::DEFAULT_WARMUP_EPOCHS,
            hidden: vec![32, 32],
            scaling: ScalingChoice::AmplitudeLiteral,
            p_max_dbm: 30.0,
            ceiling_dbm: 40.0,
            lr: 1e-3,
        }
    }
}

impl PowerControlSection {
    pub fn scaling_mode(&self) -> ScalingMode {
        match self.scaling {
            ScalingChoice::AmplitudeLiteral => ScalingMode::AmplitudeLiteral,
            ScalingChoice::Power => ScalingMode::Power,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn minn_config(&self, input_dim: usize, classes: usize) -> MinnConfig {
        let s = &self.system;
        let mut c = MinnConfig::new(self.variant.variant(), input_dim, classes, s.n_t, s.n_r, s.n_m)
            .with_layers(s.layers)
            .with_hidden(self.network.encoder_hidden.clone(), self.network.decoder_hidden.clone());
        c.layer_spacing = s.layer_spacing;
        c.csi_hidden = self.network.csi_hidden.clone();
        c.controller_hidden = self.network.controller_hidden.clone();
        c.phase_param = self.variant.phase_param();
        c
    }

    pub fn geometry(&self) -> SystemGeometry {
        let s = &self.system;
        let mut g = SystemGeometry::new(s.n_t, s.n_r, s.n_m);
        g.wavelength = s.wavelength_m;
        g.tx = s.tx;
        g.rx = s.rx;
        g.ms = s.ms;
        g
    }

    pub fn power_w(&self) -> f64 {
        minn_core::channel::dbm_to_watts(self.transmit.power_dbm)
    }

    pub fn noise_var(&self) -> f64 {
        match self.transmit.snr_db {
            Some(snr) => self.power_w() / minn_core::channel::db_to_linear(snr),
            None => minn_core::channel::dbm_to_watts(self.channel.noise_dbm),
        }
    }

    /// Every problem with the config, or `Ok` if none. File references are
    /// resolved against `data_dir` when one is given.
    pub fn validate(&self, data_dir: Option<&Path>) -> Result<(), Vec<String>> {
        let mut p = Vec::new();
        if self.seeds.is_empty() {
            p.push("seeds must list at least one seed".to_string());
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            p.push(format!("seeds must be distinct, got {:?}", self.seeds));
        }
        if self.batch_size == 0 {
            p.push("batch_size must be at least 1".into());
        }
        if self.eval_repeats == 0 {
            p.push("eval_repeats must be at least 1".into());
        }

        let s = &self.system;
        for (name, v) in [("system.n_t", s.n_t), ("system.n_r", s.n_r), ("system.n_m", s.n_m)] {
            if v == 0 {
                p.push(format!("{name} must be positive"));
            }
        }
        let v = self.variant.variant();
        match self.variant.ms_type {
            MsTypeChoice::Ris if v.has_ms() && s.layers != 1 => {
                p.push(format!("a RIS has exactly one layer, got system.layers = {}", s.layers))
            }
            MsTypeChoice::Sim if s.layers == 0 => p.push("system.layers must be positive for a SIM".into()),
            _ => {}
        }
        if !(s.layer_spacing > 0.0) {
            p.push(format!("system.layer_spacing must be positive, got {}", s.layer_spacing));
        }
        if !(s.wavelength_m > 0.0) {
            p.push(format!("system.wavelength_m must be positive, got {}", s.wavelength_m));
        }
        if s.tx == s.rx || s.tx == s.ms || s.ms == s.rx {
            p.push("system.tx, system.rx and system.ms must be distinct points".into());
        }

        let c = &self.channel;
        if matches!(c.model, FadingKind::StaticSv | FadingKind::MobileSv) && c.scatterers == 0 {
            p.push("channel.scatterers must be positive for Saleh-Valenzuela fading".into());
        }
        if c.k_factors_db.iter().any(|k| !k.is_finite()) {
            p.push(format!("channel.k_factors_db must be finite, got {:?}", c.k_factors_db));
        }
        if !c.noise_dbm.is_finite() {
            p.push(format!("channel.noise_dbm must be finite, got {}", c.noise_dbm));
        }
        if c.model == FadingKind::MobileSv && (0..2).any(|i| !(c.arena_min[i] < c.arena_max[i])) {
            p.push(format!(
                "channel.arena_min must lie below channel.arena_max in x and y, got {:?} and {:?}",
                c.arena_min, c.arena_max
            ));
        }
        if !self.transmit.power_dbm.is_finite() {
            p.push(format!("transmit.power_dbm must be finite, got {}", self.transmit.power_dbm));
        }
        if self.transmit.snr_db.is_some_and(|v| !v.is_finite()) {
            p.push("transmit.snr_db must be finite".into());
        }

        let n = &self.network;
        for (name, w) in [("network.encoder_hidden", &n.encoder_hidden), ("network.decoder_hidden", &n.decoder_hidden)] {
            if w.is_empty() || w.contains(&0) {
                p.push(format!("{name} needs at least one positive width, got {w:?}"));
            }
        }
        if self.variant.csi == CsiChoice::Aware && (n.csi_hidden.is_empty() || n.csi_hidden.contains(&0)) {
            p.push(format!("channel-aware variants need positive network.csi_hidden widths, got {:?}", n.csi_hidden));
        }
        if self.variant.ms_mode == MsModeChoice::Controllable
            && (n.controller_hidden.is_empty() || n.controller_hidden.contains(&0))
        {
            p.push(format!(
                "controllable variants need positive network.controller_hidden widths, got {:?}",
                n.controller_hidden
            ));
        }

        let o = &self.optimizer;
        if !(o.lr >= 0.0 && o.lr.is_finite()) {
            p.push(format!("optimizer.lr must be non-negative, got {}", o.lr));
        }
        if o.kind == OptimizerChoice::Adam {
            if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
                p.push(format!("optimizer betas must lie in [0, 1), got {} and {}", o.beta1, o.beta2));
            }
            if !(o.eps > 0.0) {
                p.push(format!("optimizer.eps must be positive, got {}", o.eps));
            }
        }

        let d = &self.data;
        if d.train == 0 || d.test == 0 {
            p.push(format!("data.train and data.test must be positive, got {} and {}", d.train, d.test));
        }
        match d.source {
            DataSource::Idx => {
                if let Some(root) = data_dir {
                    for f in [&d.images, &d.labels] {
                        let path = root.join(&d.dir).join(f);
                        if !path.is_file() {
                            p.push(format!("data file {} does not exist", path.display()));
                        }
                    }
                }
            }
            DataSource::Blobs => {
                if d.blob_classes < 2 || d.blob_dim == 0 || !(d.blob_separation > 0.0) {
                    p.push("blob data needs at least 2 classes, a positive dimension and a positive separation".into());
                }
                if (d.train + d.test) % d.blob_classes.max(1) != 0 {
                    p.push(format!(
                        "data.train + data.test must be a multiple of data.blob_classes ({})",
                        d.blob_classes
                    ));
                }
            }
        }

        if let Some(pc) = &self.power_control {
            if !(pc.gamma >= 0.0 && pc.gamma.is_finite()) {
                p.push(format!("power_control.gamma must be non-negative, got {}", pc.gamma));
            }
            if pc.hidden.contains(&0) {
                p.push(format!("power_control.hidden widths must be positive, got {:?}", pc.hidden));
            }
            if !(pc.ceiling_dbm.is_finite() && pc.p_max_dbm.is_finite()) {
                p.push("power_control.ceiling_dbm and p_max_dbm must be finite".into());
            }
            if !(pc.lr >= 0.0 && pc.lr.is_finite()) {
                p.push(format!("power_control.lr must be non-negative, got {}", pc.lr));
            }
        }

        if p.is_empty() {
            Ok(())
        } else {
            Err(p)
        }
    }
}
