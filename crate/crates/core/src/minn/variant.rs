use crate::error::{Error, Result};
use crate::metasurface::SimGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CsiMode {
    Agnostic,
    Aware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MsMode {
    /// Trainable phases frozen after training.
    Static,
    /// Phases produced per frame by a controller network from the CSI.
    Controllable,
    /// No metasurface: only the direct link carries the signal.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MsType {
    Ris,
    Sim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MinnVariant {
    pub csi: CsiMode,
    pub ms_mode: MsMode,
    pub ms_type: MsType,
}

impl MinnVariant {
    pub fn new(csi: CsiMode, ms_mode: MsMode, ms_type: MsType) -> Self {
        Self { csi, ms_mode, ms_type }
    }

    /// Every combination of the three axes plus the metasurface-free
    /// baselines.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::new();
        for csi in [CsiMode::Agnostic, CsiMode::Aware] {
            for ms_mode in [MsMode::Static, MsMode::Controllable] {
                for ms_type in [MsType::Ris, MsType::Sim] {
                    out.push(Self::new(csi, ms_mode, ms_type));
                }
            }
            out.push(Self::new(csi, MsMode::None, MsType::Ris));
        }
        out
    }

    pub fn has_ms(&self) -> bool {
        self.ms_mode != MsMode::None
    }

    pub fn label(&self) -> String {
        let csi = match self.csi {
            CsiMode::Agnostic => "agnostic",
            CsiMode::Aware => "aware",
        };
        match self.ms_mode {
            MsMode::None => format!("{csi}-no-ms"),
            MsMode::Static => format!("{csi}-static-{}", self.type_label()),
            MsMode::Controllable => format!("{csi}-controllable-{}", self.type_label()),
        }
    }

    fn type_label(&self) -> &'static str {
        match self.ms_type {
            MsType::Ris => "ris",
            MsType::Sim => "sim",
        }
    }
}

/// How trainable static phases map from raw parameters to radians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseParam {
    /// The raw value is the phase; `exp(−j·)` is 2π-periodic.
    Periodic,
    /// `2·atan(r) + π`, inside `(0, 2π)`.
    Arctan,
    /// `π·(atan(r) + 1)`, which spans roughly `(−1.79, 8.08)`.
    ArctanLiteral,
}

impl PhaseParam {
    pub fn map(&self, r: f64) -> f64 {
        match self {
            Self::Periodic => r,
            Self::Arctan => 2.0 * r.atan() + std::f64::consts::PI,
            Self::ArctanLiteral => std::f64::consts::PI * (r.atan() + 1.0),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Self::Periodic => 1.0,
            Self::Arctan => 2.0 / (1.0 + r * r),
            Self::ArctanLiteral => std::f64::consts::PI / (1.0 + r * r),
        }
    }
}

/// Sizes and variant of one end-to-end model.
#[derive(Clone, Debug, PartialEq)]
pub struct MinnConfig {
    pub variant: MinnVariant,
    pub input_dim: usize,
    pub classes: usize,
    pub n_t: usize,
    pub n_r: usize,
    /// Elements per metasurface layer.
    pub n_m: usize,
    /// Layer count; forced to 1 for a RIS.
    pub layers: usize,
    /// Layer spacing in wavelengths for a SIM.
    pub layer_spacing: f64,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    /// Widths of the CSI feature branch; the last is the feature width.
    pub csi_hidden: Vec<usize>,
    pub controller_hidden: Vec<usize>,
    pub phase_param: PhaseParam,
}

impl MinnConfig {
    pub fn new(variant: MinnVariant, input_dim: usize, classes: usize, n_t: usize, n_r: usize, n_m: usize) -> Self {
        Self {
            variant,
            input_dim,
            classes,
            n_t,
            n_r,
            n_m,
            layers: 1,
            layer_spacing: crate::metasurface::MIN_RECOMMENDED_SPACING,
            encoder_hidden: vec![64, 64],
            decoder_hidden: vec![64, 64],
            csi_hidden: vec![64, 32],
            controller_hidden: vec![64],
            phase_param: PhaseParam::Periodic,
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn with_hidden(mut self, encoder: Vec<usize>, decoder: Vec<usize>) -> Self {
        self.encoder_hidden = encoder;
        self.decoder_hidden = decoder;
        self
    }

    /// Metasurface layers actually simulated.
    pub fn effective_layers(&self) -> usize {
        match self.variant.ms_type {
            MsType::Ris => 1,
            MsType::Sim => self.layers,
        }
    }

    /// Number of tunable elements.
    pub fn phase_count(&self) -> usize {
        if self.variant.has_ms() {
            self.effective_layers() * self.n_m
        } else {
            0
        }
    }

    pub fn sim_geometry(&self) -> SimGeometry {
        SimGeometry::square(self.effective_layers(), self.n_m).with_spacing(self.layer_spacing)
    }

    pub fn csi_feature_len(&self) -> usize {
        crate::channel::feature_len(self.n_t, self.n_r, self.n_m)
    }

    /// Lists every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("n_m", self.n_m),
        ] {
            if v == 0 {
                problems.push(format!("{name} must be positive"));
            }
        }
        if self.classes < 2 {
            problems.push(format!("classes must be at least 2, got {}", self.classes));
        }
        if self.variant.ms_type == MsType::Sim && self.layers == 0 {
            problems.push("a SIM needs at least one layer".into());
        }
        if self.variant.ms_type == MsType::Sim && !(self.layer_spacing > 0.0) {
            problems.push(format!("layer spacing must be positive, got {}", self.layer_spacing));
        }
        for (name, w) in [("encoder_hidden", &self.encoder_hidden), ("decoder_hidden", &self.decoder_hidden)] {
            if w.is_empty() || w.contains(&0) {
                problems.push(format!("{name} needs at least one positive width, got {w:?}"));
            }
        }
        if self.variant.csi == CsiMode::Aware && (self.csi_hidden.is_empty() || self.csi_hidden.contains(&0)) {
            problems.push(format!("channel-aware models need csi_hidden widths, got {:?}", self.csi_hidden));
        }
        if self.variant.ms_mode == MsMode::Controllable && self.controller_hidden.contains(&0) {
            problems.push(format!("controller widths must be positive, got {:?}", self.controller_hidden));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}
