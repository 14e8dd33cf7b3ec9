//! Metasurface-integrated neural network: a learned encoder, a physical
//! channel shaped by metasurface phases, and a learned decoder, trained end
//! to end through the channel.

mod branch;
mod channel_layer;
mod model;
mod train;
mod variant;

pub use branch::BranchNet;
pub use channel_layer::{
    channel_layer_backward, channel_layer_forward, input_jacobian, jacobian_response_gradient, phase_gradient,
    ris_phase_jacobian, sim_layer_jacobian, ChannelGrads, ChannelTape,
};
pub use model::{
    normalize_backward, power_normalize, ForwardTape, MacBreakdown, MinnModel, ModelGrads, ModelParams, Noise,
    TxScaling,
};
pub use train::{evaluate, scheduled_train, train, EvalResult, History, MetricRow, Schedule, TrainOptions};
pub use variant::{CsiMode, MinnConfig, MinnVariant, MsMode, MsType, PhaseParam};
