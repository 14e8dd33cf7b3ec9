//! End-to-end learned transmission through metasurface-shaped wireless
//! channels. Generic over `f32`/`f64`; the aliases below fix `f64`.

pub mod channel;
pub mod data;
pub mod error;
pub mod metasurface;
pub mod minn;
pub mod nn;
pub mod numeric;
pub mod power_control;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = numeric::ComplexMatrix<f64>;
pub type Vector = numeric::ComplexVector<f64>;
pub type State = channel::ChannelState<f64>;
pub type Pool = channel::ChannelPool<f64>;
pub type Model = minn::MinnModel<f64>;
pub type Policy = power_control::PowerPolicy<f64>;
pub type Data = data::Dataset<f64>;
pub type Optimizer = nn::OptimizerState<f64>;
