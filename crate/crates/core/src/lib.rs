pub mod arima;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod mlp;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod series;
pub mod svr;
pub mod synthetic;
pub mod vmd;

pub use error::{Error, Result};
