pub mod conditioning;
pub mod dataset;
pub mod error;
pub mod feature_select;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod transforms;

pub use error::{Error, Result};
