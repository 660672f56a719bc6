pub mod analytic;
pub mod channel;
pub mod error;
pub mod harness;
pub mod overhead;
pub mod pattern;
pub mod schemes;

pub use error::{Error, Result};
