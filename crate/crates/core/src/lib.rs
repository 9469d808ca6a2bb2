pub mod accelerator;
pub mod cli;
pub mod config;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod gates;
pub mod keccak;
pub mod metrics;
pub mod vectors;

pub use error::{Error, Result};
