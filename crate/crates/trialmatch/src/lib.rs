//! Standard-library side of the trial matching engine: corpus and artifact
//! file formats, the caching LLM gateway with its remote and mock backends,
//! the stage runner behind the CLI, a synthetic cohort generator and the
//! HTTP API used by the screening interface.

pub mod config;
pub mod error;
pub mod formats;
pub mod gateway;
pub mod pipeline;
pub mod server;
pub mod synth;

pub use config::Config;
pub use error::{Error, Result};
pub use trialmatch_core as core;
