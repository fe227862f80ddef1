//! Allocation-only core of the patient-to-trial matching engine.
//!
//! Everything in this crate is a pure function of its inputs: text
//! segmentation, lexical and dense ranking, keyword fusion, prompt
//! construction and response parsing for criterion-level matching,
//! trial-level aggregation, ranking metrics and the screening-study
//! bookkeeping. File formats, the HTTP client, caching and the CLI live in
//! the `trialmatch` crate, which enables the `std` feature.
//!
//! The LLM is reached through the [`gateway::Completion`] trait so that the
//! stages that need a model (keyword generation, criterion matching, LLM
//! aggregation) stay in this crate without pulling in any IO.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod gateway;
pub mod matching;
pub mod ranking;
pub mod retrieval;
pub mod screening;
mod util;

pub use error::{Error, Result};
