//! Benchmark harness comparing how multimodal models understand time
//! series presented as text versus rendered plots.
//!
//! Pipeline: [`synthgen`] and [`imupipe`] produce task instances,
//! [`tscodec`] and [`plotrender`] turn them into text and images,
//! [`promptkit`] assembles prompts and parses answers, [`modelgw`] calls
//! model backends, [`evalstats`] scores the results and [`runner`] drives
//! the whole matrix from a config file.

pub mod error;
pub mod evalstats;
mod fsutil;
pub mod imupipe;
pub mod modelgw;
pub mod par;
pub mod plotrender;
pub mod promptkit;
pub mod rng;
pub mod runner;
pub mod synthgen;
pub mod tscodec;

pub use error::{Error, Result};
