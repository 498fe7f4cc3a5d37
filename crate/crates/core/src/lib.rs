//! Mouse-tracking measures of inhibitory control and delay discounting.
//!
//! The crate covers the analysis path from raw pointer logs to group
//! statistics: per-trial trajectory features ([`trajectory`]), per-subject
//! task metrics ([`metrics`], [`discounting`]), group-level tests
//! ([`stats`]), a seeded synthetic participant generator ([`simulator`]) and
//! file formats, the upload server and the pipeline driver.

pub mod analysis;
pub mod collect;
pub mod discounting;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod session;
pub mod simulator;
pub mod stats;
pub mod trajectory;
