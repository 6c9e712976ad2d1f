//! Experiment harness around `opad-core`: configuration, seeded
//! multi-chain runs with KL traces, cross-chain summaries, and SVG plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod summary;
