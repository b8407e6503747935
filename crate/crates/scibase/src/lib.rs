//! Batch scientometrics engine.
//!
//! Ingests a citation corpus (Aminer-style flat records or line-delimited
//! JSON), computes per-journal influence factors (other-citation quotient,
//! international collaboration ratio, SNIP, non-local influence quotient),
//! scores journal internationality with a constrained Cobb-Douglas
//! production model, and analyzes inter-/intra-journal citation structure.

pub mod analytics;
pub mod config;
pub mod corpus;
pub mod metrics;
pub mod model;
pub mod network;
pub mod pipeline;
pub mod snip;
