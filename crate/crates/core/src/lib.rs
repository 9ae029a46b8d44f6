//! Dual-view protocol DSL: synthesis from a protocol corpus, reciprocative
//! verification of designed plans, and consistency metrics.

pub mod designer;
pub mod dsl;
pub mod function;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod product;
pub mod store;
pub mod verify;

pub use model::*;
