//! Ego-network dynamics over personal call records.
//!
//! The pipeline slices a call log into observation intervals, builds each
//! ego's per-interval network, and measures how communication patterns move
//! over time: social-signature persistence (Jensen-Shannon divergence
//! between rank-ordered call distributions), alter turnover (Jaccard
//! similarity of alter sets), and rank-transition dynamics with a stability
//! score. Egos can be split into trait subgroups and compared with
//! nonparametric tests; a seeded generator produces synthetic datasets with
//! known ground truth for validating the whole chain.

pub mod error;
pub mod ingest;
pub mod metrics;
pub mod rank_dynamics;
pub mod signatures;
pub mod stats;
pub mod synth;
pub mod turnover;
pub mod types;

pub use error::{Error, Result};
