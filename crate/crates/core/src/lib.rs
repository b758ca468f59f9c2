//! Seizure detection on intracranial EEG with automatic channel selection.
//!
//! The pipeline works on labelled 1-s multi-channel epochs:
//!
//! ```text
//! epochs (N channels)
//!   ├─ acs::rank_channels     N×30 log-power bins → tree-ensemble importance → channel order
//!   ├─ acs::select_top        keep the top M channels (stored once per subject)
//!   ├─ features::extract      1–47 Hz log power, spectral eigenvalues,
//!   │                         400 Hz correlation upper triangle + eigenvalues
//!   ├─ forest::RandomForest   3-class (interictal / ictal / early) and binary models
//!   └─ eval                   AUC_S / AUC_E, SEN/SPE at a balanced threshold,
//!                             onset delay, 2-fold CV, timing benchmark
//! ```
//!
//! A synthetic generator with planted seizure channels ([`dataset::synth`])
//! stands in for real recordings in tests and demos.

pub mod acs;
pub mod cli;
pub mod dataset;
pub mod eigen;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod pipeline;

pub use error::{Error, Result};
