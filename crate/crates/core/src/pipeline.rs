//! Shared pipeline configuration, seed derivation, and batch feature
//! extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acs::AcsConfig;
use crate::dataset::Epoch;
use crate::features::extract_features;
use crate::forest::{FeatureMatrix, ForestParams};
use crate::Result;

/// Number of channels kept after selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelCount {
    Top(usize),
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub channels: ChannelCount,
    pub acs: AcsConfig,
    /// Classifier parameters; `class_mode` and `rng_seed` are set per stage.
    pub forest: ForestParams,
    pub seed: u64,
}

impl PipelineConfig {
    /// Top-`m` channels, `n_trees` per forest, everything else default.
    pub fn new(m: usize, n_trees: usize, seed: u64) -> Self {
        PipelineConfig {
            channels: ChannelCount::Top(m),
            acs: AcsConfig::default(),
            forest: ForestParams::default().with_trees(n_trees),
            seed,
        }
    }
}

/// Pipeline stages that draw randomness. Every stage seed is derived from
/// the single master seed via [`stage_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Acs = 1,
    ThreeClassForest = 2,
    BinaryForest = 3,
    FoldSplit = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master ^ splitmix64(stage << 32 | index))`.
pub fn stage_seed(master: u64, stage: Stage, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(((stage as u64) << 32) | (index & 0xFFFF_FFFF)))
}

/// Feature rows for `epochs` over `channels`, extracted in parallel.
pub fn feature_matrix(epochs: &[&Epoch], channels: &[usize]) -> Result<FeatureMatrix> {
    let rows = epochs
        .par_iter()
        .map(|e| extract_features(e, channels).map(|f| f.values))
        .collect::<Result<Vec<_>>>()?;
    let d = crate::features::FeatureLayout { m: channels.len() }.len();
    FeatureMatrix::new(rows.len(), d, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_seeds_differ() {
        let a = stage_seed(7, Stage::Acs, 0);
        assert_ne!(a, stage_seed(7, Stage::Acs, 1));
        assert_ne!(a, stage_seed(7, Stage::BinaryForest, 0));
        assert_ne!(a, stage_seed(8, Stage::Acs, 0));
        assert_eq!(a, stage_seed(7, Stage::Acs, 0));
    }
}
