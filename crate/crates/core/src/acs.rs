//! Automatic channel selection.
//!
//! Each epoch becomes an `N × 30` matrix of log10 FFT magnitudes at 1..=30 Hz
//! on the raw signal. Every one of the `N·30` bins is a scalar feature for
//! one or more tree-ensemble classifiers trained on seizure vs. interictal
//! labels; a channel's importance is the sum over its 30 bins, and across
//! classifiers. Inter-channel correlation is deliberately not used here, so
//! importance can be attributed to single channels.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Epoch};
use crate::eval::{two_fold_cv_with, ChannelPlan};
use crate::features::log_power_bins;
use crate::forest::{self, ClassMode, FeatureMatrix, ForestParams};
use crate::pipeline::{stage_seed, PipelineConfig, Stage};
use crate::{Error, Result};

pub const ACS_BAND_HZ: (usize, usize) = (1, 30);

/// A classifier that scores per-feature importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImportanceProvider {
    RandomForest { params: ForestParams },
}

impl ImportanceProvider {
    /// Random Forest with 300 trees and split-frequency importance.
    pub fn default_forest() -> Self {
        ImportanceProvider::RandomForest {
            params: ForestParams::default().with_trees(300),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ImportanceProvider::RandomForest { params } => {
                format!("random_forest(n_trees={})", params.n_trees)
            }
        }
    }

    /// Normalized per-feature importance for binary targets.
    pub fn feature_importance(
        &self,
        x: &FeatureMatrix,
        y: &[usize],
        seed: u64,
    ) -> Result<Vec<f64>> {
        match self {
            ImportanceProvider::RandomForest { params } => {
                let params = params.clone().with_seed(seed).with_mode(ClassMode::Binary);
                Ok(forest::train(x, y, &params)?.feature_importance())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsConfig {
    pub providers: Vec<ImportanceProvider>,
    pub band_hz: (usize, usize),
    pub rng_seed: u64,
}

impl Default for AcsConfig {
    fn default() -> Self {
        AcsConfig {
            providers: vec![ImportanceProvider::default_forest()],
            band_hz: ACS_BAND_HZ,
            rng_seed: 0,
        }
    }
}

impl AcsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.providers.is_empty() {
            return Err(Error::config(
                "acs.providers",
                "at least one provider is required",
            ));
        }
        Ok(())
    }
}

/// Channel importance and the derived order (descending importance, ties
/// to the lower channel index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRanking {
    pub subject_id: String,
    pub importance: Vec<f64>,
    pub order: Vec<usize>,
    pub providers: Vec<String>,
    pub seed: u64,
}

impl ChannelRanking {
    pub fn from_importance(
        subject_id: impl Into<String>,
        importance: Vec<f64>,
        providers: Vec<String>,
        seed: u64,
    ) -> Self {
        let mut order: Vec<usize> = (0..importance.len()).collect();
        order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
        ChannelRanking {
            subject_id: subject_id.into(),
            importance,
            order,
            providers,
            seed,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.order.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("ranking serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: ChannelRanking = serde_json::from_str(&text)
            .map_err(|e| Error::data(path, format!("bad ranking file: {e}")))?;
        let mut seen = vec![false; r.order.len()];
        let is_perm = r.importance.len() == r.order.len()
            && r.order
                .iter()
                .all(|&c| c < seen.len() && !std::mem::replace(&mut seen[c], true));
        if !is_perm {
            return Err(Error::data(
                path,
                "order is not a permutation of the channels",
            ));
        }
        Ok(r)
    }
}

/// `N × 30` log-magnitude matrix (row per channel) at the epoch's native rate,
/// flattened row-major.
pub fn acs_matrix(epoch: &Epoch) -> Result<Vec<f64>> {
    acs_matrix_band(epoch, ACS_BAND_HZ)
}

fn acs_matrix_band(epoch: &Epoch, (lo, hi): (usize, usize)) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(epoch.n_channels() * (hi - lo + 1));
    for c in 0..epoch.n_channels() {
        out.extend(log_power_bins(&epoch.channel_f64(c), epoch.fs(), lo, hi)?.bins);
    }
    Ok(out)
}

/// Ranks channels using labelled training epochs only.
pub fn rank_channels(
    subject_id: &str,
    train: &[&Epoch],
    config: &AcsConfig,
) -> Result<ChannelRanking> {
    config.validate()?;
    let (lo, hi) = config.band_hz;
    let n_bins = hi.checked_sub(lo).map(|d| d + 1).unwrap_or(0);
    let labelled: Vec<(&Epoch, usize)> = train
        .iter()
        .filter_map(|e| e.label.class3().map(|c| (*e, usize::from(c.is_seizure()))))
        .collect();
    let n_channels = labelled
        .first()
        .map(|(e, _)| e.n_channels())
        .ok_or_else(|| Error::input("channel selection needs labelled training epochs"))?;
    if labelled.iter().any(|(e, _)| e.n_channels() != n_channels) {
        return Err(Error::input("training epochs disagree on channel count"));
    }
    let y: Vec<usize> = labelled.iter().map(|(_, c)| *c).collect();
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::input(
            "channel selection needs both seizure and interictal training epochs",
        ));
    }
    let rows = labelled
        .par_iter()
        .map(|(e, _)| acs_matrix_band(e, config.band_hz))
        .collect::<Result<Vec<_>>>()?;
    let x = FeatureMatrix::new(rows.len(), n_channels * n_bins, rows.concat())?;

    let mut importance = vec![0.0; n_channels];
    for (p, provider) in config.providers.iter().enumerate() {
        let seed = stage_seed(config.rng_seed, Stage::Acs, p as u64);
        let fi = provider.feature_importance(&x, &y, seed)?;
        for (c, imp) in importance.iter_mut().enumerate() {
            *imp += fi[c * n_bins..(c + 1) * n_bins].iter().sum::<f64>();
        }
    }
    Ok(ChannelRanking::from_importance(
        subject_id,
        importance,
        config
            .providers
            .iter()
            .map(ImportanceProvider::name)
            .collect(),
        config.rng_seed,
    ))
}

/// The first `m` channels of the ranking.
pub fn select_top(ranking: &ChannelRanking, m: usize) -> Result<Vec<usize>> {
    let n = ranking.n_channels();
    if m == 0 || m > n {
        return Err(Error::input(format!("M = {m} is outside 1..={n}")));
    }
    Ok(ranking.order[..m].to_vec())
}

/// Stored top-M channel list, reused by later stages without re-running
/// selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSelection {
    pub subject_id: String,
    pub m: usize,
    pub channels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<MSweep>,
}

impl ChannelSelection {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("selection serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: ChannelSelection = serde_json::from_str(&text)
            .map_err(|e| Error::data(path, format!("bad channels file: {e}")))?;
        if s.channels.len() != s.m || s.m == 0 {
            return Err(Error::data(path, "channel list length does not match m"));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSweep {
    pub chosen: usize,
    pub best_auc: f64,
    pub points: Vec<SweepPoint>,
}

/// AUC drop from the best that is still acceptable when choosing M.
pub const M_AUC_TOLERANCE: f64 = 0.01;

/// Candidate channel counts: 1, 2, 4, 8, then steps of 4 up to 16, then
/// steps of 8, always ending with `n`.
pub fn default_m_grid(n: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut m = 1;
    while m < n {
        grid.push(m);
        m = match m {
            1..=4 => m * 2,
            8..=15 => m + 4,
            _ => m + 8,
        };
    }
    grid.push(n);
    grid
}

/// Smallest `m` whose AUC is at least `best − 0.01`.
pub fn choose_m(points: &[SweepPoint]) -> Result<usize> {
    let best = points
        .iter()
        .map(|p| p.auc)
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::input("empty or non-finite AUC sweep"));
    }
    // A hair of slack so that e.g. 0.96 − 0.01 admits 0.95 despite rounding.
    let floor = best - M_AUC_TOLERANCE - 1e-12;
    points
        .iter()
        .filter(|p| p.auc >= floor)
        .map(|p| p.m)
        .min()
        .ok_or_else(|| Error::input("no sweep point meets the AUC floor"))
}

/// Sweeps the number of channels over `grid`, scoring each by 2-fold CV
/// combined AUC on `train` with the fixed `ranking`, and applies
/// [`choose_m`].
pub fn optimize_m(
    train: &Dataset,
    ranking: &ChannelRanking,
    config: &PipelineConfig,
    grid: &[usize],
) -> Result<MSweep> {
    let mut points = Vec::with_capacity(grid.len());
    for &m in grid {
        let channels = select_top(ranking, m)?;
        let report = two_fold_cv_with(train, config, &ChannelPlan::Fixed(channels))?;
        points.push(SweepPoint { m, auc: report.auc });
    }
    let chosen = choose_m(&points)?;
    let best_auc = points
        .iter()
        .map(|p| p.auc)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MSweep {
        chosen,
        best_auc,
        points,
    })
}
