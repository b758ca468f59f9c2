//! Single-threaded wall-clock comparison of the full-channel pipeline and
//! the reduced one.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acs::{rank_channels, select_top, AcsConfig};
use crate::dataset::{Dataset, Epoch};
use crate::forest::{self, ClassMode, ForestParams};
use crate::pipeline::{feature_matrix, stage_seed, PipelineConfig, Stage};
use crate::{Error, Result};

pub const TIMED_RUNS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub subject_id: String,
    pub n_epochs: usize,
    pub n_channels: usize,
    pub m: usize,
    /// One-off ranking cost; not part of `improvement`.
    pub acs_time_s: f64,
    pub feature_time_s: f64,
    pub training_time_s: f64,
    pub baseline_feature_time_s: f64,
    pub baseline_training_time_s: f64,
    pub improvement: f64,
    pub threads: usize,
    pub runs: usize,
}

/// `1 − (features + training) / (baseline features + baseline training)`.
pub fn processing_time_improvement(
    baseline_feature_s: f64,
    baseline_training_s: f64,
    feature_s: f64,
    training_s: f64,
) -> f64 {
    1.0 - (feature_s + training_s) / (baseline_feature_s + baseline_training_s)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// One timed pass: feature extraction, then 3-class training.
fn time_once(
    epochs: &[&Epoch],
    y: &[usize],
    channels: &[usize],
    params: &ForestParams,
) -> Result<(f64, f64)> {
    let t = Instant::now();
    let x = feature_matrix(epochs, channels)?;
    let tf = t.elapsed().as_secs_f64();
    let t = Instant::now();
    std::hint::black_box(forest::train(&x, y, params)?);
    Ok((tf, t.elapsed().as_secs_f64()))
}

/// Times feature extraction plus 3-class training on every labelled epoch,
/// with all channels and with the top `m` channels, on one thread.
pub fn benchmark(dataset: &Dataset, m: usize, cfg: &PipelineConfig) -> Result<TimingReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::input(format!("cannot build thread pool: {e}")))?;
    pool.install(|| {
        let labelled = dataset.labelled();
        let epochs: Vec<&Epoch> = labelled.iter().map(|&(i, _)| &dataset.epochs[i]).collect();
        let y: Vec<usize> = labelled.iter().map(|&(_, c)| c.index()).collect();

        let t = Instant::now();
        let acs = AcsConfig {
            rng_seed: stage_seed(cfg.seed, Stage::Acs, 0),
            ..cfg.acs.clone()
        };
        let ranking = rank_channels(dataset.subject_id(), &epochs, &acs)?;
        let channels = select_top(&ranking, m)?;
        let acs_time_s = t.elapsed().as_secs_f64();

        let all: Vec<usize> = (0..dataset.n_channels()).collect();
        let params = cfg
            .forest
            .clone()
            .with_mode(ClassMode::ThreeClass)
            .with_seed(stage_seed(cfg.seed, Stage::ThreeClassForest, 0));
        // Arms alternate, and swap order every run, so drift in machine
        // state hits both equally. Run 0 is a warm-up.
        let arms = [&all, &channels];
        let mut times = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
        for run in 0..=TIMED_RUNS {
            let order = if run % 2 == 0 { [0, 1] } else { [1, 0] };
            for arm in order {
                let (tf, tt) = time_once(&epochs, &y, arms[arm], &params)?;
                if run > 0 {
                    times[arm][0].push(tf);
                    times[arm][1].push(tt);
                }
            }
        }
        let [[bf, bt], [rf, rt]] = times.map(|arm| arm.map(median));
        Ok(TimingReport {
            subject_id: dataset.subject_id().to_string(),
            n_epochs: epochs.len(),
            n_channels: dataset.n_channels(),
            m,
            acs_time_s,
            feature_time_s: rf,
            training_time_s: rt,
            baseline_feature_time_s: bf,
            baseline_training_time_s: bt,
            improvement: processing_time_improvement(bf, bt, rf, rt),
            threads: 1,
            runs: TIMED_RUNS,
        })
    })
}
