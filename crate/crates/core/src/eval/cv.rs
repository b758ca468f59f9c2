//! Two-fold cross-validation split by seizure.
//!
//! Seizures are sorted by id; the first ⌈S/2⌉ form half A and the rest half
//! B. Interictal epochs are shuffled with a seeded RNG and halved the same
//! way. Fold 1 trains on A and validates on B, fold 2 swaps them. Channel
//! selection, both forests, and the threshold use the training half only.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{
    combined_roc, detection_delay, select_threshold, sen_spe, CombinedAuc, RocCurve, SeizureDelay,
    SeizureScores,
};
use crate::acs::{rank_channels, select_top, AcsConfig};
use crate::dataset::{ClassLabel3, Dataset, Epoch, Label};
use crate::forest::{self, BinaryLabel, ClassMode};
use crate::pipeline::{feature_matrix, stage_seed, ChannelCount, PipelineConfig, Stage};
use crate::{Error, Result};

/// How each fold picks its channels.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelPlan {
    /// Rank on the fold's training half and keep the top `m`.
    Acs {
        m: usize,
    },
    Fixed(Vec<usize>),
    All,
}

impl ChannelPlan {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        match cfg.channels {
            ChannelCount::Top(m) => ChannelPlan::Acs { m },
            ChannelCount::All => ChannelPlan::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub train_seizures: Vec<String>,
    pub validation_seizures: Vec<String>,
}

/// The two folds of the protocol. Unlabelled epochs are left out.
pub fn fold_splits(dataset: &Dataset, seed: u64) -> Result<[FoldSplit; 2]> {
    let seizures = dataset.seizures();
    if seizures.len() < 2 {
        return Err(Error::input(format!(
            "cross-validation needs at least 2 seizures, found {}",
            seizures.len()
        )));
    }
    let mut interictal = dataset.interictal();
    if interictal.len() < 2 {
        return Err(Error::input(
            "cross-validation needs at least 2 interictal epochs",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, Stage::FoldSplit, 0));
    interictal.shuffle(&mut rng);

    let sa = seizures.len().div_ceil(2);
    let ia = interictal.len().div_ceil(2);
    let half = |runs: &[crate::dataset::SeizureRun], inter: &[usize]| {
        let mut idx: Vec<usize> = runs.iter().flat_map(|r| r.epochs.iter().copied()).collect();
        idx.extend_from_slice(inter);
        idx.sort_unstable();
        let ids = runs
            .iter()
            .map(|r| r.seizure_id.clone())
            .collect::<Vec<_>>();
        (idx, ids)
    };
    let (a, a_ids) = half(&seizures[..sa], &interictal[..ia]);
    let (b, b_ids) = half(&seizures[sa..], &interictal[ia..]);
    Ok([
        FoldSplit {
            train: a.clone(),
            validation: b.clone(),
            train_seizures: a_ids.clone(),
            validation_seizures: b_ids.clone(),
        },
        FoldSplit {
            train: b,
            validation: a,
            train_seizures: b_ids,
            validation_seizures: a_ids,
        },
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_seizures: Vec<String>,
    pub validation_seizures: Vec<String>,
    pub n_train: usize,
    pub n_validation: usize,
    pub channels: Vec<usize>,
    pub auc_s: f64,
    pub auc_e: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
    pub delays: Vec<SeizureDelay>,
    pub missed_seizures: usize,
    pub mean_delay_s: Option<f64>,
    #[serde(skip)]
    pub roc_s: Option<RocCurve>,
    #[serde(skip)]
    pub roc_e: Option<RocCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub subject_id: String,
    pub auc_s: f64,
    pub auc_e: f64,
    /// Always `(auc_s + auc_e) / 2`.
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
    pub per_seizure_delays_s: Vec<SeizureDelay>,
    pub missed_seizures: usize,
    pub mean_delay_s: Option<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub folds: Vec<FoldReport>,
}

impl EvalReport {
    /// Arithmetic mean of the fold metrics; the combined AUC is recomputed
    /// from the averaged AUC_S and AUC_E.
    pub fn from_folds(subject_id: &str, seed: u64, folds: Vec<FoldReport>) -> Self {
        let k = folds.len() as f64;
        let mean = |f: fn(&FoldReport) -> f64| folds.iter().map(f).sum::<f64>() / k;
        let combined = CombinedAuc::new(mean(|f| f.auc_s), mean(|f| f.auc_e));
        let fold_delays: Vec<f64> = folds.iter().filter_map(|f| f.mean_delay_s).collect();
        EvalReport {
            subject_id: subject_id.to_string(),
            auc_s: combined.auc_s,
            auc_e: combined.auc_e,
            auc: combined.auc,
            sensitivity: mean(|f| f.sensitivity),
            specificity: mean(|f| f.specificity),
            threshold: mean(|f| f.threshold),
            per_seizure_delays_s: folds.iter().flat_map(|f| f.delays.clone()).collect(),
            missed_seizures: folds.iter().map(|f| f.missed_seizures).sum(),
            mean_delay_s: (!fold_delays.is_empty())
                .then(|| fold_delays.iter().sum::<f64>() / fold_delays.len() as f64),
            seed,
            config_hash: None,
            folds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn labels3(epochs: &[&Epoch]) -> Vec<ClassLabel3> {
    epochs
        .iter()
        .map(|e| e.label.class3().expect("split holds labelled epochs only"))
        .collect()
}

/// Runs one fold: channel selection, 3-class forest for the AUCs, binary
/// forest for threshold, SEN/SPE and onset delay.
pub fn run_fold(
    dataset: &Dataset,
    split: &FoldSplit,
    config: &PipelineConfig,
    plan: &ChannelPlan,
    fold: usize,
) -> Result<FoldReport> {
    let train: Vec<&Epoch> = split.train.iter().map(|&i| &dataset.epochs[i]).collect();
    let val: Vec<&Epoch> = split
        .validation
        .iter()
        .map(|&i| &dataset.epochs[i])
        .collect();

    let channels = match plan {
        ChannelPlan::Acs { m } => {
            let acs = AcsConfig {
                rng_seed: stage_seed(config.seed, Stage::Acs, fold as u64),
                ..config.acs.clone()
            };
            let ranking = rank_channels(dataset.subject_id(), &train, &acs)?;
            select_top(&ranking, *m)?
        }
        ChannelPlan::Fixed(c) => c.clone(),
        ChannelPlan::All => (0..dataset.n_channels()).collect(),
    };

    let x_train = feature_matrix(&train, &channels)?;
    let x_val = feature_matrix(&val, &channels)?;
    let y_train = labels3(&train);
    let y_val = labels3(&val);

    let params3 = config
        .forest
        .clone()
        .with_mode(ClassMode::ThreeClass)
        .with_seed(stage_seed(
            config.seed,
            Stage::ThreeClassForest,
            fold as u64,
        ));
    let y3: Vec<usize> = y_train.iter().map(|c| c.index()).collect();
    let model3 = forest::train(&x_train, &y3, &params3)?;
    let post = model3.predict_proba_batch(&x_val)?;
    let (roc_s, roc_e) = combined_roc(&post, &y_val)?;
    let aucs = CombinedAuc::new(roc_s.auc, roc_e.auc);

    let params2 = config
        .forest
        .clone()
        .with_mode(ClassMode::Binary)
        .with_seed(stage_seed(config.seed, Stage::BinaryForest, fold as u64));
    let y2: Vec<usize> = y_train
        .iter()
        .map(|c| usize::from(c.is_seizure()))
        .collect();
    let model2 = forest::train(&x_train, &y2, &params2)?;
    let seizure = BinaryLabel::Seizure.index();
    let train_scores: Vec<f64> = model2
        .predict_proba_batch(&x_train)?
        .iter()
        .map(|p| p.0[seizure])
        .collect();
    let train_pos: Vec<bool> = y2.iter().map(|&c| c == 1).collect();
    let threshold = select_threshold(&train_scores, &train_pos)?;

    let val_scores: Vec<f64> = model2
        .predict_proba_batch(&x_val)?
        .iter()
        .map(|p| p.0[seizure])
        .collect();
    let val_pos: Vec<bool> = y_val.iter().map(|c| c.is_seizure()).collect();
    let (sensitivity, specificity) = sen_spe(&val_scores, &val_pos, threshold)?;

    // Validation indexes are sorted, and so are latencies within a seizure
    // in synthetic data; sort explicitly for arbitrary manifests.
    let mut by_seizure: std::collections::BTreeMap<&str, Vec<(u32, f64)>> = Default::default();
    for (e, &s) in val.iter().zip(&val_scores) {
        if let Label::Ictal {
            latency_s,
            seizure_id,
        } = &e.label
        {
            by_seizure
                .entry(seizure_id)
                .or_default()
                .push((*latency_s, s));
        }
    }
    let seizures: Vec<SeizureScores> = by_seizure
        .into_iter()
        .map(|(id, mut v)| {
            v.sort_by_key(|p| p.0);
            SeizureScores {
                seizure_id: id.to_string(),
                latencies_s: v.iter().map(|p| p.0).collect(),
                scores: v.iter().map(|p| p.1).collect(),
            }
        })
        .collect();
    let delays = detection_delay(&seizures, threshold)?;

    Ok(FoldReport {
        fold,
        train_seizures: split.train_seizures.clone(),
        validation_seizures: split.validation_seizures.clone(),
        n_train: train.len(),
        n_validation: val.len(),
        channels,
        auc_s: aucs.auc_s,
        auc_e: aucs.auc_e,
        auc: aucs.auc,
        sensitivity,
        specificity,
        threshold,
        mean_delay_s: delays.mean_s(),
        missed_seizures: delays.missed,
        delays: delays.per_seizure,
        roc_s: Some(roc_s),
        roc_e: Some(roc_e),
    })
}

/// Full protocol with channels chosen per `config.channels`.
pub fn two_fold_cv(dataset: &Dataset, config: &PipelineConfig) -> Result<EvalReport> {
    two_fold_cv_with(dataset, config, &ChannelPlan::from_config(config))
}

pub fn two_fold_cv_with(
    dataset: &Dataset,
    config: &PipelineConfig,
    plan: &ChannelPlan,
) -> Result<EvalReport> {
    let splits = fold_splits(dataset, config.seed)?;
    let folds = splits
        .iter()
        .enumerate()
        .map(|(k, s)| run_fold(dataset, s, config, plan, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_folds(
        dataset.subject_id(),
        config.seed,
        folds,
    ))
}

/// ROC points of every fold as CSV: `fold,curve,fpr,tpr`.
pub fn roc_csv(report: &EvalReport) -> String {
    let mut out = String::from("fold,curve,fpr,tpr\n");
    for f in &report.folds {
        for (name, curve) in [("auc_s", &f.roc_s), ("auc_e", &f.roc_e)] {
            if let Some(c) = curve {
                for (x, y) in &c.points {
                    out.push_str(&format!("{},{name},{x},{y}\n", f.fold));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{synthesize, SynthConfig};

    fn tiny() -> Dataset {
        let mut cfg = SynthConfig::small(5);
        cfg.n_channels = 6;
        cfg.planted_channels = vec![1, 4];
        cfg.n_seizures = 3;
        cfg.seizure_len_s = 20;
        cfg.interictal_len_s = 61;
        synthesize(&cfg).unwrap()
    }

    #[test]
    fn folds_partition_seizures() {
        let ds = tiny();
        let [f1, f2] = fold_splits(&ds, 3).unwrap();
        assert_eq!(f1.train_seizures, vec!["sz000", "sz001"]);
        assert_eq!(f1.validation_seizures, vec!["sz002"]);
        assert_eq!(f1.train, f2.validation);
        assert_eq!(f1.validation, f2.train);
        for sz in ds.seizures() {
            let in_train = sz.epochs.iter().filter(|i| f1.train.contains(i)).count();
            assert!(in_train == 0 || in_train == sz.epochs.len());
        }
        let inter_a = f1
            .train
            .iter()
            .filter(|&&i| ds.epochs[i].label == Label::Interictal)
            .count();
        assert_eq!(inter_a, 31);
        assert_eq!(f1.train.len() + f1.validation.len(), ds.len());
    }

    #[test]
    fn needs_two_seizures() {
        let mut cfg = SynthConfig::small(1);
        cfg.n_seizures = 1;
        cfg.interictal_len_s = 10;
        let ds = synthesize(&cfg).unwrap();
        assert!(fold_splits(&ds, 0).is_err());
    }

    #[test]
    fn report_is_symmetric_in_fold_order_and_obeys_mean_rule() {
        let ds = tiny();
        let cfg = PipelineConfig::new(3, 30, 2);
        let r = two_fold_cv(&ds, &cfg).unwrap();
        assert_eq!(r.auc, (r.auc_s + r.auc_e) / 2.0);
        let mut swapped = r.folds.clone();
        swapped.reverse();
        let s = EvalReport::from_folds(&r.subject_id, r.seed, swapped);
        assert_eq!(
            (
                s.auc_s,
                s.auc_e,
                s.auc,
                s.sensitivity,
                s.specificity,
                s.threshold,
                s.mean_delay_s
            ),
            (
                r.auc_s,
                r.auc_e,
                r.auc,
                r.sensitivity,
                r.specificity,
                r.threshold,
                r.mean_delay_s
            )
        );
        assert!(r
            .per_seizure_delays_s
            .iter()
            .all(|d| d.delay_s.is_none_or(|v| v >= 1)));
        assert!(roc_csv(&r).lines().count() > 4);
    }
}
