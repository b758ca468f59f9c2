//! ROC/AUC, balanced threshold, sensitivity/specificity, onset delay.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel3;
use crate::forest::Posterior;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false-positive rate, true-positive rate)` from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn class_counts(scores: &[f64], positives: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positives.len() {
        return Err(Error::input(format!(
            "{} scores but {} labels",
            scores.len(),
            positives.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::input("NaN score"));
    }
    let p = positives.iter().filter(|&&b| b).count();
    let n = positives.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::input(
            "ROC needs at least one positive and one negative",
        ));
    }
    Ok((p, n))
}

/// ROC by descending-score sweep; equal scores form a single step, so ties
/// contribute half credit. AUC by the trapezoidal rule.
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Result<RocCurve> {
    let (p, n) = class_counts(scores, positives)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area2 = 0u128; // twice the area in units of 1/(p·n)
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        let (tp0, fp0) = (tp, fp);
        while i < idx.len() && scores[idx[i]] == s {
            if positives[idx[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += ((fp - fp0) * (tp + tp0)) as u128;
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(RocCurve {
        points,
        auc: area2 as f64 / (2 * p * n) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedAuc {
    pub auc_s: f64,
    pub auc_e: f64,
    pub auc: f64,
}

impl CombinedAuc {
    pub fn new(auc_s: f64, auc_e: f64) -> Self {
        CombinedAuc {
            auc_s,
            auc_e,
            auc: (auc_s + auc_e) / 2.0,
        }
    }
}

/// Seizure score `P(early) + P(ictal)` and early score `P(early)` from
/// 3-class posteriors (order interictal, ictal, early).
pub fn seizure_and_early_scores(posteriors: &[Posterior]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut s = Vec::with_capacity(posteriors.len());
    let mut e = Vec::with_capacity(posteriors.len());
    for p in posteriors {
        if p.0.len() != 3 {
            return Err(Error::input("combined AUC needs 3-class posteriors"));
        }
        s.push(p.0[ClassLabel3::Ictal.index()] + p.0[ClassLabel3::EarlyIctal.index()]);
        e.push(p.0[ClassLabel3::EarlyIctal.index()]);
    }
    Ok((s, e))
}

/// AUC_S (ictal incl. early vs interictal), AUC_E (early vs everything
/// else), and their mean.
pub fn combined_auc(posteriors: &[Posterior], labels: &[ClassLabel3]) -> Result<CombinedAuc> {
    let (rocs, roce) = combined_roc(posteriors, labels)?;
    Ok(CombinedAuc::new(rocs.auc, roce.auc))
}

pub(crate) fn combined_roc(
    posteriors: &[Posterior],
    labels: &[ClassLabel3],
) -> Result<(RocCurve, RocCurve)> {
    if posteriors.len() != labels.len() {
        return Err(Error::input("posterior and label counts differ"));
    }
    for class in ClassLabel3::ALL {
        if !labels.contains(&class) {
            return Err(Error::input(format!("class {class:?} missing from labels")));
        }
    }
    let (s, e) = seizure_and_early_scores(posteriors)?;
    let seizure: Vec<bool> = labels.iter().map(|l| l.is_seizure()).collect();
    let early: Vec<bool> = labels
        .iter()
        .map(|&l| l == ClassLabel3::EarlyIctal)
        .collect();
    Ok((roc_auc(&s, &seizure)?, roc_auc(&e, &early)?))
}

/// `(sensitivity, specificity)` with the rule `score >= threshold` ⇒ seizure.
pub fn sen_spe(scores: &[f64], positives: &[bool], threshold: f64) -> Result<(f64, f64)> {
    let (p, n) = class_counts(scores, positives)?;
    let mut tp = 0;
    let mut tn = 0;
    for (&s, &pos) in scores.iter().zip(positives) {
        match (s >= threshold, pos) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            _ => {}
        }
    }
    Ok((tp as f64 / p as f64, tn as f64 / n as f64))
}

/// Threshold balancing sensitivity and specificity.
///
/// Candidates are −∞, the midpoints between consecutive distinct scores, and
/// +∞. Picks the smallest `|SEN − SPE|`, then the higher SEN, then the lower
/// threshold.
pub fn select_threshold(scores: &[f64], positives: &[bool]) -> Result<f64> {
    let (p, n) = class_counts(scores, positives)?;
    let mut pairs: Vec<(f64, bool)> = scores
        .iter()
        .copied()
        .zip(positives.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Group by distinct score: (value, positives, negatives).
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (s, pos) in pairs {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if pos {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, usize::from(pos), usize::from(!pos))),
        }
    }

    // Candidate c puts the first c groups below the threshold.
    let (p, n) = (p as i128, n as i128);
    let mut best: Option<(i128, i128, f64)> = None; // (|SEN−SPE|·p·n, tp, threshold)
    let (mut pos_below, mut neg_below) = (0i128, 0i128);
    for c in 0..=groups.len() {
        if c > 0 {
            pos_below += groups[c - 1].1 as i128;
            neg_below += groups[c - 1].2 as i128;
        }
        let threshold = if c == 0 {
            f64::NEG_INFINITY
        } else if c == groups.len() {
            f64::INFINITY
        } else {
            let (lo, hi) = (groups[c - 1].0, groups[c].0);
            lo + (hi - lo) / 2.0
        };
        let tp = p - pos_below;
        let gap = (tp * n - neg_below * p).abs();
        let better = match best {
            None => true,
            Some((g, t, th)) => match gap.cmp(&g) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => tp > t || (tp == t && threshold < th),
            },
        };
        if better {
            best = Some((gap, tp, threshold));
        }
    }
    Ok(best.expect("at least two candidates").2)
}

/// Binary scores of one seizure's epochs, ordered by latency.
#[derive(Debug, Clone, PartialEq)]
pub struct SeizureScores {
    pub seizure_id: String,
    pub latencies_s: Vec<u32>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizureDelay {
    pub seizure_id: String,
    /// `None` when no epoch of the seizure reached the threshold.
    pub delay_s: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDelays {
    pub per_seizure: Vec<SeizureDelay>,
    pub missed: usize,
}

impl DetectionDelays {
    /// Mean delay over detected seizures; `None` if every seizure was missed.
    pub fn mean_s(&self) -> Option<f64> {
        let d: Vec<u32> = self.per_seizure.iter().filter_map(|s| s.delay_s).collect();
        (!d.is_empty()).then(|| d.iter().map(|&v| f64::from(v)).sum::<f64>() / d.len() as f64)
    }
}

/// Delay = latency of the first epoch scoring `>= threshold`, plus 1 s.
/// Seizures never detected are counted in `missed`.
pub fn detection_delay(seizures: &[SeizureScores], threshold: f64) -> Result<DetectionDelays> {
    let mut per_seizure = Vec::with_capacity(seizures.len());
    let mut missed = 0;
    for sz in seizures {
        if sz.scores.is_empty() {
            return Err(Error::input(format!(
                "seizure `{}` has no epochs",
                sz.seizure_id
            )));
        }
        if sz.latencies_s.len() != sz.scores.len() {
            return Err(Error::input(format!(
                "seizure `{}`: latency and score counts differ",
                sz.seizure_id
            )));
        }
        if sz.latencies_s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(format!(
                "seizure `{}`: epochs are not ordered by latency",
                sz.seizure_id
            )));
        }
        let delay_s = sz
            .scores
            .iter()
            .position(|&s| s >= threshold)
            .map(|i| sz.latencies_s[i] + 1);
        if delay_s.is_none() {
            missed += 1;
        }
        per_seizure.push(SeizureDelay {
            seizure_id: sz.seizure_id.clone(),
            delay_s,
        });
    }
    Ok(DetectionDelays {
        per_seizure,
        missed,
    })
}
