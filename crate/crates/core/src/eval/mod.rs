//! Metrics and evaluation protocol.

pub mod cv;
pub mod metrics;
pub mod timing;

pub use cv::{
    fold_splits, two_fold_cv, two_fold_cv_with, ChannelPlan, EvalReport, FoldReport, FoldSplit,
};
pub use metrics::{
    combined_auc, detection_delay, roc_auc, select_threshold, sen_spe, CombinedAuc,
    DetectionDelays, RocCurve, SeizureDelay, SeizureScores,
};
pub use timing::{benchmark, processing_time_improvement, TimingReport};
