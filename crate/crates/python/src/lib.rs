//! Python bindings: `import seizure_acs`.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use seizure_acs_core as core;
use seizure_acs_core::acs::{self, AcsConfig, ImportanceProvider, SweepPoint};
use seizure_acs_core::dataset::synth::{synthesize, SynthConfig};
use seizure_acs_core::dataset::{ClassLabel3, Epoch, Label};
use seizure_acs_core::eigen::{sym_eigenvalues, SymMatrix};
use seizure_acs_core::eval;
use seizure_acs_core::features::{self, spectrum};
use seizure_acs_core::forest::{self, ClassMode, FeatureMatrix, ForestModel, ForestParams};
use seizure_acs_core::pipeline::PipelineConfig;

fn py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        core::Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<FeatureMatrix> {
    FeatureMatrix::from_rows(rows).map_err(py_err)
}

fn class3(labels: &[usize]) -> PyResult<Vec<ClassLabel3>> {
    labels
        .iter()
        .map(|&l| {
            ClassLabel3::ALL
                .get(l)
                .copied()
                .ok_or_else(|| PyValueError::new_err(format!("label {l} is not 0, 1 or 2")))
        })
        .collect()
}

/// log10 FFT magnitude at integer frequencies `lo..=hi` Hz.
#[pyfunction]
#[pyo3(signature = (signal, fs, lo = 1, hi = 47))]
fn log_power_bins(signal: Vec<f64>, fs: f64, lo: usize, hi: usize) -> PyResult<Vec<f64>> {
    Ok(spectrum::log_power_bins(&signal, fs, lo, hi)
        .map_err(py_err)?
        .bins)
}

/// FFT resampling of a 1-s signal to 400 samples.
#[pyfunction]
fn resample_400(signal: Vec<f64>) -> Vec<f64> {
    spectrum::resample_channel(&signal)
}

/// Eigenvalues of a symmetric matrix, descending.
#[pyfunction]
fn eigenvalues(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let sym = SymMatrix::new(n, m.concat()).map_err(py_err)?;
    sym_eigenvalues(&sym).map_err(py_err)
}

/// Feature vector of one epoch (`rows[channel][sample]`, 1 s at `fs`).
#[pyfunction]
fn extract_features(rows: Vec<Vec<f32>>, fs: f64, channels: Vec<usize>) -> PyResult<Vec<f64>> {
    let epoch = Epoch::new(rows, fs, Label::Unlabeled).map_err(py_err)?;
    Ok(features::extract_features(&epoch, &channels)
        .map_err(py_err)?
        .values)
}

#[pyfunction]
fn feature_length(m: usize) -> usize {
    features::FeatureLayout { m }.len()
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, positives: Vec<bool>) -> PyResult<f64> {
    Ok(eval::roc_auc(&scores, &positives).map_err(py_err)?.auc)
}

/// `(auc_s, auc_e, auc)` from 3-class posteriors and labels
/// 0 = interictal, 1 = ictal, 2 = early ictal.
#[pyfunction]
fn combined_auc(posteriors: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<(f64, f64, f64)> {
    let post: Vec<forest::Posterior> = posteriors.into_iter().map(forest::Posterior).collect();
    let c = eval::combined_auc(&post, &class3(&labels)?).map_err(py_err)?;
    Ok((c.auc_s, c.auc_e, c.auc))
}

#[pyfunction]
fn select_threshold(scores: Vec<f64>, positives: Vec<bool>) -> PyResult<f64> {
    eval::select_threshold(&scores, &positives).map_err(py_err)
}

/// `(sensitivity, specificity)` for `score >= threshold`.
#[pyfunction]
fn sen_spe(scores: Vec<f64>, positives: Vec<bool>, threshold: f64) -> PyResult<(f64, f64)> {
    eval::sen_spe(&scores, &positives, threshold).map_err(py_err)
}

#[pyfunction]
fn processing_time_improvement(
    baseline_feature_s: f64,
    baseline_training_s: f64,
    feature_s: f64,
    training_s: f64,
) -> f64 {
    eval::processing_time_improvement(
        baseline_feature_s,
        baseline_training_s,
        feature_s,
        training_s,
    )
}

/// Smallest M whose AUC is within 0.01 of the best, from `(m, auc)` pairs.
#[pyfunction]
fn choose_m(points: Vec<(usize, f64)>) -> PyResult<usize> {
    let pts: Vec<SweepPoint> = points
        .into_iter()
        .map(|(m, auc)| SweepPoint { m, auc })
        .collect();
    acs::choose_m(&pts).map_err(py_err)
}

/// A labelled subject: manifest plus epochs.
#[pyclass(module = "seizure_acs", frozen)]
struct Dataset {
    inner: core::dataset::Dataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn load(manifest_path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Dataset {
            inner: core::dataset::load_dataset(&manifest_path).map_err(py_err)?,
        })
    }

    /// Generates a synthetic subject from a JSON generator config.
    #[staticmethod]
    fn synthesize(config_json: &str) -> PyResult<Self> {
        let cfg = SynthConfig::from_json(config_json).map_err(py_err)?;
        Ok(Dataset {
            inner: synthesize(&cfg).map_err(py_err)?,
        })
    }

    /// Writes epoch files and the manifest; returns the manifest path.
    fn write(&self, out_dir: std::path::PathBuf) -> PyResult<std::path::PathBuf> {
        core::dataset::write_dataset(&self.inner, &out_dir).map_err(py_err)
    }

    #[getter]
    fn subject_id(&self) -> String {
        self.inner.subject_id().to_string()
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Per-epoch 3-class label (0, 1, 2), or `None` when unlabelled.
    fn labels(&self) -> Vec<Option<usize>> {
        self.inner
            .epochs
            .iter()
            .map(|e| e.label.class3().map(ClassLabel3::index))
            .collect()
    }

    /// Samples of epoch `i` as `rows[channel][sample]`.
    fn epoch(&self, i: usize) -> PyResult<Vec<Vec<f32>>> {
        let e = self
            .inner
            .epochs
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("epoch {i} out of range")))?;
        Ok((0..e.n_channels()).map(|c| e.channel(c).to_vec()).collect())
    }

    /// `(order, importance)` from the channel-ranking forest.
    #[pyo3(signature = (n_trees = 300, seed = 0))]
    fn rank_channels(&self, n_trees: usize, seed: u64) -> PyResult<(Vec<usize>, Vec<f64>)> {
        let epochs: Vec<&Epoch> = self.inner.epochs.iter().collect();
        let cfg = AcsConfig {
            providers: vec![ImportanceProvider::RandomForest {
                params: ForestParams::default().with_trees(n_trees),
            }],
            rng_seed: seed,
            ..AcsConfig::default()
        };
        let r = acs::rank_channels(self.inner.subject_id(), &epochs, &cfg).map_err(py_err)?;
        Ok((r.order, r.importance))
    }

    /// Two-fold CV with per-fold channel selection; returns the report as JSON.
    #[pyo3(signature = (m, n_trees = 300, seed = 0))]
    fn two_fold_cv(&self, py: Python<'_>, m: usize, n_trees: usize, seed: u64) -> PyResult<String> {
        let cfg = PipelineConfig::new(m, n_trees, seed);
        let report = py
            .detach(|| eval::two_fold_cv(&self.inner, &cfg))
            .map_err(py_err)?;
        Ok(report.to_json())
    }
}

/// Random Forest classifier. `mode` is `"three_class"` or `"binary"`.
#[pyclass(module = "seizure_acs")]
struct RandomForest {
    params: ForestParams,
    model: Option<ForestModel>,
}

impl RandomForest {
    fn fitted(&self) -> PyResult<&ForestModel> {
        self.model
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("forest is not fitted"))
    }
}

#[pymethods]
impl RandomForest {
    #[new]
    #[pyo3(signature = (n_trees = 100, seed = 0, mode = "three_class"))]
    fn new(n_trees: usize, seed: u64, mode: &str) -> PyResult<Self> {
        let mode = match mode {
            "three_class" => ClassMode::ThreeClass,
            "binary" => ClassMode::Binary,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        Ok(RandomForest {
            params: ForestParams::default()
                .with_trees(n_trees)
                .with_seed(seed)
                .with_mode(mode),
            model: None,
        })
    }

    fn fit(&mut self, py: Python<'_>, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<()> {
        let x = matrix(&x)?;
        let params = self.params.clone();
        self.model = Some(
            py.detach(|| forest::train(&x, &y, &params))
                .map_err(py_err)?,
        );
        Ok(())
    }

    fn predict_proba(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let post = self
            .fitted()?
            .predict_proba_batch(&matrix(&x)?)
            .map_err(py_err)?;
        Ok(post.into_iter().map(|p| p.0).collect())
    }

    /// Split-frequency importance, summing to 1.
    fn feature_importance(&self) -> PyResult<Vec<f64>> {
        Ok(self.fitted()?.feature_importance())
    }

    fn oob_accuracy(&self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<f64> {
        self.fitted()?
            .oob_accuracy(&matrix(&x)?, &y)
            .map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        Ok(self.fitted()?.to_json())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let model = ForestModel::from_json(text).map_err(py_err)?;
        Ok(RandomForest {
            params: model.params.clone(),
            model: Some(model),
        })
    }
}

#[pymodule]
fn seizure_acs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(log_power_bins, m)?)?;
    m.add_function(wrap_pyfunction!(resample_400, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_length, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(combined_auc, m)?)?;
    m.add_function(wrap_pyfunction!(select_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sen_spe, m)?)?;
    m.add_function(wrap_pyfunction!(processing_time_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(choose_m, m)?)?;
    m.add_class::<Dataset>()?;
    m.add_class::<RandomForest>()?;
    Ok(())
}
