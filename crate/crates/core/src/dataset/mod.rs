//! Labelled 1-s epochs, subject manifests, and the on-disk formats.

mod io;
pub mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{read_epoch_binary, read_epoch_csv, write_epoch_binary, write_epoch_csv, EPOCH_MAGIC};

/// Ictal epochs with latency below this many seconds are early ictal.
pub const EARLY_ICTAL_LIMIT_S: u32 = 15;

/// Annotation attached to one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Interictal,
    Ictal { latency_s: u32, seizure_id: String },
    Unlabeled,
}

impl Label {
    pub fn class3(&self) -> Option<ClassLabel3> {
        match self {
            Label::Interictal => Some(ClassLabel3::Interictal),
            Label::Ictal { latency_s, .. } if *latency_s < EARLY_ICTAL_LIMIT_S => {
                Some(ClassLabel3::EarlyIctal)
            }
            Label::Ictal { .. } => Some(ClassLabel3::Ictal),
            Label::Unlabeled => None,
        }
    }

    pub fn is_ictal(&self) -> bool {
        matches!(self, Label::Ictal { .. })
    }
}

/// Three-way target of the seizure classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel3 {
    Interictal,
    Ictal,
    EarlyIctal,
}

impl ClassLabel3 {
    pub const ALL: [ClassLabel3; 3] = [
        ClassLabel3::Interictal,
        ClassLabel3::Ictal,
        ClassLabel3::EarlyIctal,
    ];

    /// Class index used by the 3-class forest.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_seizure(self) -> bool {
        !matches!(self, ClassLabel3::Interictal)
    }
}

/// One second of multi-channel recording.
///
/// Samples are stored row-major (`channel * n_samples + t`) as `f32`, which
/// is also the on-disk precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    n_channels: usize,
    n_samples: usize,
    fs: f64,
    samples: Vec<f32>,
    pub label: Label,
}

impl Epoch {
    pub fn new(rows: Vec<Vec<f32>>, fs: f64, label: Label) -> Result<Self> {
        let n_channels = rows.len();
        let n_samples = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_samples) {
            return Err(Error::input("epoch rows have unequal lengths"));
        }
        Self::from_flat(n_channels, n_samples, fs, rows.concat(), label)
    }

    pub fn from_flat(
        n_channels: usize,
        n_samples: usize,
        fs: f64,
        samples: Vec<f32>,
        label: Label,
    ) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::input(format!("sampling rate {fs} is not positive")));
        }
        if n_channels == 0 {
            return Err(Error::input("epoch has no channels"));
        }
        let expected = samples_per_epoch(fs);
        if n_samples != expected {
            return Err(Error::input(format!(
                "epoch has {n_samples} samples per channel, a 1 s epoch at {fs} Hz needs {expected}"
            )));
        }
        if samples.len() != n_channels * n_samples {
            return Err(Error::input(format!(
                "expected {} samples, got {}",
                n_channels * n_samples,
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite sample at channel {}, index {}",
                i / n_samples,
                i % n_samples
            )));
        }
        Ok(Epoch {
            n_channels,
            n_samples,
            fs,
            samples,
            label,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.samples[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn channel_f64(&self, c: usize) -> Vec<f64> {
        self.channel(c).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: f32) -> Epoch {
        Epoch {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Number of samples in a 1-s epoch at `fs`.
pub fn samples_per_epoch(fs: f64) -> usize {
    fs.round() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Interictal,
    Ictal,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Path of the epoch file, relative to the manifest's directory.
    pub file: PathBuf,
    pub label: SegmentLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seizure_id: Option<String>,
}

impl Segment {
    fn to_label(&self, path: &Path) -> Result<Label> {
        match (self.label, &self.latency_s, &self.seizure_id) {
            (SegmentLabel::Ictal, Some(latency_s), Some(seizure_id)) => Ok(Label::Ictal {
                latency_s: *latency_s,
                seizure_id: seizure_id.clone(),
            }),
            (SegmentLabel::Ictal, _, _) => Err(Error::data(
                path,
                "ictal segment requires latency_s and seizure_id",
            )),
            (_, None, None) => Ok(match self.label {
                SegmentLabel::Interictal => Label::Interictal,
                _ => Label::Unlabeled,
            }),
            _ => Err(Error::data(
                path,
                "latency_s and seizure_id are only allowed on ictal segments",
            )),
        }
    }
}

/// Per-subject inventory of epoch files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subject_id: String,
    pub fs: f64,
    pub n_channels: usize,
    pub segments: Vec<Segment>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::data(path, format!("bad manifest: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// A subject's manifest together with its loaded epochs (same order as
/// `manifest.segments`). Immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub epochs: Vec<Epoch>,
}

/// One seizure: epoch indexes ordered by latency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeizureRun {
    pub seizure_id: String,
    pub epochs: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from epochs already in memory, checking every
    /// dataset invariant.
    pub fn new(manifest: DatasetManifest, epochs: Vec<Epoch>) -> Result<Self> {
        let dataset = Dataset { manifest, epochs };
        dataset.validate(Path::new(""))?;
        Ok(dataset)
    }

    pub fn subject_id(&self) -> &str {
        &self.manifest.subject_id
    }

    pub fn n_channels(&self) -> usize {
        self.manifest.n_channels
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Seizures sorted by `seizure_id`, each with epochs sorted by latency.
    pub fn seizures(&self) -> Vec<SeizureRun> {
        let mut runs: BTreeMap<&str, Vec<(u32, usize)>> = BTreeMap::new();
        for (i, e) in self.epochs.iter().enumerate() {
            if let Label::Ictal {
                latency_s,
                seizure_id,
            } = &e.label
            {
                runs.entry(seizure_id).or_default().push((*latency_s, i));
            }
        }
        runs.into_iter()
            .map(|(id, mut v)| {
                v.sort_unstable();
                SeizureRun {
                    seizure_id: id.to_string(),
                    epochs: v.into_iter().map(|(_, i)| i).collect(),
                }
            })
            .collect()
    }

    pub fn interictal(&self) -> Vec<usize> {
        self.epochs
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == Label::Interictal)
            .map(|(i, _)| i)
            .collect()
    }

    /// A new dataset holding the epochs at `indices` (in that order). Each
    /// seizure must be kept whole.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut manifest = self.manifest.clone();
        manifest.segments = indices
            .iter()
            .map(|&i| self.manifest.segments[i].clone())
            .collect();
        let epochs = indices.iter().map(|&i| self.epochs[i].clone()).collect();
        Dataset::new(manifest, epochs)
    }

    /// Epochs carrying a label, with their 3-class targets.
    pub fn labelled(&self) -> Vec<(usize, ClassLabel3)> {
        self.epochs
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.label.class3().map(|c| (i, c)))
            .collect()
    }

    fn validate(&self, manifest_path: &Path) -> Result<()> {
        let m = &self.manifest;
        if m.segments.len() != self.epochs.len() {
            return Err(Error::data(
                manifest_path,
                format!(
                    "{} segments but {} epochs",
                    m.segments.len(),
                    self.epochs.len()
                ),
            ));
        }
        for (seg, e) in m.segments.iter().zip(&self.epochs) {
            if e.n_channels() != m.n_channels {
                return Err(Error::data(
                    &seg.file,
                    format!(
                        "channel-count mismatch: file has {}, manifest says {}",
                        e.n_channels(),
                        m.n_channels
                    ),
                ));
            }
            if (e.fs() - m.fs).abs() > 1e-9 * m.fs {
                return Err(Error::data(
                    &seg.file,
                    format!("sampling rate {} differs from manifest {}", e.fs(), m.fs),
                ));
            }
        }
        let mut runs: BTreeMap<&str, Vec<(u32, &Path)>> = BTreeMap::new();
        for (seg, e) in m.segments.iter().zip(&self.epochs) {
            if let Label::Ictal {
                latency_s,
                seizure_id,
            } = &e.label
            {
                runs.entry(seizure_id)
                    .or_default()
                    .push((*latency_s, seg.file.as_path()));
            }
        }
        for (id, mut run) in runs {
            run.sort_unstable();
            for (expected, (latency, file)) in run.iter().enumerate() {
                if *latency as usize != expected {
                    return Err(Error::data(
                        *file,
                        format!(
                            "non-contiguous latency run in seizure `{id}`: expected {expected} s, found {latency} s"
                        ),
                    ));
                }
            }
        }
        let n_ictal = self.epochs.iter().filter(|e| e.label.is_ictal()).count();
        let n_inter = self.interictal().len();
        if (n_ictal > 0) != (n_inter > 0) {
            return Err(Error::data(
                manifest_path,
                "labelled dataset needs at least one ictal and one interictal segment",
            ));
        }
        Ok(())
    }
}

/// Reads a manifest and every epoch file it references.
///
/// Epoch files are read in parallel. Errors name the offending file.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    if manifest.n_channels == 0 {
        return Err(Error::data(manifest_path, "n_channels must be at least 1"));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let epochs = manifest
        .segments
        .par_iter()
        .map(|seg| {
            let path = base.join(&seg.file);
            let label = seg.to_label(&path)?;
            let epoch = if path.extension().is_some_and(|x| x == "csv") {
                read_epoch_csv(&path, manifest.fs, label)?
            } else {
                read_epoch_binary(&path, label)?
            };
            if epoch.n_channels() != manifest.n_channels {
                return Err(Error::data(
                    &path,
                    format!(
                        "channel-count mismatch: file has {}, manifest says {}",
                        epoch.n_channels(),
                        manifest.n_channels
                    ),
                ));
            }
            Ok(epoch)
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset { manifest, epochs };
    dataset.validate(manifest_path).map_err(|e| match e {
        Error::Data { path, reason } if path.as_os_str().is_empty() => {
            Error::data(manifest_path, reason)
        }
        Error::Data { path, reason } if path.is_relative() => Error::data(base.join(path), reason),
        other => other,
    })?;
    Ok(dataset)
}

/// Writes `dataset` as binary epoch files plus `<subject>.manifest.json` in
/// `dir`; returns the manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    dataset
        .manifest
        .segments
        .par_iter()
        .zip(&dataset.epochs)
        .try_for_each(|(seg, epoch)| {
            let path = dir.join(&seg.file);
            if path.extension().is_some_and(|x| x == "csv") {
                write_epoch_csv(&path, epoch)
            } else {
                write_epoch_binary(&path, epoch)
            }
        })?;
    let manifest_path = dir.join(format!("{}.manifest.json", dataset.manifest.subject_id));
    dataset.manifest.write(&manifest_path)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(n_channels: usize, label: Label) -> Epoch {
        let rows = (0..n_channels)
            .map(|c| (0..100).map(|t| (c * 100 + t) as f32 * 0.01).collect())
            .collect();
        Epoch::new(rows, 100.0, label).unwrap()
    }

    fn ictal(latency_s: u32, id: &str) -> Label {
        Label::Ictal {
            latency_s,
            seizure_id: id.into(),
        }
    }

    fn manifest_for(epochs: &[Epoch], n_channels: usize) -> DatasetManifest {
        let segments = epochs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (label, latency_s, seizure_id) = match &e.label {
                    Label::Interictal => (SegmentLabel::Interictal, None, None),
                    Label::Unlabeled => (SegmentLabel::Unlabeled, None, None),
                    Label::Ictal {
                        latency_s,
                        seizure_id,
                    } => (
                        SegmentLabel::Ictal,
                        Some(*latency_s),
                        Some(seizure_id.clone()),
                    ),
                };
                Segment {
                    file: format!("e{i}.ieeg").into(),
                    label,
                    latency_s,
                    seizure_id,
                }
            })
            .collect();
        DatasetManifest {
            subject_id: "s1".into(),
            fs: 100.0,
            n_channels,
            segments,
        }
    }

    #[test]
    fn early_boundary_is_strict() {
        assert_eq!(ictal(14, "a").class3(), Some(ClassLabel3::EarlyIctal));
        assert_eq!(ictal(15, "a").class3(), Some(ClassLabel3::Ictal));
        assert_eq!(Label::Interictal.class3(), Some(ClassLabel3::Interictal));
        assert_eq!(Label::Unlabeled.class3(), None);
    }

    #[test]
    fn epoch_must_be_one_second() {
        let err = Epoch::new(vec![vec![0.0; 99]], 100.0, Label::Unlabeled).unwrap_err();
        assert!(err.to_string().contains("1 s epoch"));
        let err = Epoch::new(vec![vec![f32::NAN; 100]], 100.0, Label::Unlabeled).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn round_trip_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let epochs = vec![
            epoch(3, Label::Interictal),
            epoch(3, ictal(0, "a")),
            epoch(3, ictal(1, "a")),
        ];
        let ds = Dataset::new(manifest_for(&epochs, 3), epochs).unwrap();
        let path = write_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.epochs, ds.epochs);
        assert_eq!(loaded.seizures()[0].epochs, vec![1, 2]);
    }

    #[test]
    fn channel_mismatch_is_reported_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let epochs = vec![epoch(15, Label::Interictal), epoch(15, ictal(0, "a"))];
        let mut ds = Dataset {
            manifest: manifest_for(&epochs, 15),
            epochs,
        };
        let path = write_dataset(&ds, dir.path()).unwrap();
        ds.manifest.n_channels = 16;
        ds.manifest.write(&path).unwrap();
        let err = load_dataset(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("channel-count mismatch"), "{msg}");
        assert!(msg.contains("e0.ieeg") || msg.contains("e1.ieeg"), "{msg}");
    }

    #[test]
    fn latency_gap_is_rejected() {
        let epochs = vec![
            epoch(2, Label::Interictal),
            epoch(2, ictal(0, "a")),
            epoch(2, ictal(1, "a")),
            epoch(2, ictal(3, "a")),
        ];
        let err = Dataset::new(manifest_for(&epochs, 2), epochs).unwrap_err();
        assert!(err.to_string().contains("non-contiguous"), "{err}");
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let epochs = vec![epoch(2, Label::Interictal), epoch(2, ictal(0, "a"))];
        let ds = Dataset::new(manifest_for(&epochs, 2), epochs).unwrap();
        let path = write_dataset(&ds, dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("e1.ieeg")).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("e1.ieeg"), "{err}");
    }

    #[test]
    fn single_class_labelled_dataset_is_rejected() {
        let epochs = vec![epoch(2, Label::Interictal), epoch(2, Label::Interictal)];
        assert!(Dataset::new(manifest_for(&epochs, 2), epochs).is_err());
        let epochs = vec![epoch(2, Label::Unlabeled)];
        assert!(Dataset::new(manifest_for(&epochs, 2), epochs).is_ok());
    }

    #[test]
    fn ictal_segment_without_seizure_id_is_rejected() {
        let seg = Segment {
            file: "x".into(),
            label: SegmentLabel::Ictal,
            latency_s: Some(0),
            seizure_id: None,
        };
        assert!(seg.to_label(Path::new("x")).is_err());
    }
}
