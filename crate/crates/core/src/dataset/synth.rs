//! Synthetic subjects with planted seizure channels.
//!
//! Interictal epochs are independent 1/f-shaped noise per channel. Ictal
//! epochs add a band-limited oscillation on the planted channels and one
//! broadband component shared by every channel, which raises inter-channel
//! correlation. The shared component is attenuated during the early-ictal
//! window so early and late ictal epochs differ in correlation structure.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    samples_per_epoch, write_dataset, Dataset, DatasetManifest, Epoch, Label, Segment,
    SegmentLabel, EARLY_ICTAL_LIMIT_S,
};
use crate::features::spectrum::{fft_forward, fft_inverse_real};
use crate::{Error, Result};

fn default_subject() -> String {
    "synth".into()
}
fn default_oscillation_gain() -> f64 {
    1.0
}
fn default_early_fraction() -> f64 {
    0.25
}
fn default_knee() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_subject")]
    pub subject_id: String,
    pub n_channels: usize,
    pub fs: f64,
    pub n_seizures: usize,
    /// Length of every seizure in seconds (= ictal epochs per seizure).
    pub seizure_len_s: usize,
    /// Total interictal duration in seconds.
    pub interictal_len_s: usize,
    pub planted_channels: Vec<usize>,
    /// Inclusive integer band `[lo, hi]` of the planted oscillation.
    pub seizure_band_hz: (u32, u32),
    pub shared_component_gain: f64,
    pub noise_gain: f64,
    /// Per-tone amplitude of the planted oscillation.
    #[serde(default = "default_oscillation_gain")]
    pub oscillation_gain: f64,
    /// Fraction of the shared gain applied while latency < 15 s.
    #[serde(default = "default_early_fraction")]
    pub early_shared_fraction: f64,
    /// Corner frequency of the background noise: flat below, 1/f above.
    #[serde(default = "default_knee")]
    pub noise_knee_hz: f64,
    pub rng_seed: u64,
}

impl SynthConfig {
    /// A small 16-channel subject used in examples and tests.
    pub fn small(rng_seed: u64) -> Self {
        SynthConfig {
            subject_id: default_subject(),
            n_channels: 16,
            fs: 400.0,
            n_seizures: 4,
            seizure_len_s: 30,
            interictal_len_s: 240,
            planted_channels: vec![2, 5],
            seizure_band_hz: (4, 8),
            shared_component_gain: 1.0,
            noise_gain: 1.0,
            oscillation_gain: default_oscillation_gain(),
            early_shared_fraction: default_early_fraction(),
            noise_knee_hz: default_knee(),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 {
            return Err(Error::config("n_channels", "must be at least 1"));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::config("fs", "must be positive"));
        }
        if let Some(&c) = self
            .planted_channels
            .iter()
            .find(|&&c| c >= self.n_channels)
        {
            return Err(Error::config(
                "planted_channels",
                format!("channel {c} is outside 0..{}", self.n_channels),
            ));
        }
        let (lo, hi) = self.seizure_band_hz;
        if !(1 <= lo && lo < hi && hi <= 47) {
            return Err(Error::config(
                "seizure_band_hz",
                format!("need 1 <= lo < hi <= 47, got ({lo}, {hi})"),
            ));
        }
        if f64::from(hi) >= self.fs / 2.0 {
            return Err(Error::config(
                "seizure_band_hz",
                format!("upper edge {hi} Hz is not below Nyquist of fs={}", self.fs),
            ));
        }
        if self.n_seizures == 0 {
            return Err(Error::config("n_seizures", "must be at least 1"));
        }
        if self.seizure_len_s == 0 {
            return Err(Error::config("seizure_len_s", "must be at least 1"));
        }
        if self.interictal_len_s == 0 {
            return Err(Error::config("interictal_len_s", "must be at least 1"));
        }
        for (field, v) in [
            ("shared_component_gain", self.shared_component_gain),
            ("noise_gain", self.noise_gain),
            ("oscillation_gain", self.oscillation_gain),
            ("early_shared_fraction", self.early_shared_fraction),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }
        if !(self.noise_knee_hz.is_finite() && self.noise_knee_hz > 0.0) {
            return Err(Error::config("noise_knee_hz", "must be positive"));
        }
        Ok(())
    }

    /// Parses a JSON config, reporting line/column or the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                "<document>",
                format!("{e} (line {}, column {})", e.line(), e.column()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Shapes white noise to a spectrum flat below `knee_hz` and 1/f above it.
pub(crate) fn colored_noise(rng: &mut impl Rng, n: usize, fs: f64, knee_hz: f64) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut spec = fft_forward(&white);
    spec[0] = Default::default();
    for (k, z) in spec.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64 * fs / n as f64;
        *z *= (1.0 + f / knee_hz).sqrt().recip();
    }
    fft_inverse_real(&mut spec)
}

enum EpochKind {
    Interictal,
    Ictal { latency_s: u32 },
}

fn synth_epoch(cfg: &SynthConfig, index: usize, kind: &EpochKind) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index as u64);
    let n = samples_per_epoch(cfg.fs);
    let mut rows: Vec<Vec<f64>> = (0..cfg.n_channels)
        .map(|_| {
            colored_noise(&mut rng, n, cfg.fs, cfg.noise_knee_hz)
                .into_iter()
                .map(|v| v * cfg.noise_gain)
                .collect()
        })
        .collect();
    if let EpochKind::Ictal { latency_s } = kind {
        let (lo, hi) = cfg.seizure_band_hz;
        for &c in &cfg.planted_channels {
            for f in lo..=hi {
                let amp = cfg.oscillation_gain * rng.random_range(0.5..1.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let w = std::f64::consts::TAU * f64::from(f) / cfg.fs;
                for (t, v) in rows[c].iter_mut().enumerate() {
                    *v += amp * (w * t as f64 + phase).sin();
                }
            }
        }
        let gain = if *latency_s < EARLY_ICTAL_LIMIT_S {
            cfg.shared_component_gain * cfg.early_shared_fraction
        } else {
            cfg.shared_component_gain
        };
        if gain > 0.0 {
            let shared = colored_noise(&mut rng, n, cfg.fs, cfg.noise_knee_hz);
            for row in &mut rows {
                for (v, s) in row.iter_mut().zip(&shared) {
                    *v += gain * s;
                }
            }
        }
    }
    rows.into_iter().flatten().map(|v| v as f32).collect()
}

/// Generates the dataset in memory. Deterministic in `rng_seed`; each epoch
/// draws from its own RNG stream so generation order does not matter.
pub fn synthesize(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut plan: Vec<(Segment, EpochKind)> = Vec::new();
    for i in 0..cfg.interictal_len_s {
        plan.push((
            Segment {
                file: format!("{}_interictal_{i:05}.ieeg", cfg.subject_id).into(),
                label: SegmentLabel::Interictal,
                latency_s: None,
                seizure_id: None,
            },
            EpochKind::Interictal,
        ));
    }
    for s in 0..cfg.n_seizures {
        for latency_s in 0..cfg.seizure_len_s as u32 {
            plan.push((
                Segment {
                    file: format!("{}_sz{s:03}_{latency_s:04}.ieeg", cfg.subject_id).into(),
                    label: SegmentLabel::Ictal,
                    latency_s: Some(latency_s),
                    seizure_id: Some(format!("sz{s:03}")),
                },
                EpochKind::Ictal { latency_s },
            ));
        }
    }
    let n = samples_per_epoch(cfg.fs);
    let epochs = plan
        .par_iter()
        .enumerate()
        .map(|(i, (seg, kind))| {
            let label = match kind {
                EpochKind::Interictal => Label::Interictal,
                EpochKind::Ictal { latency_s } => Label::Ictal {
                    latency_s: *latency_s,
                    seizure_id: seg.seizure_id.clone().unwrap(),
                },
            };
            Epoch::from_flat(cfg.n_channels, n, cfg.fs, synth_epoch(cfg, i, kind), label)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        subject_id: cfg.subject_id.clone(),
        fs: cfg.fs,
        n_channels: cfg.n_channels,
        segments: plan.into_iter().map(|(s, _)| s).collect(),
    };
    Dataset::new(manifest, epochs)
}

/// Generates the dataset and writes it under `out_dir`; returns the manifest
/// path and the in-memory dataset.
pub fn generate_synthetic(cfg: &SynthConfig, out_dir: &Path) -> Result<(PathBuf, Dataset)> {
    let dataset = synthesize(cfg)?;
    let path = write_dataset(&dataset, out_dir)?;
    Ok((path, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_planted_channel() {
        let mut cfg = SynthConfig::small(1);
        cfg.planted_channels = vec![16];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("planted_channels"));
    }

    #[test]
    fn rejects_bad_band() {
        let mut cfg = SynthConfig::small(1);
        cfg.seizure_band_hz = (8, 8);
        assert!(cfg.validate().is_err());
        cfg.seizure_band_hz = (0, 8);
        assert!(cfg.validate().is_err());
        cfg.seizure_band_hz = (4, 48);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_errors_carry_position_or_field() {
        let err = SynthConfig::from_json("{\n  \"n_channels\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let mut v = serde_json::to_value(SynthConfig::small(3)).unwrap();
        v["planted_channels"] = serde_json::json!([99]);
        let err = SynthConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("planted_channels"), "{err}");
    }

    #[test]
    fn layout_matches_config() {
        let mut cfg = SynthConfig::small(7);
        cfg.n_seizures = 2;
        cfg.seizure_len_s = 3;
        cfg.interictal_len_s = 5;
        let ds = synthesize(&cfg).unwrap();
        assert_eq!(ds.len(), 11);
        assert_eq!(ds.interictal().len(), 5);
        let runs = ds.seizures();
        assert_eq!(runs.len(), 2);
        assert!(runs.iter().all(|r| r.epochs.len() == 3));
    }
}
