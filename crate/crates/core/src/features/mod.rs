//! Frequency- and time-domain features of one epoch over selected channels.
//!
//! Layout of a feature vector for `M` channels, in order:
//!
//! | block        | length       | content                                              |
//! |--------------|--------------|------------------------------------------------------|
//! | `freq_power` | `47·M`       | log10 \|FFT\| at 1..=47 Hz, channel-major            |
//! | `freq_eigs`  | `M`          | eigenvalues of the cross matrix of z-scored spectra  |
//! | `time_corr`  | `M(M−1)/2`   | upper triangle of the 400 Hz correlation matrix      |
//! | `time_eigs`  | `M`          | eigenvalues of that correlation matrix               |
//!
//! Eigenvalues are sorted descending. Off-diagonal cross-spectral
//! coefficients are not emitted.

pub mod spectrum;

use std::io::Write;
use std::path::Path;

use crate::dataset::Epoch;
use crate::eigen::{sym_eigenvalues, SymMatrix};
use crate::{Error, Result};

pub use spectrum::{log_power_bins, resample_channel, Spectrum, LOG_FLOOR, TIME_DOMAIN_FS};

pub const FREQ_LO_HZ: usize = 1;
pub const FREQ_HI_HZ: usize = 47;
pub const FREQ_BINS: usize = FREQ_HI_HZ - FREQ_LO_HZ + 1;

/// Rows whose population standard deviation is at or below this fraction of
/// `1 + |mean|` are treated as constant.
const CONSTANT_ROW_TOL: f64 = 1e-12;

/// Z-scores each row in place with population statistics. Constant rows
/// become all zeros.
pub fn zscore_rows_in_place(rows: &mut [Vec<f64>]) {
    for row in rows {
        let k = row.len() as f64;
        let mean = row.iter().sum::<f64>() / k;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
        let std = var.sqrt();
        if std <= CONSTANT_ROW_TOL * (1.0 + mean.abs()) {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            row.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
    }
}

pub fn zscore_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = rows.to_vec();
    zscore_rows_in_place(&mut out);
    out
}

/// `(1/K) Σ_t x_i(t) x_j(t)` over z-scored rows, which is the Pearson
/// correlation for non-constant rows and 0 wherever a constant row is
/// involved. Off-diagonal entries are clamped to `[-1, 1]`.
pub fn cross_matrix(rows: &[Vec<f64>]) -> SymMatrix {
    let k = rows.first().map_or(1, Vec::len) as f64;
    SymMatrix::from_upper(rows.len(), |i, j| {
        let s = rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / k;
        if i == j {
            s
        } else {
            s.clamp(-1.0, 1.0)
        }
    })
}

/// Block sizes of a feature vector over `m` channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub m: usize,
}

impl FeatureLayout {
    pub fn freq_power(&self) -> usize {
        self.m * FREQ_BINS
    }
    pub fn freq_eigs(&self) -> usize {
        self.m
    }
    pub fn time_corr(&self) -> usize {
        self.m * self.m.saturating_sub(1) / 2
    }
    pub fn time_eigs(&self) -> usize {
        self.m
    }
    pub fn len(&self) -> usize {
        self.freq_power() + self.freq_eigs() + self.time_corr() + self.time_eigs()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column names, e.g. `ch03_pow_17hz`, `freq_eig_02`, `corr_03_07`,
    /// `time_eig_02`; channel numbers are the original indexes.
    pub fn names(&self, channels: &[usize]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.len());
        for &c in channels {
            for f in FREQ_LO_HZ..=FREQ_HI_HZ {
                names.push(format!("ch{c:02}_pow_{f}hz"));
            }
        }
        names.extend((0..self.m).map(|i| format!("freq_eig_{i:02}")));
        for i in 0..self.m {
            for j in i + 1..self.m {
                names.push(format!("corr_{:02}_{:02}", channels[i], channels[j]));
            }
        }
        names.extend((0..self.m).map(|i| format!("time_eig_{i:02}")));
        names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    pub fn freq_power(&self) -> &[f64] {
        &self.values[..self.layout.freq_power()]
    }
    pub fn freq_eigs(&self) -> &[f64] {
        let s = self.layout.freq_power();
        &self.values[s..s + self.layout.freq_eigs()]
    }
    pub fn time_corr(&self) -> &[f64] {
        let s = self.layout.freq_power() + self.layout.freq_eigs();
        &self.values[s..s + self.layout.time_corr()]
    }
    pub fn time_eigs(&self) -> &[f64] {
        &self.values[self.layout.len() - self.layout.time_eigs()..]
    }
}

/// Resamples every channel of `epoch` to 400 Hz.
pub fn resample_to_400(epoch: &Epoch) -> Result<Epoch> {
    if epoch.n_samples() == TIME_DOMAIN_FS {
        return Ok(epoch.clone());
    }
    let rows = (0..epoch.n_channels())
        .map(|c| {
            resample_channel(&epoch.channel_f64(c))
                .into_iter()
                .map(|v| v as f32)
                .collect()
        })
        .collect();
    Epoch::new(rows, TIME_DOMAIN_FS as f64, epoch.label.clone())
}

fn check_channels(epoch: &Epoch, channels: &[usize]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::input("no channels selected"));
    }
    let mut seen = vec![false; epoch.n_channels()];
    for &c in channels {
        if c >= epoch.n_channels() {
            return Err(Error::input(format!(
                "channel {c} out of range for a {}-channel epoch",
                epoch.n_channels()
            )));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::input(format!("channel {c} selected twice")));
        }
    }
    Ok(())
}

/// Computes the full feature vector of `epoch` over `channels` (in the
/// given order).
pub fn extract_features(epoch: &Epoch, channels: &[usize]) -> Result<FeatureVector> {
    check_channels(epoch, channels)?;
    let layout = FeatureLayout { m: channels.len() };
    let mut values = Vec::with_capacity(layout.len());

    // Frequency domain at the native rate.
    let mut spectra = Vec::with_capacity(channels.len());
    for &c in channels {
        let s = log_power_bins(&epoch.channel_f64(c), epoch.fs(), FREQ_LO_HZ, FREQ_HI_HZ)?;
        values.extend_from_slice(&s.bins);
        spectra.push(s.bins);
    }
    zscore_rows_in_place(&mut spectra);
    values.extend(sym_eigenvalues(&cross_matrix(&spectra))?);

    // Time domain at 400 Hz, normalized after resampling.
    let mut signals: Vec<Vec<f64>> = channels
        .iter()
        .map(|&c| resample_channel(&epoch.channel_f64(c)))
        .collect();
    zscore_rows_in_place(&mut signals);
    let corr = cross_matrix(&signals);
    for i in 0..corr.size() {
        for j in i + 1..corr.size() {
            values.push(corr.get(i, j));
        }
    }
    values.extend(sym_eigenvalues(&corr)?);

    debug_assert_eq!(values.len(), layout.len());
    Ok(FeatureVector { values, layout })
}

/// Writes feature vectors as CSV with one header row of block-element names.
pub fn write_feature_csv(path: &Path, channels: &[usize], rows: &[FeatureVector]) -> Result<()> {
    let layout = FeatureLayout { m: channels.len() };
    let mut out = String::new();
    out.push_str(&layout.names(channels).join(","));
    out.push('\n');
    for r in rows {
        if r.layout != layout {
            return Err(Error::input(
                "feature vector layout does not match channel list",
            ));
        }
        let line: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise_epoch(n_channels: usize, fs: usize, seed: u64) -> Epoch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n_channels)
            .map(|_| {
                (0..fs)
                    .map(|_| rng.sample::<f32, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Epoch::new(rows, fs as f64, Label::Unlabeled).unwrap()
    }

    #[test]
    fn zscore_basic_and_constant() {
        let z = zscore_rows(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        let mean: f64 = z[0].iter().sum::<f64>() / 3.0;
        let var: f64 = z[0].iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-12);
        assert_eq!(z[1], vec![0.0; 3]);
    }

    #[test]
    fn cross_matrix_signs() {
        let r = vec![0.3, -1.2, 2.0, 0.7, -0.4];
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let z = zscore_rows(&[r.clone(), r, neg, vec![2.0; 5]]);
        let c = cross_matrix(&z);
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((c.get(0, 2) + 1.0).abs() < 1e-12);
        assert_eq!(c.get(3, 3), 0.0);
        assert_eq!(c.get(0, 3), 0.0);
    }

    #[test]
    fn independent_noise_decorrelates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4000).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let c = cross_matrix(&zscore_rows(&rows));
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(c.get(i, j).abs() < 0.1);
                }
            }
        }
    }

    #[test]
    fn layout_lengths() {
        assert_eq!(FeatureLayout { m: 16 }.len(), 904);
        assert_eq!(FeatureLayout { m: 1 }.len(), 49);
        let names = FeatureLayout { m: 3 }.names(&[3, 7, 9]);
        assert_eq!(names.len(), FeatureLayout { m: 3 }.len());
        assert_eq!(names[16], "ch03_pow_17hz");
        assert!(names.contains(&"corr_03_07".to_string()));
        assert!(names.contains(&"time_eig_02".to_string()));
        assert!(names.contains(&"freq_eig_02".to_string()));
    }

    #[test]
    fn extract_lengths_and_blocks() {
        let e = noise_epoch(20, 500, 1);
        for m in [1, 4, 16] {
            let chans: Vec<usize> = (0..m).collect();
            let fv = extract_features(&e, &chans).unwrap();
            assert_eq!(fv.values.len(), m * 47 + m + m * (m - 1) / 2 + m);
            assert!(fv.time_corr().iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(fv.time_eigs().windows(2).all(|w| w[0] >= w[1]));
            assert!(fv.freq_eigs().windows(2).all(|w| w[0] >= w[1]));
            let trace: f64 = fv.time_eigs().iter().sum();
            assert!((trace - m as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_channels_are_rank_one() {
        let base = noise_epoch(1, 400, 9);
        let row = base.channel(0).to_vec();
        let e = Epoch::new(vec![row; 4], 400.0, Label::Unlabeled).unwrap();
        let fv = extract_features(&e, &[0, 1, 2, 3]).unwrap();
        assert!(fv.time_corr().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let eigs = fv.time_eigs();
        assert!((eigs[0] - 4.0).abs() < 1e-9);
        assert!(eigs[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn channel_selection_errors() {
        let e = noise_epoch(4, 400, 2);
        assert!(extract_features(&e, &[]).is_err());
        assert!(extract_features(&e, &[4]).is_err());
        assert!(extract_features(&e, &[1, 1]).is_err());
    }

    #[test]
    fn constant_channel_zeroes_its_correlations() {
        let e0 = noise_epoch(2, 400, 4);
        let rows = vec![
            e0.channel(0).to_vec(),
            e0.channel(1).to_vec(),
            vec![3.0; 400],
        ];
        let e = Epoch::new(rows, 400.0, Label::Unlabeled).unwrap();
        let fv = extract_features(&e, &[0, 1, 2]).unwrap();
        // corr pairs: (0,1), (0,2), (1,2)
        assert_eq!(fv.time_corr()[1], 0.0);
        assert_eq!(fv.time_corr()[2], 0.0);
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn resample_epoch_identity_and_5khz() {
        let e = noise_epoch(3, 400, 5);
        assert_eq!(resample_to_400(&e).unwrap(), e);
        let e = noise_epoch(2, 5000, 6);
        let r = resample_to_400(&e).unwrap();
        assert_eq!(r.n_samples(), 400);
        assert_eq!(r.fs(), 400.0);
    }

    #[test]
    fn feature_csv_has_header() {
        let e = noise_epoch(3, 400, 8);
        let fv = extract_features(&e, &[2, 0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_feature_csv(&p, &[2, 0], &[fv.clone(), fv]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("ch02_pow_1hz,"));
        assert!(header.contains("corr_02_00"));
        assert_eq!(lines.count(), 2);
    }
}
