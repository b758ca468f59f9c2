//! FFT helpers, 1-Hz log-magnitude bins, and FFT-domain resampling.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Floor applied before `log10` so silent bins stay finite.
pub const LOG_FLOOR: f64 = 1e-12;

/// Sampling rate of the time-domain feature path.
pub const TIME_DOMAIN_FS: usize = 400;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft_forward(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(&mut buf);
    buf
}

/// Inverse FFT, normalized by `1/n`, keeping the real part.
pub fn fft_inverse_real(spec: &mut [Complex64]) -> Vec<f64> {
    let n = spec.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(spec);
    spec.iter().map(|z| z.re / n as f64).collect()
}

/// Log-magnitude spectrum over integer frequencies `lo..=hi` Hz of a
/// 1-s signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<f64>,
    pub band: (usize, usize),
}

impl Spectrum {
    pub fn at_hz(&self, f: usize) -> f64 {
        self.bins[f - self.band.0]
    }
}

/// `log10(max(|X(f)|, 1e-12))` for each integer `f` in `lo..=hi`.
///
/// A 1-s signal has an FFT grid spacing of exactly 1 Hz, so each bin is a
/// single coefficient.
pub fn log_power_bins(signal: &[f64], fs: f64, lo: usize, hi: usize) -> Result<Spectrum> {
    if lo < 1 || lo >= hi || hi as f64 >= fs / 2.0 {
        return Err(Error::input(format!(
            "band ({lo}, {hi}) Hz must satisfy 1 <= lo < hi < fs/2 = {}",
            fs / 2.0
        )));
    }
    let n = signal.len();
    let spec = fft_forward(signal);
    let bins = (lo..=hi)
        .map(|f| {
            let k = (f as f64 * n as f64 / fs).round() as usize;
            spec[k].norm().max(LOG_FLOOR).log10()
        })
        .collect();
    Ok(Spectrum {
        bins,
        band: (lo, hi),
    })
}

/// Resamples one 1-s channel to `TIME_DOMAIN_FS` samples by truncating or
/// zero-padding its spectrum. Content below 200 Hz is kept exactly; the
/// new Nyquist bin is zeroed. Returns the input unchanged when it already
/// has 400 samples.
pub fn resample_channel(x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    let n_out = TIME_DOMAIN_FS;
    if n_in == n_out {
        return x.to_vec();
    }
    let spec = fft_forward(x);
    // Bins 0..keep with their conjugates; an even-length Nyquist bin is dropped.
    let keep = n_in.min(n_out).div_ceil(2);
    let mut out = vec![Complex64::default(); n_out];
    let scale = n_out as f64 / n_in as f64;
    for k in 0..keep {
        out[k] = spec[k] * scale;
        if k > 0 {
            out[n_out - k] = spec[n_in - k] * scale;
        }
    }
    fft_inverse_real(&mut out)
}
