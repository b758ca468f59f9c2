use seizure_acs_core::dataset::synth::{synthesize, SynthConfig};
use seizure_acs_core::dataset::Label;
use seizure_acs_core::Error;

/// Direct O(n²) DFT magnitude at integer frequency `f` for a 1-s signal.
fn dft_mag(x: &[f32], f: usize) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (t, &v) in x.iter().enumerate() {
        let w = std::f64::consts::TAU * f as f64 * t as f64 / n;
        re += f64::from(v) * w.cos();
        im -= f64::from(v) * w.sin();
    }
    (re * re + im * im).sqrt()
}

fn pearson(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let mb = b.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (f64::from(x) - ma, f64::from(y) - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn no_shared_component_means_uncorrelated_channels() {
    let mut cfg = SynthConfig::small(11);
    cfg.shared_component_gain = 0.0;
    cfg.interictal_len_s = 10;
    let ds = synthesize(&cfg).unwrap();
    let (mut sum, mut count) = (0.0, 0);
    for e in ds.epochs.iter().filter(|e| e.label.is_ictal()) {
        for i in 0..e.n_channels() {
            for j in i + 1..e.n_channels() {
                sum += pearson(e.channel(i), e.channel(j)).abs();
                count += 1;
            }
        }
    }
    let mean = sum / count as f64;
    assert!(mean < 0.1, "mean |r| = {mean}");
}

#[test]
fn shared_component_correlates_late_ictal_more_than_early() {
    let ds = synthesize(&SynthConfig::small(2)).unwrap();
    let mean_corr = |early: bool| {
        let mut v = Vec::new();
        for e in &ds.epochs {
            if let Label::Ictal { latency_s, .. } = e.label {
                if (latency_s < 15) == early {
                    v.push(pearson(e.channel(0), e.channel(9)));
                }
            }
        }
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (early, late) = (mean_corr(true), mean_corr(false));
    assert!(late > early + 0.2, "early {early}, late {late}");
}

#[test]
fn planted_band_power_exceeds_interictal_by_three_sd() {
    let cfg = SynthConfig::small(7);
    let ds = synthesize(&cfg).unwrap();
    let (lo, hi) = cfg.seizure_band_hz;
    for &c in &cfg.planted_channels {
        let band = |x: &[f32]| {
            (lo..=hi)
                .map(|f| dft_mag(x, f as usize).max(1e-12).log10())
                .sum::<f64>()
                / f64::from(hi - lo + 1)
        };
        let (mut ictal, mut inter) = (Vec::new(), Vec::new());
        for e in &ds.epochs {
            let v = band(e.channel(c));
            match e.label {
                Label::Ictal { .. } => ictal.push(v),
                _ => inter.push(v),
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mi = mean(&inter);
        let sd =
            (inter.iter().map(|x| (x - mi).powi(2)).sum::<f64>() / (inter.len() - 1) as f64).sqrt();
        let gap = mean(&ictal) - mi;
        assert!(gap > 3.0 * sd, "channel {c}: gap {gap}, sd {sd}");
    }
}

#[test]
fn same_seed_same_data() {
    let a = synthesize(&SynthConfig::small(4)).unwrap();
    let b = synthesize(&SynthConfig::small(4)).unwrap();
    let c = synthesize(&SynthConfig::small(5)).unwrap();
    assert!(a
        .epochs
        .iter()
        .zip(&b.epochs)
        .all(|(x, y)| x.samples() == y.samples()));
    assert_ne!(a.epochs[0].samples(), c.epochs[0].samples());
}

#[test]
fn bad_planted_channel_names_the_field() {
    let mut cfg = SynthConfig::small(0);
    cfg.planted_channels = vec![2, 16];
    match synthesize(&cfg) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "planted_channels"),
        other => panic!("expected config error, got {other:?}"),
    }
    let err = SynthConfig::from_json("{\"n_channels\": 4,\n \"fs\": \"fast\"}").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}
