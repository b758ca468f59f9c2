use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seizure_acs_core::forest::{train, ClassMode, FeatureMatrix, ForestModel, ForestParams};

/// Four quadrants with a 0.5-wide empty strip around each axis; label is
/// `(x > 0) xor (y > 0)`.
fn xor(n: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let side = |rng: &mut ChaCha8Rng| {
        let v: f64 = rng.random_range(0.25..1.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    for _ in 0..n {
        let (a, b) = (side(&mut rng), side(&mut rng));
        rows.push(vec![a, b]);
        y.push(usize::from((a > 0.0) != (b > 0.0)));
    }
    (FeatureMatrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn xor_oob_accuracy() {
    let (x, y) = xor(200, 1);
    let params = ForestParams::default()
        .with_trees(100)
        .with_mode(ClassMode::Binary)
        .with_seed(3);
    let model = train(&x, &y, &params).unwrap();
    let oob = model.oob_accuracy(&x, &y).unwrap();
    assert!(oob > 0.95, "OOB accuracy {oob}");
}

#[test]
fn label_feature_dominates_importance() {
    let mut wins = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..200 {
            let label = rng.random_range(0..2usize);
            let mut row = vec![label as f64 + rng.random_range(-0.01..0.01)];
            row.extend((1..10).map(|_| rng.random_range(0.0..1.0)));
            rows.push(row);
            y.push(label);
        }
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let params = ForestParams::default()
            .with_trees(100)
            .with_mode(ClassMode::Binary)
            .with_seed(seed);
        let imp = train(&x, &y, &params).unwrap().feature_importance();
        if imp[1..].iter().all(|&v| imp[0] > v) {
            wins += 1;
        }
    }
    assert!(wins >= 9, "feature 0 ranked first in {wins}/10 seeds");
}

#[test]
fn saved_model_reloads_with_identical_predictions() {
    let (x, y) = xor(120, 8);
    let params = ForestParams::default()
        .with_trees(20)
        .with_mode(ClassMode::Binary)
        .with_seed(1);
    let model = train(&x, &y, &params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let back = ForestModel::load(&path).unwrap();
    assert_eq!(back.to_json(), model.to_json());
    assert_eq!(
        back.predict_proba_batch(&x).unwrap(),
        model.predict_proba_batch(&x).unwrap()
    );
}
