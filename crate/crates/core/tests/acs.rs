use seizure_acs_core::acs::{
    choose_m, default_m_grid, optimize_m, rank_channels, AcsConfig, ImportanceProvider,
};
use seizure_acs_core::dataset::synth::{synthesize, SynthConfig};
use seizure_acs_core::dataset::{Dataset, Epoch};
use seizure_acs_core::forest::ForestParams;
use seizure_acs_core::pipeline::PipelineConfig;

fn acs(trees: usize, seed: u64) -> AcsConfig {
    AcsConfig {
        providers: vec![ImportanceProvider::RandomForest {
            params: ForestParams::default().with_trees(trees),
        }],
        rng_seed: seed,
        ..AcsConfig::default()
    }
}

fn shipped_32() -> SynthConfig {
    let text = include_str!("../configs/synth_32ch.json");
    SynthConfig::from_json(text).unwrap()
}

fn all_epochs(ds: &Dataset) -> Vec<&Epoch> {
    ds.epochs.iter().collect()
}

#[test]
fn planted_pair_takes_top_two_ranks() {
    let mut hits = 0;
    for seed in 0..10 {
        let cfg = SynthConfig::small(seed);
        let ds = synthesize(&cfg).unwrap();
        let r = rank_channels("s", &all_epochs(&ds), &acs(300, seed)).unwrap();
        let mut top = r.order[..2].to_vec();
        top.sort_unstable();
        hits += usize::from(top == cfg.planted_channels);
    }
    assert!(hits >= 9, "planted pair on top in {hits}/10 seeds");
}

#[test]
fn duplicated_epochs_keep_top_channel() {
    // One planted channel so that top-1 is well defined; with two equally
    // strong channels it is a coin flip regardless of duplication.
    let mut same = 0;
    for seed in 0..10 {
        let mut cfg = SynthConfig::small(20 + seed);
        cfg.planted_channels = vec![5];
        let ds = synthesize(&cfg).unwrap();
        let once = all_epochs(&ds);
        let twice: Vec<&Epoch> = once.iter().flat_map(|e| [*e, *e]).collect();
        let a = rank_channels("s", &once, &acs(300, seed)).unwrap();
        let b = rank_channels("s", &twice, &acs(300, seed)).unwrap();
        same += usize::from(a.order[0] == b.order[0]);
    }
    assert!(same >= 9, "top-1 unchanged in {same}/10 seeds");
}

#[test]
fn ranking_ignores_unlabelled_epochs() {
    let ds = synthesize(&SynthConfig::small(3)).unwrap();
    let mut extra = ds.epochs[0].clone();
    extra.label = seizure_acs_core::dataset::Label::Unlabeled;
    let mut with_extra = all_epochs(&ds);
    with_extra.push(&extra);
    let a = rank_channels("s", &all_epochs(&ds), &acs(50, 1)).unwrap();
    let b = rank_channels("s", &with_extra, &acs(50, 1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn optimized_m_is_small_for_four_planted_channels() {
    let mut small = 0;
    for seed in 0..10 {
        let cfg = SynthConfig {
            rng_seed: seed,
            ..shipped_32()
        };
        let ds = synthesize(&cfg).unwrap();
        let ranking = rank_channels("s", &all_epochs(&ds), &acs(300, seed)).unwrap();
        let pipeline = PipelineConfig::new(8, 50, seed);
        let sweep = optimize_m(&ds, &ranking, &pipeline, &default_m_grid(32)).unwrap();
        assert_eq!(sweep.chosen, choose_m(&sweep.points).unwrap());
        assert_eq!(
            sweep.points.iter().map(|p| p.m).collect::<Vec<_>>(),
            default_m_grid(32)
        );
        small += usize::from(sweep.chosen <= 8);
    }
    assert!(small >= 8, "M <= 8 in {small}/10 seeds");
}
