use ankle_shared::gait_data::{GaitDataset, GaitTrial, LocomotionMode, MIN_TRIAL_SAMPLES};
use proptest::prelude::*;

fn trial_strategy() -> impl Strategy<Value = GaitTrial> {
    (MIN_TRIAL_SAMPLES..160usize, 0..5usize, 10.0..2000.0f64, "[A-Za-z0-9_-]{1,12}")
        .prop_flat_map(|(n, mode, fs, id)| {
            let col = || proptest::collection::vec(-1e4..1e4f64, n);
            (Just(id), Just(mode), Just(fs), col(), col(), col(), col())
        })
        .prop_map(|(id, mode, fs, h, k, a, t)| {
            GaitTrial::new(id, LocomotionMode::ALL[mode], fs, h, k, a, t).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(trial in trial_strategy()) {
        let text = trial.to_csv_string();
        let back = GaitTrial::from_csv_str(&text, "mem").unwrap();
        prop_assert_eq!(&back, &trial);
        prop_assert_eq!(back.to_csv_string(), text);
    }
}

#[test]
fn directory_round_trip_preserves_dataset() {
    let cfg = ankle_shared::synth::SynthConfig::default();
    let ds = ankle_shared::synth::generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for t in ds.trials() {
        std::fs::write(dir.path().join(format!("{}.csv", t.trial_id())), t.to_csv_string()).unwrap();
    }
    let loaded = GaitDataset::load_dir(dir.path()).unwrap();
    assert_eq!(loaded.len(), 41);
    for t in ds.trials() {
        assert_eq!(loaded.get(t.trial_id()), Some(t));
    }
}
