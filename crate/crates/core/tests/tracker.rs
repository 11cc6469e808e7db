mod common;

use std::time::Instant;

use viopat::tracker::{track, TrackConfig, ViolationSet};

#[test]
fn generated_histories_track_without_errors() {
    for seed in [1, 2, 3] {
        let g = common::tracking::generate(seed, 200, 10);
        let set = ViolationSet::new(&g.history, &g.violations).unwrap();
        let start = Instant::now();
        let result = track(&g.history, &set, &TrackConfig::default());
        let errors = common::tracking::errors(&result, &g);
        assert!(
            errors.is_empty(),
            "seed {seed}: {errors:#?}\nedits {:?}",
            g.edits
        );
        assert_eq!(g.truth.len(), 200);
        assert!(start.elapsed().as_secs() < 10);
    }
}

#[test]
fn generated_histories_cover_every_edit() {
    let g = common::tracking::generate(1, 200, 10);
    for kind in [
        "fix",
        "shift",
        "move",
        "rename-file",
        "delete-method",
        "new",
    ] {
        assert!(
            g.edits.get(kind).copied().unwrap_or(0) > 0,
            "{kind} missing: {:?}",
            g.edits
        );
    }
}
