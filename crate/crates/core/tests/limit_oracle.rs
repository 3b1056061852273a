mod support;

use evoflight::fixtures::{fixture_registry, price_of_anarchy_e1};
use support::{dense_tracker, sup_gap};

#[test]
fn dense_grid_tracker_agrees_with_event_engine() {
    for fx in fixture_registry()
        .into_iter()
        .chain([price_of_anarchy_e1()])
    {
        let run = fx.run_limit().unwrap();
        let track = dense_tracker(&fx.model, &fx.v0, run.paths.end, 1e-5, 10);
        let gap = sup_gap(&track, &run);
        assert!(gap <= 1e-4, "{}: gap {gap}", fx.name);
        let engine = run.log.invasion_times();
        assert_eq!(track.invasions.len(), engine.len(), "{}", fx.name);
        for (a, b) in track.invasions.iter().zip(&engine) {
            assert!((a - b).abs() < 1e-4, "{}: {a} vs {b}", fx.name);
        }
    }
}
