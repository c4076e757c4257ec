//! Monte-Carlo check of the launch process against its configured rate.

use aggsense_core::rng::substream;
use aggsense_core::simulator::{default_configs, simulate_fixture, LogNormalParams};
use aggsense_core::Fixture;

fn rising_edges(flow: &[f64]) -> usize {
    let mut prev = 0.0;
    let mut n = 0;
    for &f in flow {
        if f > 0.0 && prev == 0.0 {
            n += 1;
        }
        prev = f;
    }
    n
}

#[test]
fn toilet_event_count_matches_rate() {
    // Single-step events with a flat daily profile keep merges of
    // back-to-back events rare, so rising edges count launches.
    let mut cfg = default_configs()
        .into_iter()
        .find(|c| c.fixture == Fixture::Toilet)
        .unwrap();
    assert_eq!(cfg.uses_per_day, 10.0);
    cfg.diurnal_weights = [1.0; 24];
    cfg.duration = LogNormalParams::with_median(10.0, 0.0);
    cfg.min_duration_steps = 1;

    let seeds = 200;
    let counts: Vec<f64> = (0..seeds)
        .map(|s| {
            let trace = simulate_fixture(&cfg, 30, 10, &mut substream(s, 0)).unwrap();
            rising_edges(&trace.flow) as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    let se = (var / seeds as f64).sqrt();
    assert!((mean - 300.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn default_toilet_profile_is_close_to_rate() {
    // Overlapping multi-step events merge, so edges can only undercount.
    let cfg = default_configs().remove(0);
    let total: usize = (0..20)
        .map(|s| rising_edges(&simulate_fixture(&cfg, 30, 10, &mut substream(s, 0)).unwrap().flow))
        .sum();
    let mean = total as f64 / 20.0;
    assert!((270.0..=310.0).contains(&mean), "mean {mean}");
}
