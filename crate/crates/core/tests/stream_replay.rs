//! Replaying a series reading by reading reproduces batch predictions.

use aggsense_core::boosting::GbtParams;
use aggsense_core::dataset::{window_series, DEFAULT_FRACTIONS};
use aggsense_core::learner::BaseLearnerSpec;
use aggsense_core::multilabel::{fit, MetaMethod};
use aggsense_core::neural::MlpConfig;
use aggsense_core::simulator::{default_configs, simulate_household};
use aggsense_core::stream::StreamPredictor;
use aggsense_core::trees::ForestParams;
use aggsense_core::FIXTURES;

#[test]
fn stream_and_batch_agree_bit_exactly() {
    let series = simulate_household(&default_configs(), 2, 10, 4).unwrap();
    let ds = window_series(&series, 9)
        .unwrap()
        .split_chronological(DEFAULT_FRACTIONS)
        .unwrap();
    let specs = [
        BaseLearnerSpec::Forest(ForestParams {
            n_estimators: 6,
            max_depth: 6,
            ..ForestParams::default()
        }),
        BaseLearnerSpec::Gbt(GbtParams {
            n_estimators: 12,
            max_depth: 4,
            ..GbtParams::default()
        }),
        BaseLearnerSpec::Mlp(MlpConfig {
            hidden: vec![6, 4],
            epochs: 2,
            ..MlpConfig::default()
        }),
    ];
    for spec in &specs {
        for method in [MetaMethod::Br, MetaMethod::Cc] {
            let meta = fit(&ds, method, spec, &FIXTURES, 8).unwrap();
            let batch = meta.predict(&ds.features()).unwrap();
            let mut stream = StreamPredictor::new(&meta).unwrap();
            for (t, &flow) in series.aggregate.iter().enumerate() {
                let out = stream.push(flow).unwrap();
                assert_eq!(out.labels, batch.labels[t], "{:?} {method} step {t}", spec.kind());
                for k in 0..5 {
                    assert_eq!(out.probabilities[k].to_bits(), batch.probabilities[t][k].to_bits());
                }
            }
        }
    }
}

#[test]
fn silent_meter_predicts_nothing() {
    let series = simulate_household(&default_configs(), 3, 10, 21).unwrap();
    let ds = window_series(&series, 30)
        .unwrap()
        .split_chronological(DEFAULT_FRACTIONS)
        .unwrap();
    let spec = BaseLearnerSpec::Gbt(GbtParams {
        n_estimators: 30,
        max_depth: 4,
        ..GbtParams::default()
    });
    let meta = fit(&ds, MetaMethod::Cc, &spec, &FIXTURES, 1).unwrap();
    let mut stream = StreamPredictor::new(&meta).unwrap();
    for _ in 0..500 {
        assert!(stream.push(0.0).unwrap().labels.is_none());
    }
}
