use aggsense_core::dataset::{window_series, WindowedDataset, DEFAULT_FRACTIONS};
use aggsense_core::learner::{BaseKind, BaseLearnerSpec};
use aggsense_core::multilabel::MetaMethod;
use aggsense_core::neural::Optimizer;
use aggsense_core::simulator::{default_configs, simulate_household};
use aggsense_core::trees::{ClassWeight, Criterion, ForestParams, MaxFeatures};
use aggsense_core::tuning::{
    published_spec, random_search, SearchRequest, SearchResult, SearchSpace, TrialRecord,
};
use aggsense_core::FIXTURES;

fn dataset() -> WindowedDataset {
    let series = simulate_household(&default_configs(), 1, 10, 17).unwrap();
    window_series(&series, 6)
        .unwrap()
        .split_chronological(DEFAULT_FRACTIONS)
        .unwrap()
}

fn small_forest_space() -> SearchSpace {
    let mut space = SearchSpace::default_for(BaseKind::Forest);
    if let SearchSpace::Forest(s) = &mut space {
        s.n_estimators = vec![3, 5];
        s.max_depth = vec![3, 4, 5];
    }
    space
}

fn run(space: &SearchSpace, method: MetaMethod, budget: usize, seed: u64) -> SearchResult {
    let req = SearchRequest {
        space,
        method,
        label_order: &FIXTURES,
        budget,
        seed,
    };
    random_search(&req, &dataset(), || 0.0, |_| {}).unwrap()
}

#[test]
fn published_values_are_reachable() {
    let chosen = ForestParams {
        n_estimators: 475,
        criterion: Criterion::Entropy,
        max_depth: 9,
        max_features: MaxFeatures::Sqrt,
        class_weight: ClassWeight::Balanced,
    };
    let rf = SearchSpace::default_for(BaseKind::Forest);
    assert!(rf.contains(&BaseLearnerSpec::Forest(chosen)));
    for kind in BaseKind::ALL {
        let space = SearchSpace::default_for(kind);
        for w in [60, 120, 240, 480] {
            let spec = published_spec(kind, w).unwrap();
            assert!(space.contains(&spec), "{kind} window {w}");
            spec.validate().unwrap();
        }
    }
    assert!(published_spec(BaseKind::Gbt, 100).is_none());
}

#[test]
fn single_trial_returns_its_config() {
    let result = run(&small_forest_space(), MetaMethod::Br, 1, 5);
    assert_eq!(result.trials.len(), 1);
    assert_eq!(result.best_index, 0);
}

#[test]
fn one_point_space_always_wins() {
    let mut space = small_forest_space();
    if let SearchSpace::Forest(s) = &mut space {
        s.n_estimators = vec![4];
        s.criterion = vec![Criterion::Gini];
        s.max_depth = vec![4];
        s.max_features = vec![MaxFeatures::Auto];
        s.class_weight = vec![ClassWeight::None];
    }
    let result = run(&space, MetaMethod::Cc, 3, 1);
    for t in &result.trials {
        assert_eq!(t.spec, result.best().spec);
    }
}

#[test]
fn search_is_deterministic_and_picks_the_maximum() {
    let space = small_forest_space();
    let a = run(&space, MetaMethod::Cc, 5, 99);
    let b = run(&space, MetaMethod::Cc, 5, 99);
    assert_eq!(a, b);
    let max = a.trials.iter().map(|t| t.val_f1_micro).fold(f64::MIN, f64::max);
    assert_eq!(a.best().val_f1_micro, max);
    let first = a.trials.iter().position(|t| t.val_f1_micro == max).unwrap();
    assert_eq!(a.best_index, first);
    assert!(a.trials.iter().all(|t| (0.0..=1.0).contains(&t.val_f1_micro)));

    // A larger budget extends the smaller one.
    let c = run(&space, MetaMethod::Cc, 7, 99);
    assert_eq!(&c.trials[..5], &a.trials[..]);
}

#[test]
fn trial_log_round_trips() {
    let result = run(&small_forest_space(), MetaMethod::Br, 3, 2);
    let text = serde_json::to_string(&result).unwrap();
    let back: SearchResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, result);
    for kind in BaseKind::ALL {
        let space = SearchSpace::default_for(kind);
        let text = serde_json::to_string(&space).unwrap();
        assert_eq!(serde_json::from_str::<SearchSpace>(&text).unwrap(), space);
    }
}

#[test]
fn diverging_trial_scores_zero_and_search_continues() {
    let mut space = SearchSpace::default_for(BaseKind::Mlp);
    if let SearchSpace::Mlp(s) = &mut space {
        s.hidden_layers = vec![1];
        s.hidden_units = vec![4];
        s.epochs = vec![3];
        s.optimizer = vec![Optimizer::Sgd];
        s.learning_rate = vec![1e300];
        s.batch_size = vec![32];
    }
    let mut seen: Vec<TrialRecord> = Vec::new();
    let req = SearchRequest {
        space: &space,
        method: MetaMethod::Br,
        label_order: &FIXTURES,
        budget: 2,
        seed: 0,
    };
    let result = random_search(&req, &dataset(), || 0.0, |t| seen.push(t.clone())).unwrap();
    assert_eq!(seen.len(), 2);
    for t in &result.trials {
        assert_eq!(t.val_f1_micro, 0.0);
        assert!(t.error.is_some());
    }
}

#[test]
fn zero_budget_is_rejected() {
    let space = small_forest_space();
    let req = SearchRequest {
        space: &space,
        method: MetaMethod::Br,
        label_order: &FIXTURES,
        budget: 0,
        seed: 0,
    };
    assert!(random_search(&req, &dataset(), || 0.0, |_| {}).is_err());
}
