use aggsense_core::dataset::{SplitCounts, Split, WindowedDataset, DEFAULT_FRACTIONS};
use aggsense_core::matrix::Design;
use aggsense_core::LabelVector;
use proptest::prelude::*;

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => Just(0.0), 1 => 0.0f64..20.0], 1..200)
}

fn labels_for(aggregate: &[f64]) -> Vec<LabelVector> {
    aggregate
        .iter()
        .map(|&a| LabelVector::from_bits([a > 0.0, false, false, false, false]))
        .collect()
}

proptest! {
    #[test]
    fn rows_shift_by_one_step(agg in series(), w in 1usize..40) {
        prop_assume!(w <= agg.len());
        let ds = WindowedDataset::new(w, 10, &agg, labels_for(&agg)).unwrap();
        let x = ds.features();
        prop_assert_eq!(x.n_rows(), agg.len());
        for t in 0..agg.len() {
            prop_assert_eq!(x.value(t, w - 1), agg[t]);
            for c in 0..w {
                let src = t as isize - (w - 1 - c) as isize;
                let want = if src < 0 { 0.0 } else { agg[src as usize] };
                prop_assert_eq!(x.value(t, c), want);
            }
            if t > 0 {
                for c in 0..w - 1 {
                    prop_assert_eq!(x.value(t, c), x.value(t - 1, c + 1));
                }
            }
        }
    }

    #[test]
    fn split_blocks_cover_rows_in_order(n in 4usize..100_000) {
        let c = SplitCounts::from_fractions(n, DEFAULT_FRACTIONS).unwrap();
        prop_assert_eq!(c.total(), n);
        prop_assert_eq!(c.train, n / 2);
        prop_assert_eq!(c.val, n / 4);
        prop_assert_eq!(c.range(Split::Train).end, c.range(Split::Val).start);
        prop_assert_eq!(c.range(Split::Val).end, c.range(Split::Test).start);
        prop_assert_eq!(c.range(Split::Test).end, n);
    }

    #[test]
    fn split_tags_are_contiguous(agg in series()) {
        prop_assume!(agg.len() >= 4);
        let ds = WindowedDataset::new(1, 10, &agg, labels_for(&agg))
            .unwrap()
            .split_chronological(DEFAULT_FRACTIONS)
            .unwrap();
        let tags: Vec<Split> = (0..ds.len()).map(|r| ds.split_of(r).unwrap()).collect();
        prop_assert!(tags.windows(2).all(|p| p[0] as u8 <= p[1] as u8));
        let (x, y) = ds.part(Split::Test).unwrap();
        prop_assert_eq!(x.n_rows(), y.len());
    }
}
