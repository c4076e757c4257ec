//! Level-wise tree growth against a naive recursive builder that tries every
//! feature and every midpoint at every node.

use aggsense_core::matrix::{DenseMatrix, Design};
use aggsense_core::trees::{fit_tree, Criterion, TreeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum RefNode {
    Leaf(f64),
    Split(usize, f64, Box<RefNode>, Box<RefNode>),
}

fn node_impurity(neg: f64, pos: f64, criterion: Criterion) -> f64 {
    let t = neg + pos;
    let (a, b) = (neg / t, pos / t);
    match criterion {
        Criterion::Gini => 1.0 - (a * a + b * b),
        Criterion::Entropy => [a, b]
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.log2())
            .sum(),
    }
}

fn counts(rows: &[usize], y: &[bool]) -> (f64, f64) {
    let pos = rows.iter().filter(|&&r| y[r]).count() as f64;
    (rows.len() as f64 - pos, pos)
}

fn reference(x: &DenseMatrix, y: &[bool], rows: &[usize], depth: usize, max_depth: usize, criterion: Criterion) -> RefNode {
    let (neg, pos) = counts(rows, y);
    if depth == max_depth || rows.len() < 2 || neg == 0.0 || pos == 0.0 {
        return RefNode::Leaf(pos / (neg + pos));
    }
    let parent = (neg + pos) * node_impurity(neg, pos, criterion);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.n_cols() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x.value(r, f)).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.value(r, f) <= thr).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x.value(r, f) > thr).collect();
            let (ln, lp) = counts(&left, y);
            let (rn, rp) = counts(&right, y);
            let dec = parent
                - (ln + lp) * node_impurity(ln, lp, criterion)
                - (rn + rp) * node_impurity(rn, rp, criterion);
            if dec > 1e-12 * (neg + pos) && best.is_none_or(|b| dec > b.0) {
                best = Some((dec, f, thr));
            }
        }
    }
    match best {
        None => RefNode::Leaf(pos / (neg + pos)),
        Some((_, f, thr)) => {
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.value(r, f) <= thr).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x.value(r, f) > thr).collect();
            RefNode::Split(
                f,
                thr,
                Box::new(reference(x, y, &left, depth + 1, max_depth, criterion)),
                Box::new(reference(x, y, &right, depth + 1, max_depth, criterion)),
            )
        }
    }
}

fn ref_predict(node: &RefNode, row: &[f64]) -> f64 {
    match node {
        RefNode::Leaf(p) => *p,
        RefNode::Split(f, t, l, r) => ref_predict(if row[*f] <= *t { l } else { r }, row),
    }
}

fn xor_set(seed: u64, n: usize) -> (DenseMatrix, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        // a little label noise keeps the trees deep
        let flip = rng.gen::<f64>() < 0.05;
        y.push(((a > 0.5) ^ (b > 0.5)) ^ flip);
        rows.push(vec![a, b]);
    }
    (DenseMatrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn xor_tree_matches_exhaustive_reference() {
    for (seed, criterion) in [(1, Criterion::Gini), (2, Criterion::Entropy), (3, Criterion::Gini)] {
        let (x, y) = xor_set(seed, 200);
        let params = TreeParams {
            criterion,
            max_depth: 8,
            ..TreeParams::default()
        };
        let tree = fit_tree(&x, &y, None, &params, 0).unwrap();
        let rows: Vec<usize> = (0..200).collect();
        let reference = reference(&x, &y, &rows, 0, 8, criterion);

        let mut correct_fast = 0;
        let mut correct_ref = 0;
        for r in 0..200 {
            let fast = tree.predict_row(&x, r);
            let slow = ref_predict(&reference, x.row(r));
            assert!((fast - slow).abs() <= 1e-12, "row {r}: {fast} vs {slow}");
            correct_fast += usize::from((fast >= 0.5) == y[r]);
            correct_ref += usize::from((slow >= 0.5) == y[r]);
        }
        assert_eq!(correct_fast, correct_ref);
        // off-sample probes exercise every threshold comparison
        for i in 0..50 {
            for j in 0..50 {
                let probe = [i as f64 / 49.0, j as f64 / 49.0];
                let px = DenseMatrix::from_rows(&[probe.to_vec()]).unwrap();
                let fast = tree.predict_row(&px, 0);
                let slow = ref_predict(&reference, &probe);
                assert!((fast - slow).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn deep_xor_tree_fits_training_data() {
    let (x, y) = xor_set(7, 200);
    let params = TreeParams {
        max_depth: 30,
        ..TreeParams::default()
    };
    let tree = fit_tree(&x, &y, None, &params, 0).unwrap();
    let acc = (0..200)
        .filter(|&r| (tree.predict_row(&x, r) >= 0.5) == y[r])
        .count();
    assert_eq!(acc, 200);
}
