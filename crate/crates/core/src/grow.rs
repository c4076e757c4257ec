//! Level-wise exact greedy tree growth shared by CART and boosting.
//!
//! Every column is sorted once. Only nonzero entries are stored: water-flow
//! windows are overwhelmingly zero, so the zero block of each column is
//! handled in bulk as "node total minus the node's nonzero rows". Each level
//! scans every sampled column once and evaluates all frontier nodes at the
//! same time, which keeps the cost per level at `O(nonzeros)`.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! present in a node. Among equal gains the lowest feature index wins, then
//! the lowest threshold. Rows go left when `value <= threshold`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Design;
use crate::{Error, Result};

const NONE: u32 = u32::MAX;

/// Nonzero entries of one column, ascending by `(value, row)`.
struct SparseColumn {
    rows: Vec<u32>,
    vals: Vec<f64>,
    /// Entries `..n_neg` are negative, the rest positive.
    n_neg: usize,
}

pub(crate) struct SortedColumns {
    cols: Vec<SparseColumn>,
    n_rows: usize,
}

impl SortedColumns {
    pub(crate) fn new(x: &dyn Design) -> Result<SortedColumns> {
        let (n, p) = (x.n_rows(), x.n_cols());
        if n >= NONE as usize {
            return Err(Error::invalid("too many rows"));
        }
        let mut entries: Vec<Vec<(f64, u32)>> = (0..p).map(|_| Vec::new()).collect();
        let mut row = vec![0.0; p];
        for r in 0..n {
            x.row_into(r, &mut row);
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite feature value at row {r}, column {c}"
                    )));
                }
                if v != 0.0 {
                    entries[c].push((v, r as u32));
                }
            }
        }
        let cols = entries
            .into_iter()
            .map(|mut e| {
                e.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let n_neg = e.partition_point(|(v, _)| *v < 0.0);
                SparseColumn {
                    rows: e.iter().map(|(_, r)| *r).collect(),
                    vals: e.iter().map(|(v, _)| *v).collect(),
                    n_neg,
                }
            })
            .collect();
        Ok(SortedColumns { cols, n_rows: n })
    }

    pub(crate) fn n_cols(&self) -> usize {
        self.cols.len()
    }
}

pub(crate) trait SplitRule {
    type Stats: Copy + Default;

    fn add_row(&self, acc: &mut Self::Stats, row: usize);
    fn merge(acc: &mut Self::Stats, other: &Self::Stats);
    fn minus(total: &Self::Stats, part: &Self::Stats) -> Self::Stats;
    /// Number of sample instances summarized.
    fn count(s: &Self::Stats) -> u64;
    fn splittable(&self, s: &Self::Stats) -> bool;
    /// Gain of the split, or `None` when it is inadmissible or does not improve.
    fn gain(&self, parent: &Self::Stats, left: &Self::Stats, right: &Self::Stats) -> Option<f64>;
}

/// Chooses the features each node may split on.
pub(crate) trait FeaturePicker {
    /// Called once per level before any node of that level.
    fn begin_level(&mut self, depth: usize);
    /// Ascending feature indices for the next candidate node.
    fn node_features(&mut self) -> Vec<usize>;
}

pub(crate) struct ArenaNode<S> {
    pub stats: S,
    pub split: Option<(usize, f64, usize, usize)>,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi && mid >= lo {
        mid
    } else {
        lo
    }
}

/// Grows one tree over rows with `include[r]`. Returns the node arena; node 0
/// is the root and children always follow their parent.
pub(crate) fn grow<R: SplitRule>(
    x: &dyn Design,
    sorted: &SortedColumns,
    include: &[bool],
    rule: &R,
    max_depth: usize,
    picker: &mut dyn FeaturePicker,
) -> Vec<ArenaNode<R::Stats>> {
    let n = sorted.n_rows;
    let p = sorted.n_cols();
    debug_assert_eq!(include.len(), n);

    let mut node_of = vec![NONE; n];
    let mut root = R::Stats::default();
    for r in 0..n {
        if include[r] {
            node_of[r] = 0;
            rule.add_row(&mut root, r);
        }
    }
    let mut nodes = vec![ArenaNode {
        stats: root,
        split: None,
    }];
    let mut frontier = vec![0usize];

    for depth in 0..max_depth {
        let candidates: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&id| rule.splittable(&nodes[id].stats))
            .collect();
        if candidates.is_empty() {
            break;
        }
        picker.begin_level(depth);
        let mut slot_of = vec![NONE; nodes.len()];
        let mut uses = vec![false; candidates.len() * p];
        let mut used_any = vec![false; p];
        for (s, &id) in candidates.iter().enumerate() {
            slot_of[id] = s as u32;
            for f in picker.node_features() {
                uses[s * p + f] = true;
                used_any[f] = true;
            }
        }
        let totals: Vec<R::Stats> = candidates.iter().map(|&id| nodes[id].stats).collect();
        let mut best: Vec<Option<Best>> = vec![None; candidates.len()];
        let mut acc = vec![R::Stats::default(); candidates.len()];
        let mut nonzero = vec![R::Stats::default(); candidates.len()];
        let mut last: Vec<Option<f64>> = vec![None; candidates.len()];

        let slot_for = |r: u32, f: usize| -> Option<usize> {
            let id = node_of[r as usize];
            if id == NONE {
                return None;
            }
            let s = slot_of[id as usize];
            (s != NONE && uses[s as usize * p + f]).then_some(s as usize)
        };

        for f in (0..p).filter(|&f| used_any[f]) {
            let col = &sorted.cols[f];
            nonzero.fill(R::Stats::default());
            acc.fill(R::Stats::default());
            last.fill(None);
            for &r in &col.rows {
                if let Some(s) = slot_for(r, f) {
                    rule.add_row(&mut nonzero[s], r as usize);
                }
            }

            let mut visit = |s: usize, v: f64, add: &mut dyn FnMut(&mut R::Stats)| {
                if let Some(lv) = last[s] {
                    if v > lv {
                        let right = R::minus(&totals[s], &acc[s]);
                        if let Some(g) = rule.gain(&totals[s], &acc[s], &right) {
                            if best[s].is_none_or(|b| g > b.gain) {
                                best[s] = Some(Best {
                                    gain: g,
                                    feature: f,
                                    threshold: midpoint(lv, v),
                                });
                            }
                        }
                    }
                }
                add(&mut acc[s]);
                last[s] = Some(v);
            };

            for i in 0..col.n_neg {
                let r = col.rows[i];
                if let Some(s) = slot_for(r, f) {
                    visit(s, col.vals[i], &mut |a| rule.add_row(a, r as usize));
                }
            }
            for s in 0..candidates.len() {
                if !uses[s * p + f] {
                    continue;
                }
                let zeros = R::minus(&totals[s], &nonzero[s]);
                if R::count(&zeros) > 0 {
                    visit(s, 0.0, &mut |a| R::merge(a, &zeros));
                }
            }
            for i in col.n_neg..col.rows.len() {
                let r = col.rows[i];
                if let Some(s) = slot_for(r, f) {
                    visit(s, col.vals[i], &mut |a| rule.add_row(a, r as usize));
                }
            }
        }

        // Open children for every node that found an admissible split.
        let mut next = Vec::new();
        let mut child_of: Vec<Option<(usize, f64, usize)>> = vec![None; candidates.len()];
        for (s, &id) in candidates.iter().enumerate() {
            if let Some(b) = best[s] {
                let left = nodes.len();
                nodes.push(ArenaNode {
                    stats: R::Stats::default(),
                    split: None,
                });
                nodes.push(ArenaNode {
                    stats: R::Stats::default(),
                    split: None,
                });
                nodes[id].split = Some((b.feature, b.threshold, left, left + 1));
                child_of[s] = Some((b.feature, b.threshold, left));
                next.push(left);
                next.push(left + 1);
            }
        }
        if next.is_empty() {
            break;
        }
        for r in 0..n {
            let id = node_of[r];
            if id == NONE {
                continue;
            }
            let s = slot_of[id as usize];
            if s == NONE {
                continue;
            }
            if let Some((f, thr, left)) = child_of[s as usize] {
                let child = if x.value(r, f) <= thr { left } else { left + 1 };
                node_of[r] = child as u32;
                rule.add_row(&mut nodes[child].stats, r);
            }
        }
        // The frontier keeps growing only from the freshly opened children;
        // nodes that could not split are final leaves.
        frontier = next;
    }
    nodes
}

/// Converts an arena into a recursive structure bottom-up.
pub(crate) fn build<S, T>(
    nodes: &[ArenaNode<S>],
    id: usize,
    leaf: &dyn Fn(&S) -> T,
    internal: &dyn Fn(usize, f64, T, T) -> T,
) -> T {
    match nodes[id].split {
        None => leaf(&nodes[id].stats),
        Some((f, thr, l, r)) => {
            let left = build(nodes, l, leaf, internal);
            let right = build(nodes, r, leaf, internal);
            internal(f, thr, left, right)
        }
    }
}

/// Picks a uniformly random subset of `k` items from `pool`, returned sorted.
pub(crate) fn sample_sorted(
    rng: &mut crate::rng::Rng,
    pool: &[usize],
    k: usize,
) -> Vec<usize> {
    if k >= pool.len() {
        return pool.to_vec();
    }
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}
