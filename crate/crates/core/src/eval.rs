//! Multi-label evaluation: micro-averaged F1, subset and per-label accuracy,
//! and per-fixture one-vs-rest confusion matrices.
//!
//! Zero-division convention: precision or recall with an empty denominator
//! is 0, and F1 is 0 when precision + recall is 0.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fixture::{Fixture, LabelVector, FIXTURES, N_LABELS};
use crate::{Error, Result};

/// Cell counts pooled over every (row, label) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl MicroCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion of one fixture against everything else. Rows are the actual
/// state (active, inactive), columns the predicted state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub fixture: Fixture,
    pub matrix: [[u64; 2]; 2],
}

impl BinaryConfusion {
    pub fn true_positive(&self) -> u64 {
        self.matrix[0][0]
    }
    pub fn false_negative(&self) -> u64 {
        self.matrix[0][1]
    }
    pub fn false_positive(&self) -> u64 {
        self.matrix[1][0]
    }
    pub fn true_negative(&self) -> u64 {
        self.matrix[1][1]
    }
    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }
}

fn check_shapes(pred: &[LabelVector], truth: &[LabelVector]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Shape {
            what: "prediction rows",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    Ok(())
}

fn check_nonempty(truth: &[LabelVector]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::invalid("accuracy of zero rows is undefined"));
    }
    Ok(())
}

pub fn micro_counts(pred: &[LabelVector], truth: &[LabelVector]) -> Result<MicroCounts> {
    check_shapes(pred, truth)?;
    let mut c = MicroCounts::default();
    for (p, t) in pred.iter().zip(truth) {
        for k in 0..N_LABELS {
            c.add(p.get(k), t.get(k));
        }
    }
    Ok(c)
}

pub fn f1_micro(pred: &[LabelVector], truth: &[LabelVector]) -> Result<f64> {
    Ok(micro_counts(pred, truth)?.f1())
}

/// Fraction of rows whose five bits all match.
pub fn subset_accuracy(pred: &[LabelVector], truth: &[LabelVector]) -> Result<f64> {
    check_shapes(pred, truth)?;
    check_nonempty(truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Per-fixture fraction of matching bits.
pub fn per_label_accuracy(pred: &[LabelVector], truth: &[LabelVector]) -> Result<[f64; N_LABELS]> {
    check_shapes(pred, truth)?;
    check_nonempty(truth)?;
    let mut hits = [0u64; N_LABELS];
    for (p, t) in pred.iter().zip(truth) {
        for (k, h) in hits.iter_mut().enumerate() {
            *h += u64::from(p.get(k) == t.get(k));
        }
    }
    Ok(hits.map(|h| h as f64 / truth.len() as f64))
}

pub fn one_vs_rest_confusions(
    pred: &[LabelVector],
    truth: &[LabelVector],
) -> Result<Vec<BinaryConfusion>> {
    check_shapes(pred, truth)?;
    let mut out: Vec<BinaryConfusion> = FIXTURES
        .iter()
        .map(|&fixture| BinaryConfusion {
            fixture,
            matrix: [[0; 2]; 2],
        })
        .collect();
    for (p, t) in pred.iter().zip(truth) {
        for (k, c) in out.iter_mut().enumerate() {
            let row = usize::from(!t.get(k));
            let col = usize::from(!p.get(k));
            c.matrix[row][col] += 1;
        }
    }
    Ok(out)
}

/// Single-class view of a label vector: 0 for "none active", otherwise
/// `1 + k` for the lowest active fixture index `k`.
pub fn dominant_class(v: LabelVector) -> usize {
    if v.is_none() {
        0
    } else {
        1 + v.mask().trailing_zeros() as usize
    }
}

/// Class names of the dominant-label view, indexable by [`dominant_class`].
pub const DOMINANT_CLASSES: [&str; N_LABELS + 1] = [
    "none",
    "toilet",
    "shower",
    "faucet",
    "clothes_washer",
    "dishwasher",
];

/// Multiclass confusion over [`dominant_class`]: `matrix[actual][predicted]`.
pub fn dominant_confusion(pred: &[LabelVector], truth: &[LabelVector]) -> Result<Vec<Vec<u64>>> {
    check_shapes(pred, truth)?;
    let mut m = vec![vec![0u64; N_LABELS + 1]; N_LABELS + 1];
    for (p, t) in pred.iter().zip(truth) {
        m[dominant_class(*t)][dominant_class(*p)] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_rows: usize,
    pub f1_micro: f64,
    pub precision_micro: f64,
    pub recall_micro: f64,
    pub subset_accuracy: f64,
    pub per_label_accuracy: [f64; N_LABELS],
    /// Mean of the per-label accuracies, i.e. accuracy over all 5N cells.
    pub label_accuracy_mean: f64,
    pub counts: MicroCounts,
    pub confusions: Vec<BinaryConfusion>,
    pub dominant_confusion: Vec<Vec<u64>>,
}

pub fn evaluate(pred: &[LabelVector], truth: &[LabelVector]) -> Result<MetricsReport> {
    let counts = micro_counts(pred, truth)?;
    let per_label = per_label_accuracy(pred, truth)?;
    Ok(MetricsReport {
        n_rows: truth.len(),
        f1_micro: counts.f1(),
        precision_micro: counts.precision(),
        recall_micro: counts.recall(),
        subset_accuracy: subset_accuracy(pred, truth)?,
        per_label_accuracy: per_label,
        label_accuracy_mean: ratio(counts.tp + counts.tn, counts.total()),
        counts,
        confusions: one_vs_rest_confusions(pred, truth)?,
        dominant_confusion: dominant_confusion(pred, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(bits: [u8; 5]) -> LabelVector {
        LabelVector::from_bits(bits.map(|b| b == 1))
    }

    #[test]
    fn perfect_prediction() {
        let truth = vec![lv([1, 0, 0, 0, 0]), lv([0, 1, 1, 0, 0]), lv([0; 5])];
        assert_eq!(f1_micro(&truth, &truth).unwrap(), 1.0);
        assert_eq!(subset_accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(per_label_accuracy(&truth, &truth).unwrap(), [1.0; 5]);
        for c in one_vs_rest_confusions(&truth, &truth).unwrap() {
            assert_eq!(c.false_negative() + c.false_positive(), 0);
        }
    }

    #[test]
    fn two_thirds() {
        // TP = 2, FP = 1, FN = 1
        let truth = vec![lv([1, 1, 0, 0, 0]), lv([0, 0, 1, 0, 0])];
        let pred = vec![lv([1, 1, 0, 0, 1]), lv([0, 0, 0, 0, 0])];
        let c = micro_counts(&pred, &truth).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (2, 1, 1));
        assert!((c.precision() - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.recall() - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.f1() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_division_conventions() {
        let none = vec![lv([0; 5]); 3];
        assert_eq!(f1_micro(&none, &none).unwrap(), 0.0);
        let c = micro_counts(&none, &none).unwrap();
        assert_eq!((c.precision(), c.recall()), (0.0, 0.0));
    }

    #[test]
    fn all_zero_predictor_on_mostly_idle_data() {
        let mut truth = vec![lv([0; 5]); 96];
        truth.extend(vec![lv([0, 0, 1, 0, 0]); 4]);
        let pred = vec![lv([0; 5]); 100];
        assert!((subset_accuracy(&pred, &truth).unwrap() - 0.96).abs() < 1e-15);
        assert_eq!(f1_micro(&pred, &truth).unwrap(), 0.0);
    }

    #[test]
    fn single_missed_toilet() {
        let c = one_vs_rest_confusions(&[lv([0; 5])], &[lv([1, 0, 0, 0, 0])]).unwrap();
        assert_eq!(c[0].false_negative(), 1);
        assert_eq!(c[0].total(), 1);
        assert_eq!(c[1].true_negative(), 1);
    }

    #[test]
    fn shape_mismatch() {
        assert!(f1_micro(&[lv([0; 5])], &[]).is_err());
        assert!(subset_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn dominant_view() {
        assert_eq!(dominant_class(lv([0; 5])), 0);
        assert_eq!(dominant_class(lv([0, 0, 1, 0, 1])), 3);
        assert_eq!(DOMINANT_CLASSES[dominant_class(lv([0, 0, 0, 0, 1]))], "dishwasher");
        let m = dominant_confusion(&[lv([0, 0, 1, 0, 0])], &[lv([0, 0, 0, 0, 1])]).unwrap();
        assert_eq!(m[5][3], 1);
    }

    #[test]
    fn report_invariants() {
        let truth = vec![lv([1, 0, 0, 0, 0]), lv([0, 1, 1, 0, 0]), lv([0; 5])];
        let pred = vec![lv([1, 0, 1, 0, 0]), lv([0, 1, 0, 0, 0]), lv([0; 5])];
        let r = evaluate(&pred, &truth).unwrap();
        assert_eq!(r.counts.total(), 15);
        for c in &r.confusions {
            assert_eq!(c.total(), 3);
        }
        assert_eq!(r.f1_micro, r.counts.f1());
    }
}
