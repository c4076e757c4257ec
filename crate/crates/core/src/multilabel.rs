//! Binary relevance and classifier chain meta-estimators.
//!
//! Both hold one binary member per fixture. Member `i` predicts label
//! `label_order[i]`. Binary relevance members see only the window features.
//! A chain member additionally sees the labels of the members before it, in
//! chain order: the true labels while fitting, and the thresholded (0/1)
//! predictions of the earlier members at inference time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{label_column, Split, WindowedDataset};
use crate::fixture::{Fixture, LabelVector, FIXTURES, N_LABELS};
use crate::learner::{BaseLearnerSpec, BinaryClassifier, FittedModel};
use crate::matrix::{Augmented, Design};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaMethod {
    Br,
    Cc,
}

impl MetaMethod {
    pub fn name(self) -> &'static str {
        match self {
            MetaMethod::Br => "br",
            MetaMethod::Cc => "cc",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            MetaMethod::Br => "BR",
            MetaMethod::Cc => "CC",
        }
    }
}

impl fmt::Display for MetaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "br" => Ok(MetaMethod::Br),
            "cc" => Ok(MetaMethod::Cc),
            _ => Err(Error::invalid(format!("unknown meta method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel<M = FittedModel> {
    pub method: MetaMethod,
    /// Width of the base feature rows.
    pub window: usize,
    pub label_order: Vec<Fixture>,
    pub threshold: f64,
    pub members: Vec<M>,
}

/// Per-row label bits and the member probabilities behind them, both in
/// canonical fixture order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prediction {
    pub labels: Vec<LabelVector>,
    pub probabilities: Vec<[f64; N_LABELS]>,
}

/// Seed of the member that predicts `fixture`; shared by both methods so a
/// chain head and the matching binary relevance member are identical.
pub fn member_seed(seed: u64, fixture: Fixture) -> u64 {
    derive_seed(seed, 1_000 + fixture.index() as u64)
}

pub fn check_label_order(order: &[Fixture]) -> Result<()> {
    let mut seen = [false; N_LABELS];
    if order.len() != N_LABELS {
        return Err(Error::invalid(format!(
            "label order must list {N_LABELS} fixtures, got {}",
            order.len()
        )));
    }
    for f in order {
        if core::mem::replace(&mut seen[f.index()], true) {
            return Err(Error::invalid(format!("fixture {f} repeated in label order")));
        }
    }
    Ok(())
}

fn check_inputs(x: &dyn Design, labels: &[LabelVector]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::invalid("training split is empty"));
    }
    if labels.len() != x.n_rows() {
        return Err(Error::Shape {
            what: "label rows",
            expected: x.n_rows(),
            found: labels.len(),
        });
    }
    Ok(())
}

/// One independent member per label, each fit on the window features alone.
pub fn fit_br(
    x: &dyn Design,
    labels: &[LabelVector],
    spec: &BaseLearnerSpec,
    seed: u64,
) -> Result<MetaModel> {
    check_inputs(x, labels)?;
    let members = FIXTURES
        .iter()
        .map(|&f| spec.fit(x, &label_column(labels, f.index()), member_seed(seed, f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaModel {
        method: MetaMethod::Br,
        window: x.n_cols(),
        label_order: FIXTURES.to_vec(),
        threshold: DEFAULT_THRESHOLD,
        members,
    })
}

/// Chain of members in `label_order`; member `i` is fit on the features
/// plus the true labels of members `0..i`.
pub fn fit_cc(
    x: &dyn Design,
    labels: &[LabelVector],
    spec: &BaseLearnerSpec,
    label_order: &[Fixture],
    seed: u64,
) -> Result<MetaModel> {
    check_inputs(x, labels)?;
    check_label_order(label_order)?;
    let truth: Vec<Vec<f64>> = label_order
        .iter()
        .map(|f| {
            labels
                .iter()
                .map(|l| f64::from(u8::from(l.get(f.index()))))
                .collect()
        })
        .collect();
    let mut members = Vec::with_capacity(N_LABELS);
    for (i, &f) in label_order.iter().enumerate() {
        let design = Augmented::new(x, &truth[..i])?;
        let y = label_column(labels, f.index());
        members.push(spec.fit(&design, &y, member_seed(seed, f))?);
    }
    Ok(MetaModel {
        method: MetaMethod::Cc,
        window: x.n_cols(),
        label_order: label_order.to_vec(),
        threshold: DEFAULT_THRESHOLD,
        members,
    })
}

/// Fits either method on the training block of a split dataset.
pub fn fit(
    ds: &WindowedDataset,
    method: MetaMethod,
    spec: &BaseLearnerSpec,
    label_order: &[Fixture],
    seed: u64,
) -> Result<MetaModel> {
    let (x, labels) = ds.part(Split::Train)?;
    match method {
        MetaMethod::Br => fit_br(&x, labels, spec, seed),
        MetaMethod::Cc => fit_cc(&x, labels, spec, label_order, seed),
    }
}

impl<M: BinaryClassifier> MetaModel<M> {
    /// Input width of each member, in chain order.
    pub fn member_widths(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.n_features()).collect()
    }

    /// Predicts every row. Each member is queried once over all rows; a
    /// chain member's extra columns are the thresholded outputs of the
    /// members before it on the same row.
    pub fn predict(&self, x: &dyn Design) -> Result<Prediction> {
        if x.n_cols() != self.window {
            return Err(Error::Shape {
                what: "feature columns",
                expected: self.window,
                found: x.n_cols(),
            });
        }
        if self.members.len() != N_LABELS || self.label_order.len() != N_LABELS {
            return Err(Error::invalid("meta-model must hold one member per fixture"));
        }
        let n = x.n_rows();
        let mut out = Prediction {
            labels: vec![LabelVector::NONE; n],
            probabilities: vec![[0.0; N_LABELS]; n],
        };
        let mut hard: Vec<Vec<f64>> = Vec::with_capacity(N_LABELS);
        for (i, (member, fixture)) in self.members.iter().zip(&self.label_order).enumerate() {
            let probs = match self.method {
                MetaMethod::Br => member.predict_proba(x)?,
                MetaMethod::Cc => member.predict_proba(&Augmented::new(x, &hard[..i])?)?,
            };
            if probs.len() != n {
                return Err(Error::Shape {
                    what: "member predictions",
                    expected: n,
                    found: probs.len(),
                });
            }
            let k = fixture.index();
            let mut bits = Vec::with_capacity(n);
            for (r, &p) in probs.iter().enumerate() {
                let on = p >= self.threshold;
                out.probabilities[r][k] = p;
                out.labels[r].set(k, on);
                bits.push(f64::from(u8::from(on)));
            }
            if self.method == MetaMethod::Cc {
                hard.push(bits);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn label_order_must_be_a_permutation() {
        assert!(check_label_order(&FIXTURES).is_ok());
        let mut order = FIXTURES.to_vec();
        order[1] = Fixture::Toilet;
        assert!(check_label_order(&order).is_err());
        assert!(check_label_order(&order[..4]).is_err());
    }

    #[test]
    fn all_zero_labels_predict_nothing() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let labels = vec![LabelVector::NONE; 30];
        for kind in crate::learner::BaseKind::ALL {
            let spec = BaseLearnerSpec::default_for(kind);
            let meta = fit_br(&x, &labels, &spec, 1).unwrap();
            let pred = meta.predict(&x).unwrap();
            assert!(pred.labels.iter().all(|l| l.is_none()));
        }
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("cc".parse::<MetaMethod>().unwrap(), MetaMethod::Cc);
        assert!("lp".parse::<MetaMethod>().is_err());
    }
}
