//! Online prediction from a stream of aggregate readings.
//!
//! The predictor keeps the last `W` readings in a ring buffer that starts
//! zero-filled, so the first readings see the same left padding as the
//! windowed dataset and both paths produce identical bits.

use alloc::vec;
use alloc::vec::Vec;

use crate::fixture::{LabelVector, N_LABELS};
use crate::learner::BinaryClassifier;
use crate::matrix::Design;
use crate::multilabel::{MetaMethod, MetaModel};
use crate::{Error, Result};

/// A single feature row.
struct RowView<'a>(&'a [f64]);

impl Design for RowView<'_> {
    fn n_rows(&self) -> usize {
        1
    }
    fn n_cols(&self) -> usize {
        self.0.len()
    }
    fn value(&self, _row: usize, col: usize) -> f64 {
        self.0[col]
    }
    fn row_into(&self, _row: usize, out: &mut [f64]) {
        out.copy_from_slice(self.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Zero-based index of the reading.
    pub step: u64,
    pub labels: LabelVector,
    pub probabilities: [f64; N_LABELS],
}

pub struct StreamPredictor<'m, M> {
    model: &'m MetaModel<M>,
    ring: Vec<f64>,
    head: usize,
    steps: u64,
    row: Vec<f64>,
}

impl<'m, M: BinaryClassifier> StreamPredictor<'m, M> {
    pub fn new(model: &'m MetaModel<M>) -> Result<Self> {
        if model.window == 0 {
            return Err(Error::invalid("model window must be positive"));
        }
        if model.members.len() != N_LABELS || model.label_order.len() != N_LABELS {
            return Err(Error::invalid("meta-model must hold one member per fixture"));
        }
        Ok(StreamPredictor {
            model,
            ring: vec![0.0; model.window],
            head: 0,
            steps: 0,
            row: vec![0.0; model.window + N_LABELS],
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Consumes one reading and predicts the current step with one member
    /// call per label. A non-finite reading is rejected and leaves the
    /// window untouched.
    pub fn push(&mut self, flow: f64) -> Result<StepOutput> {
        if !flow.is_finite() {
            return Err(Error::invalid("reading is not a finite number"));
        }
        let w = self.model.window;
        self.ring[self.head] = flow;
        self.head = (self.head + 1) % w;
        let (newer, older) = self.ring.split_at(self.head);
        self.row[..older.len()].copy_from_slice(older);
        self.row[older.len()..w].copy_from_slice(newer);

        let mut out = StepOutput {
            step: self.steps,
            labels: LabelVector::NONE,
            probabilities: [0.0; N_LABELS],
        };
        for (i, (member, fixture)) in self.model.members.iter().zip(&self.model.label_order).enumerate() {
            let width = match self.model.method {
                MetaMethod::Br => w,
                MetaMethod::Cc => w + i,
            };
            let probs = member.predict_proba(&RowView(&self.row[..width]))?;
            let p = *probs.first().ok_or(Error::Shape {
                what: "member predictions",
                expected: 1,
                found: 0,
            })?;
            let on = p >= self.model.threshold;
            out.probabilities[fixture.index()] = p;
            out.labels.set(fixture.index(), on);
            self.row[w + i] = f64::from(u8::from(on));
        }
        self.steps += 1;
        Ok(out)
    }
}
