//! Sliding-window samples over the aggregate signal.
//!
//! A [`WindowedDataset`] has one sample per time step. Row `t` holds the
//! aggregate readings `t-W+1 ..= t` (oldest first), with zeros standing in for
//! steps before the start of the series, and the label vector at `t`. Rows are
//! never materialized: the dataset keeps the zero-padded signal and hands out
//! [`LaggedView`]s over it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::fixture::{LabelVector, N_LABELS};
use crate::matrix::{Design, LaggedView};
use crate::simulator::HouseholdSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Sizes of the three chronological blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    /// `floor(n * train)` rows for training, `floor(n * val)` for validation,
    /// the remainder for test.
    pub fn from_fractions(n: usize, fractions: [f64; 3]) -> Result<SplitCounts> {
        if fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        if libm::fabs(fractions.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(Error::invalid("split fractions must sum to 1"));
        }
        let train = libm::floor(n as f64 * fractions[0]) as usize;
        let val = libm::floor(n as f64 * fractions[1]) as usize;
        let counts = SplitCounts {
            train,
            val,
            test: n.saturating_sub(train + val),
        };
        if counts.train == 0 || counts.val == 0 || counts.test == 0 {
            return Err(Error::invalid(format!(
                "{n} samples are too few for three nonempty splits"
            )));
        }
        Ok(counts)
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn range(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => 0..self.train,
            Split::Val => self.train..self.train + self.val,
            Split::Test => self.train + self.val..self.total(),
        }
    }
}

/// Half for training, a quarter each for validation and test.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.5, 0.25, 0.25];

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    window: usize,
    step_seconds: u32,
    /// `window - 1` zeros followed by the aggregate series.
    padded: Vec<f64>,
    labels: Vec<LabelVector>,
    split: Option<SplitCounts>,
}

/// Windows a household series with width `window`.
pub fn window_series(series: &HouseholdSeries, window: usize) -> Result<WindowedDataset> {
    WindowedDataset::new(
        window,
        series.step_seconds,
        &series.aggregate,
        series.labels.clone(),
    )
}

impl WindowedDataset {
    pub fn new(
        window: usize,
        step_seconds: u32,
        aggregate: &[f64],
        labels: Vec<LabelVector>,
    ) -> Result<WindowedDataset> {
        if window == 0 {
            return Err(Error::invalid("window size must be at least 1"));
        }
        if aggregate.len() != labels.len() {
            return Err(Error::Shape {
                what: "label rows",
                expected: aggregate.len(),
                found: labels.len(),
            });
        }
        if window > aggregate.len() {
            return Err(Error::invalid(format!(
                "window {window} exceeds series length {}",
                aggregate.len()
            )));
        }
        let mut padded = vec![0.0; window - 1];
        padded.extend_from_slice(aggregate);
        Ok(WindowedDataset {
            window,
            step_seconds,
            padded,
            labels,
            split: None,
        })
    }

    /// Assigns chronological split tags.
    pub fn split_chronological(mut self, fractions: [f64; 3]) -> Result<WindowedDataset> {
        self.split = Some(SplitCounts::from_fractions(self.len(), fractions)?);
        Ok(self)
    }

    /// Restores split tags read back from storage.
    pub fn with_split(mut self, counts: Option<SplitCounts>) -> Result<WindowedDataset> {
        if let Some(c) = counts {
            if c.total() != self.len() {
                return Err(Error::Shape {
                    what: "split total",
                    expected: self.len(),
                    found: c.total(),
                });
            }
        }
        self.split = counts;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn step_seconds(&self) -> u32 {
        self.step_seconds
    }

    /// The unpadded aggregate series.
    pub fn aggregate(&self) -> &[f64] {
        &self.padded[self.window - 1..]
    }

    pub fn labels(&self) -> &[LabelVector] {
        &self.labels
    }

    pub fn split_counts(&self) -> Option<SplitCounts> {
        self.split
    }

    pub fn split_of(&self, row: usize) -> Option<Split> {
        let c = self.split?;
        Split::ALL.into_iter().find(|s| c.range(*s).contains(&row))
    }

    pub fn features(&self) -> LaggedView<'_> {
        self.rows(0..self.len())
    }

    /// Feature rows `range` as a view.
    pub fn rows(&self, range: Range<usize>) -> LaggedView<'_> {
        assert!(range.end <= self.len(), "row range out of bounds");
        LaggedView::new(&self.padded, range.start, range.len(), self.window)
            .expect("range checked against dataset length")
    }

    /// Features and labels of one split block.
    pub fn part(&self, split: Split) -> Result<(LaggedView<'_>, &[LabelVector])> {
        let counts = self
            .split
            .ok_or_else(|| Error::invalid("dataset has no split tags; run split first"))?;
        let range = counts.range(split);
        Ok((self.rows(range.clone()), &self.labels[range]))
    }
}

/// Column `k` of a label matrix as booleans.
pub fn label_column(labels: &[LabelVector], k: usize) -> Vec<bool> {
    debug_assert!(k < N_LABELS);
    labels.iter().map(|l| l.get(k)).collect()
}

/// Per-column affine rescaling to zero mean and unit variance, fitted on
/// training rows only. Constant columns are left unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &dyn Design) -> Result<Standardizer> {
        let (n, p) = (x.n_rows(), x.n_cols());
        if n == 0 {
            return Err(Error::invalid("cannot standardize an empty matrix"));
        }
        let mut mean = vec![0.0; p];
        let mut m2 = vec![0.0; p];
        let mut row = vec![0.0; p];
        // Welford, row by row.
        for r in 0..n {
            x.row_into(r, &mut row);
            let k = (r + 1) as f64;
            for c in 0..p {
                let d = row[c] - mean[c];
                mean[c] += d / k;
                m2[c] += d * (row[c] - mean[c]);
            }
        }
        let scale = m2
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s / n as f64);
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(agg: &[f64], w: usize) -> WindowedDataset {
        WindowedDataset::new(w, 10, agg, vec![LabelVector::NONE; agg.len()]).unwrap()
    }

    fn rows_of(d: &WindowedDataset) -> Vec<Vec<f64>> {
        let v = d.features();
        (0..d.len()).map(|r| v.row(r).to_vec()).collect()
    }

    #[test]
    fn window_of_one() {
        assert_eq!(
            rows_of(&ds(&[1.0, 2.0, 3.0], 1)),
            vec![vec![1.0], vec![2.0], vec![3.0]]
        );
    }

    #[test]
    fn window_zero_pads_the_start() {
        assert_eq!(
            rows_of(&ds(&[1.0, 2.0, 3.0], 2)),
            vec![vec![0.0, 1.0], vec![1.0, 2.0], vec![2.0, 3.0]]
        );
    }

    #[test]
    fn window_larger_than_series_is_rejected() {
        let err = WindowedDataset::new(4, 10, &[1.0; 3], vec![LabelVector::NONE; 3]);
        assert!(err.is_err());
        assert!(WindowedDataset::new(0, 10, &[1.0; 3], vec![LabelVector::NONE; 3]).is_err());
    }

    #[test]
    fn split_floor_rule() {
        let c = SplitCounts::from_fractions(8, DEFAULT_FRACTIONS).unwrap();
        assert_eq!((c.train, c.val, c.test), (4, 2, 2));
        let c = SplitCounts::from_fractions(9, DEFAULT_FRACTIONS).unwrap();
        assert_eq!((c.train, c.val, c.test), (4, 2, 3));
        let c = SplitCounts::from_fractions(1_555_200, DEFAULT_FRACTIONS).unwrap();
        assert_eq!((c.train, c.val, c.test), (777_600, 388_800, 388_800));
        assert!(SplitCounts::from_fractions(3, DEFAULT_FRACTIONS).is_err());
        assert!(SplitCounts::from_fractions(100, [0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn split_tags_are_contiguous() {
        let d = ds(&[1.0; 9], 2).split_chronological(DEFAULT_FRACTIONS).unwrap();
        let tags: Vec<_> = (0..9).map(|r| d.split_of(r).unwrap()).collect();
        assert_eq!(&tags[..4], &[Split::Train; 4]);
        assert_eq!(&tags[4..6], &[Split::Val; 2]);
        assert_eq!(&tags[6..], &[Split::Test; 3]);
        let (x, y) = d.part(Split::Test).unwrap();
        assert_eq!((x.n_rows(), y.len()), (3, 3));
    }

    #[test]
    fn part_requires_split() {
        assert!(ds(&[1.0; 9], 2).part(Split::Train).is_err());
    }

    #[test]
    fn standardizer_centers_columns() {
        let d = ds(&[1.0, 2.0, 3.0, 4.0, 5.0], 1);
        let s = Standardizer::fit(&d.features()).unwrap();
        assert!((s.mean[0] - 3.0).abs() < 1e-12);
        assert!((s.scale[0] - 2f64.sqrt()).abs() < 1e-12);
        let mut row = [5.0];
        s.apply(&mut row);
        assert!((row[0] - 2f64.sqrt()).abs() < 1e-12);
    }
}
