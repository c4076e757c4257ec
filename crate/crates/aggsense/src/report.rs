//! Text tables, JSON reports and confusion-matrix CSVs.

use std::fmt::Write as _;
use std::path::Path;

use aggsense_core::eval::{BinaryConfusion, MetricsReport, DOMINANT_CLASSES};
use aggsense_core::FIXTURES;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Aligned plain-text rendering of a metrics report.
pub fn metrics_text(r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rows                {}", r.n_rows);
    let _ = writeln!(s, "f1_micro            {:.4}", r.f1_micro);
    let _ = writeln!(s, "precision_micro     {:.4}", r.precision_micro);
    let _ = writeln!(s, "recall_micro        {:.4}", r.recall_micro);
    let _ = writeln!(s, "subset_accuracy     {:.4}", r.subset_accuracy);
    let _ = writeln!(s, "label_accuracy_mean {:.4}", r.label_accuracy_mean);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16}{:>10}{:>10}{:>10}{:>10}{:>10}",
        "fixture", "accuracy", "tp", "fn", "fp", "tn"
    );
    for (c, acc) in r.confusions.iter().zip(r.per_label_accuracy) {
        let _ = writeln!(
            s,
            "{:<16}{:>10.4}{:>10}{:>10}{:>10}{:>10}",
            c.fixture.name(),
            acc,
            c.true_positive(),
            c.false_negative(),
            c.false_positive(),
            c.true_negative()
        );
    }
    s
}

/// One-vs-rest matrix with actual state as rows and predicted as columns.
pub fn confusion_csv(c: &BinaryConfusion) -> String {
    format!(
        "actual,predicted_active,predicted_inactive\nactive,{},{}\ninactive,{},{}\n",
        c.matrix[0][0], c.matrix[0][1], c.matrix[1][0], c.matrix[1][1]
    )
}

/// Dominant-label multiclass matrix, `actual` rows by `predicted` columns.
pub fn dominant_csv(m: &[Vec<u64>]) -> String {
    let mut s = String::from("actual");
    for name in DOMINANT_CLASSES {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for (name, row) in DOMINANT_CLASSES.iter().zip(m) {
        s.push_str(name);
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::format("json", e.to_string()))
}

/// Writes `metrics.json`, `metrics.txt`, one `confusion_<fixture>.csv` per
/// fixture and `confusion_dominant.csv` into `dir`.
pub fn write_report_files(r: &MetricsReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("metrics.json"), &to_json(r)?)?;
    write(&dir.join("metrics.txt"), &metrics_text(r))?;
    for (c, f) in r.confusions.iter().zip(FIXTURES) {
        write(&dir.join(format!("confusion_{f}.csv")), &confusion_csv(c))?;
    }
    write(&dir.join("confusion_dominant.csv"), &dominant_csv(&r.dominant_confusion))
}

/// A comparison table: named columns, each row one metric in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    /// Printed under the table.
    pub notes: Vec<String>,
}

impl Table {
    /// Markdown rendering with values to two decimals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "### {}", self.title);
        let _ = writeln!(s);
        let _ = write!(s, "| |");
        for c in &self.columns {
            let _ = write!(s, " {c} |");
        }
        let _ = writeln!(s);
        let _ = write!(s, "|---|");
        for _ in &self.columns {
            let _ = write!(s, "---:|");
        }
        let _ = writeln!(s);
        for (name, values) in &self.rows {
            let _ = write!(s, "| {name} |");
            for v in values {
                let _ = write!(s, " {v:.2} |");
            }
            let _ = writeln!(s);
        }
        for n in &self.notes {
            let _ = writeln!(s);
            let _ = writeln!(s, "{n}");
        }
        s
    }
}
