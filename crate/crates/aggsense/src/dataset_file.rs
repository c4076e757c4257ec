//! Binary dataset container and its CSV export.
//!
//! All integers and floats are little-endian.
//!
//! | bytes   | field                                              |
//! |---------|----------------------------------------------------|
//! | 8       | magic `AGSDATA\0`                                  |
//! | 4       | format version (u32, currently 1)                  |
//! | 8       | row count N (u64)                                  |
//! | 4       | window W (u32)                                     |
//! | 4       | step seconds (u32)                                 |
//! | 5       | label order, fixture indices of bits 0..4 (u8 each)|
//! | 1       | 1 if split counts follow as meaningful, else 0     |
//! | 24      | train, val, test row counts (u64 each)             |
//! | 8 N     | aggregate series (f64)                             |
//! | N       | label bits per row (u8, bit k = fixture k)         |
//!
//! Only the aggregate is stored; feature rows are rebuilt from it, so the
//! same file can be re-windowed at any width.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use aggsense_core::dataset::{SplitCounts, WindowedDataset};
use aggsense_core::matrix::Design;
use aggsense_core::{LabelVector, FIXTURES, N_LABELS};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"AGSDATA\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 4 + 4 + N_LABELS + 1 + 24;

pub fn encode_dataset(ds: &WindowedDataset) -> Vec<u8> {
    let n = ds.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 9 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(ds.window() as u32).to_le_bytes());
    out.extend_from_slice(&ds.step_seconds().to_le_bytes());
    out.extend(FIXTURES.iter().map(|f| f.index() as u8));
    let split = ds.split_counts();
    out.push(u8::from(split.is_some()));
    let c = split.unwrap_or(SplitCounts { train: 0, val: 0, test: 0 });
    for v in [c.train, c.val, c.test] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for a in ds.aggregate() {
        out.extend_from_slice(&a.to_le_bytes());
    }
    out.extend(ds.labels().iter().map(|l| l.mask()));
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
    context: &'a str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::format(self.context, format!("truncated at byte {}", self.buf.len()))
        })?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::format(self.context, "count does not fit in memory"))
    }
}

pub fn decode_dataset(buf: &[u8], context: &str) -> Result<WindowedDataset> {
    let bad = |msg: String| Error::format(context, msg);
    let mut c = Cursor { buf, at: 0, context };
    if c.take(8)? != MAGIC {
        return Err(bad("not a dataset file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let n = c.usize()?;
    let window = c.u32()? as usize;
    let step_seconds = c.u32()?;
    let order = c.take(N_LABELS)?;
    if order.iter().enumerate().any(|(k, &f)| f as usize != k) {
        return Err(bad("unsupported label order; expected canonical fixture order".into()));
    }
    let has_split = match c.take(1)?[0] {
        0 => false,
        1 => true,
        v => return Err(bad(format!("bad split flag {v}"))),
    };
    let counts = SplitCounts {
        train: c.usize()?,
        val: c.usize()?,
        test: c.usize()?,
    };
    if buf.len() != HEADER_LEN + 9 * n {
        return Err(bad(format!(
            "expected {} bytes for {n} rows, found {}",
            HEADER_LEN + 9 * n,
            buf.len()
        )));
    }
    let mut aggregate = Vec::with_capacity(n);
    for row in 0..n {
        let v = f64::from_le_bytes(c.take(8)?.try_into().unwrap());
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad(format!("row {row}: aggregate must be a nonnegative number")));
        }
        aggregate.push(v);
    }
    let labels = c
        .take(n)?
        .iter()
        .enumerate()
        .map(|(row, &m)| LabelVector::from_mask(m).ok_or_else(|| bad(format!("row {row}: bad label byte {m}"))))
        .collect::<Result<Vec<_>>>()?;
    let ds = WindowedDataset::new(window, step_seconds, &aggregate, labels).map_err(|e| bad(e.to_string()))?;
    ds.with_split(has_split.then_some(counts)).map_err(|e| bad(e.to_string()))
}

pub fn save_dataset(ds: &WindowedDataset, path: &Path) -> Result<()> {
    std::fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<WindowedDataset> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&buf, &path.display().to_string())
}

/// Writes every feature row with its labels and split tag:
/// `t,x0..x{W-1},toilet,...,dishwasher,split` with `x0` the oldest reading.
pub fn export_csv<W: Write>(ds: &WindowedDataset, out: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    write!(w, "t")?;
    for c in 0..ds.window() {
        write!(w, ",x{c}")?;
    }
    for f in FIXTURES {
        write!(w, ",{f}")?;
    }
    writeln!(w, ",split")?;
    let x = ds.features();
    let mut row = vec![0.0; ds.window()];
    for (t, label) in ds.labels().iter().enumerate() {
        x.row_into(t, &mut row);
        write!(w, "{}", t as u64 * u64::from(ds.step_seconds()))?;
        for v in &row {
            write!(w, ",{v}")?;
        }
        for k in 0..N_LABELS {
            write!(w, ",{}", u8::from(label.get(k)))?;
        }
        let split = ds.split_of(t).map_or("", |s| s.name());
        writeln!(w, ",{split}")?;
    }
    w.flush()
}

pub fn export_csv_file(ds: &WindowedDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    export_csv(ds, file).map_err(|e| Error::io(path, e))
}
