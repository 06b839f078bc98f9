//! Reading and writing dense real matrices in MatrixMarket format.
//!
//! Both `coordinate` and `array` layouts are accepted with `general` or
//! `symmetric` symmetry and `real` or `integer` fields. Writing always uses
//! `array real general`, which round-trips exactly through `{:e}` formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gstiefel_core::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

pub fn read_mtx(path: &Path) -> Result<Mat> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_mtx(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_mtx(path: &Path, a: &Mat) -> Result<()> {
    fs::write(path, format_mtx(a)).with_context(|| format!("writing {}", path.display()))
}

pub fn parse_mtx(text: &str) -> Result<Mat> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        bail!("not a MatrixMarket matrix header: {header:?}");
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => bail!("unsupported layout {other:?}"),
    };
    if !matches!(words[3].as_str(), "real" | "integer" | "double") {
        bail!("unsupported field {:?}", words[3]);
    }
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => bail!("unsupported symmetry {other:?}"),
    };

    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body.next().ok_or_else(|| anyhow!("missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|s| s.parse().with_context(|| format!("bad size {s:?}")))
        .collect::<Result<_>>()?;

    match layout {
        Layout::Array => {
            let [rows, cols] = sizes[..] else {
                bail!("array size line needs two entries, got {size_line:?}");
            };
            if symmetric && rows != cols {
                bail!("symmetric matrix must be square");
            }
            let values: Vec<f64> = body
                .flat_map(str::split_whitespace)
                .map(|s| s.parse::<f64>().with_context(|| format!("bad value {s:?}")))
                .collect::<Result<_>>()?;
            let mut a = Mat::zeros(rows, cols);
            let mut it = values.into_iter();
            // column-major; symmetric stores the lower triangle only
            for j in 0..cols {
                let start = if symmetric { j } else { 0 };
                for i in start..rows {
                    let v = it.next().ok_or_else(|| anyhow!("too few values"))?;
                    a[(i, j)] = v;
                    if symmetric {
                        a[(j, i)] = v;
                    }
                }
            }
            if it.next().is_some() {
                bail!("too many values");
            }
            Ok(a)
        }
        Layout::Coordinate => {
            let [rows, cols, nnz] = sizes[..] else {
                bail!("coordinate size line needs three entries, got {size_line:?}");
            };
            let mut a = Mat::zeros(rows, cols);
            let mut seen = 0;
            for line in body {
                let mut f = line.split_whitespace();
                let mut next = || f.next().ok_or_else(|| anyhow!("short entry line {line:?}"));
                let i: usize = next()?.parse()?;
                let j: usize = next()?.parse()?;
                let v: f64 = next()?.parse()?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    bail!("entry ({i}, {j}) out of range");
                }
                a[(i - 1, j - 1)] += v;
                if symmetric && i != j {
                    a[(j - 1, i - 1)] += v;
                }
                seen += 1;
            }
            if seen != nnz {
                bail!("expected {nnz} entries, found {seen}");
            }
            Ok(a)
        }
    }
}

pub fn format_mtx(a: &Mat) -> String {
    let mut s = String::with_capacity(24 * a.len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", a.nrows(), a.ncols());
    for v in a.iter() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}
