use std::fs;
use std::path::Path;

use crate::diagnostics::format_f64;
use crate::error::{Error, Result};

const MAGIC: &str = "smallscale-snapshot";
const VERSION: u32 = 1;

/// A field dump: a text header terminated by a blank line, followed by the
/// values as little-endian f64 in row-major order (one row per grid point,
/// one entry per column).
///
/// ```text
/// smallscale-snapshot 1
/// model: euler2d
/// grid: polar nr=128 ntheta=256
/// t: 1.0000000000000000e0
/// rows: 32768
/// columns: omega,psi
/// byte_order: little-endian
///
/// <rows * columns * 8 bytes>
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub model: String,
    /// Free-form grid descriptor, e.g. `periodic n=256 length=6.28`.
    pub grid: String,
    pub t: f64,
    pub columns: Vec<String>,
    pub rows: usize,
    pub data: Vec<f64>,
}

impl Snapshot {
    /// Builds a snapshot from equally long column vectors.
    pub fn from_columns(model: &str, grid: &str, t: f64, columns: &[(&str, &[f64])]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != rows) {
            return Err(Error::Format("snapshot columns differ in length".into()));
        }
        for (name, _) in columns {
            if name.is_empty() || name.contains([',', '\n']) {
                return Err(Error::Format(format!("invalid column name {name:?}")));
            }
        }
        for text in [model, grid] {
            if text.contains('\n') {
                return Err(Error::Format("header fields must be single lines".into()));
            }
        }
        let mut data = Vec::with_capacity(rows * columns.len());
        for r in 0..rows {
            data.extend(columns.iter().map(|c| c.1[r]));
        }
        Ok(Self {
            model: model.into(),
            grid: grid.into(),
            t,
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            rows,
            data,
        })
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .columns
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Format(format!("snapshot has no column {name:?}")))?;
        Ok(self.data.chunks_exact(self.columns.len()).map(|row| row[c]).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "{MAGIC} {VERSION}\nmodel: {}\ngrid: {}\nt: {}\nrows: {}\ncolumns: {}\nbyte_order: little-endian\n\n",
            self.model,
            self.grid,
            format_f64(self.t),
            self.rows,
            self.columns.join(","),
        );
        let mut out = header.into_bytes();
        out.reserve(8 * self.data.len());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let end = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| Error::Format("snapshot header is not terminated by a blank line".into()))?;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::Format("snapshot header is not UTF-8".into()))?;
        let mut lines = header.lines();
        let first = lines.next().unwrap_or_default();
        if first != format!("{MAGIC} {VERSION}") {
            return Err(Error::Format(format!("unsupported snapshot format line {first:?}")));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Format(format!("snapshot header lacks `{key}`")))?;
            line.strip_prefix(key)
                .and_then(|s| s.strip_prefix(": "))
                .map(String::from)
                .ok_or_else(|| Error::Format(format!("expected `{key}: ...`, found {line:?}")))
        };
        let model = field("model")?;
        let grid = field("grid")?;
        let t = field("t")?.parse::<f64>().map_err(|e| Error::Format(format!("bad t: {e}")))?;
        let rows = field("rows")?.parse::<usize>().map_err(|e| Error::Format(format!("bad rows: {e}")))?;
        let columns: Vec<String> = field("columns")?.split(',').map(String::from).collect();
        let order = field("byte_order")?;
        if order != "little-endian" {
            return Err(Error::Format(format!("unsupported byte order {order:?}")));
        }
        let body = &bytes[end + 2..];
        let expected = rows * columns.len() * 8;
        if body.len() != expected {
            return Err(Error::Format(format!("snapshot body has {} bytes, expected {expected}", body.len())));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { model, grid, t, columns, rows, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Writes a contour as a CSV node list: a `#` comment line with `t`, `α`
/// and the weight, then `x1,x2` rows.
pub fn write_contour_csv(path: &Path, t: f64, alpha: f64, weight: f64, nodes: &[[f64; 2]]) -> Result<()> {
    let mut s = format!("# t={} alpha={} weight={}\nx1,x2\n", format_f64(t), format_f64(alpha), format_f64(weight));
    for p in nodes {
        s.push_str(&format!("{},{}\n", format_f64(p[0]), format_f64(p[1])));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}
