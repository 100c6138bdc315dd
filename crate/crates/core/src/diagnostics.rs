//! Time series, growth-law fits and conservation reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Formats a value with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Named columns sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    /// Value column names (the time column `t` is implicit).
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl TimeSeries {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::Format(format!(
                "row has {} values, expected {}",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Format(format!("time {t} not after {last}")));
            }
        }
        self.times.push(t);
        self.rows.push(values);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format(format!("no column named {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Copy with the last 5% of samples dropped.
    pub fn trimmed(&self) -> TimeSeries {
        let keep = self.len() - self.len() / 20;
        TimeSeries {
            columns: self.columns.clone(),
            times: self.times[..keep].to_vec(),
            rows: self.rows[..keep].to_vec(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn header_line(&self) -> String {
        let mut s = String::from("t");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header_line();
        s.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            s.push_str(&row_line(*t, row));
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<TimeSeries> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
        let mut names = header.split(',').map(str::trim);
        if names.next() != Some("t") {
            return Err(Error::Format("first CSV column must be t".into()));
        }
        let mut ts = TimeSeries::new(names.map(String::from).collect());
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Format(format!("CSV line {}: {e}", k + 2)))?;
            let (t, rest) = vals.split_first().ok_or_else(|| Error::Format("blank row".into()))?;
            ts.push(*t, rest.to_vec())?;
        }
        Ok(ts)
    }

    pub fn read_csv(path: &Path) -> Result<TimeSeries> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

fn row_line(t: f64, row: &[f64]) -> String {
    let mut s = format_f64(t);
    for v in row {
        s.push(',');
        s.push_str(&format_f64(*v));
    }
    s
}

/// CSV writer that flushes after every row.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, columns: &[String]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file) };
        let header = TimeSeries::new(columns.to_vec()).header_line();
        w.line(&header)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn write_row(&mut self, t: f64, row: &[f64]) -> Result<()> {
        self.line(&row_line(t, row))
    }
}

/// Reads only the header of a CSV file.
pub fn read_csv_header(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(file).read_line(&mut line).map_err(|e| Error::io(path, e))?;
    Ok(line.trim().split(',').map(String::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Exp,
    DoubleExp,
    PowerBlowup,
}

/// Result of a linearized least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub kind: FitKind,
    /// κ for the exponential fits.
    pub rate: f64,
    pub intercept: f64,
    /// Blow-up exponent `p` and time `T` for [`FitKind::PowerBlowup`].
    pub exponent: Option<f64>,
    pub blowup_time: Option<f64>,
    /// RMS residual of the linearized fit.
    pub residual: f64,
    /// Residual divided by the range of the linearized data.
    pub relative_residual: f64,
    pub window: (f64, f64),
}

impl GrowthFit {
    /// Plain-text `key = value` block.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {:?}", self.kind);
        let _ = writeln!(s, "rate = {}", format_f64(self.rate));
        let _ = writeln!(s, "intercept = {}", format_f64(self.intercept));
        if let Some(p) = self.exponent {
            let _ = writeln!(s, "exponent = {}", format_f64(p));
        }
        if let Some(t) = self.blowup_time {
            let _ = writeln!(s, "blowup_time = {}", format_f64(t));
        }
        let _ = writeln!(s, "residual = {}", format_f64(self.residual));
        let _ = writeln!(s, "relative_residual = {}", format_f64(self.relative_residual));
        let _ = writeln!(s, "window = [{}, {}]", format_f64(self.window.0), format_f64(self.window.1));
        s
    }
}

/// Least-squares line `y = a + b t`; returns `(a, b, rms, rms / range(y))`.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        stt += (a - tm) * (a - tm);
        sty += (a - tm) * (b - ym);
    }
    let slope = sty / stt;
    let icpt = ym - slope * tm;
    let rms = (t.iter().zip(y).map(|(a, b)| (icpt + slope * a - b).powi(2)).sum::<f64>() / n).sqrt();
    let range = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
    let rel = if range > 0.0 { rms / range } else { f64::INFINITY };
    (icpt, slope, rms, rel)
}

fn window_samples(
    series: &TimeSeries,
    column: &str,
    window: Option<(f64, f64)>,
) -> Result<(Vec<f64>, Vec<f64>, (f64, f64))> {
    let values = series.column(column)?;
    if series.is_empty() {
        return Err(Error::Fit("empty series".into()));
    }
    let (lo, hi) = window.unwrap_or((series.times[0], series.times[series.len() - 1]));
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (ti, vi) in series.times.iter().zip(values) {
        if *ti >= lo && *ti <= hi {
            t.push(*ti);
            v.push(vi);
        }
    }
    if t.len() < 10 {
        return Err(Error::Fit(format!("{} samples in window, need >= 10", t.len())));
    }
    Ok((t, v, (lo, hi)))
}

/// Fits `log log v = intercept + κ t`.
pub fn fit_double_exponential(
    series: &TimeSeries,
    column: &str,
    window: Option<(f64, f64)>,
) -> Result<GrowthFit> {
    let (t, v, w) = window_samples(series, column, window)?;
    if let Some(bad) = v.iter().find(|x| !(**x > 1.0)) {
        return Err(Error::Fit(format!("value {bad} <= 1, log log undefined")));
    }
    if v.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Fit("column is not monotone nondecreasing".into()));
    }
    if v[v.len() - 1] == v[0] {
        return Err(Error::Fit("column is constant".into()));
    }
    let y: Vec<f64> = v.iter().map(|x| x.ln().ln()).collect();
    let (a, b, rms, rel) = linear_fit(&t, &y);
    Ok(GrowthFit {
        kind: FitKind::DoubleExp,
        rate: b,
        intercept: a,
        exponent: None,
        blowup_time: None,
        residual: rms,
        relative_residual: rel,
        window: w,
    })
}

/// Fits `log v = intercept + κ t`.
pub fn fit_exponential(series: &TimeSeries, column: &str, window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let (t, v, w) = window_samples(series, column, window)?;
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Fit(format!("value {bad} <= 0, log undefined")));
    }
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (a, b, rms, rel) = linear_fit(&t, &y);
    Ok(GrowthFit {
        kind: FitKind::Exp,
        rate: b,
        intercept: a,
        exponent: None,
        blowup_time: None,
        residual: rms,
        relative_residual: rel,
        window: w,
    })
}

/// Fits `v^{-1/p}` linearly in `t` for `p ∈ {1, 2}` (or only `hint`) and
/// returns the root `T` of the better fit by relative residual. Roots more
/// than three window lengths past the last sample count as no blow-up.
pub fn estimate_blowup_time(
    series: &TimeSeries,
    column: &str,
    window: Option<(f64, f64)>,
    exponent_hint: Option<f64>,
) -> Result<GrowthFit> {
    let (t, v, w) = window_samples(series, column, window)?;
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Fit("values must be positive".into()));
    }
    let exponents = match exponent_hint {
        Some(p) => vec![p],
        None => vec![1.0, 2.0],
    };
    let mut best: Option<GrowthFit> = None;
    for p in exponents {
        let y: Vec<f64> = v.iter().map(|x| x.powf(-1.0 / p)).collect();
        let (a, b, rms, rel) = linear_fit(&t, &y);
        if !(b < 0.0) {
            continue;
        }
        let root = -a / b;
        // the root must fall inside the extrapolation window
        let (first, last) = (t[0], t[t.len() - 1]);
        if root <= first || root > last + 3.0 * (last - first) {
            continue;
        }
        let fit = GrowthFit {
            kind: FitKind::PowerBlowup,
            rate: b,
            intercept: a,
            exponent: Some(p),
            blowup_time: Some(root),
            residual: rms,
            relative_residual: rel,
            window: w,
        };
        if best.as_ref().map_or(true, |f| rel < f.relative_residual) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Fit("no blow-up indicated".into()))
}

/// Maximum relative drift `max_t |v(t) - v(0)| / |v(0)|` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub drifts: Vec<(String, f64)>,
}

impl ConservationReport {
    pub fn drift(&self, column: &str) -> Option<f64> {
        self.drifts.iter().find(|(c, _)| c == column).map(|(_, d)| *d)
    }
}

pub fn conservation_report(series: &TimeSeries, columns: &[&str]) -> Result<ConservationReport> {
    let mut drifts = Vec::with_capacity(columns.len());
    for c in columns {
        let v = series.column(c)?;
        let drift = match v.first() {
            Some(&v0) => {
                let scale = if v0 != 0.0 { v0.abs() } else { 1.0 };
                v.iter().map(|x| (x - v0).abs() / scale).fold(0.0, f64::max)
            }
            None => 0.0,
        };
        drifts.push((c.to_string(), drift));
    }
    Ok(ConservationReport { drifts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> TimeSeries {
        let mut s = TimeSeries::new(vec!["v".into()]);
        for i in 0..n {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
            s.push(t, vec![f(t)]).unwrap();
        }
        s
    }

    #[test]
    fn double_exponential_examples() {
        let s = synthetic(|t| t.exp().exp(), 0.0, 2.0, 50);
        let f = fit_double_exponential(&s, "v", None).unwrap();
        assert!((f.rate - 1.0).abs() < 1e-6);
        let s = synthetic(|t| (3.0 * (0.5 * t).exp()).exp(), 0.0, 4.0, 50);
        let f = fit_double_exponential(&s, "v", None).unwrap();
        assert!((f.rate - 0.5).abs() < 1e-6);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-6);
        let s = synthetic(|_| 5.0, 0.0, 1.0, 20);
        assert!(fit_double_exponential(&s, "v", None).is_err());
        let s = synthetic(|t| 0.5 + t, 0.0, 1.0, 20);
        assert!(fit_double_exponential(&s, "v", None).is_err());
    }

    #[test]
    fn blowup_examples() {
        let s = synthetic(|t| (2.0 - t).powi(-2), 0.0, 1.8, 100);
        let f = estimate_blowup_time(&s, "v", None, None).unwrap();
        assert_eq!(f.exponent, Some(2.0));
        assert!((f.blowup_time.unwrap() - 2.0).abs() < 1e-3);
        let s = synthetic(|t| 2.0 + t.sin(), 0.0, 3.0, 100);
        match estimate_blowup_time(&s, "v", None, None) {
            Err(Error::Fit(m)) => assert_eq!(m, "no blow-up indicated"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conservation_examples() {
        let s = synthetic(|_| 3.0, 0.0, 1.0, 10);
        assert_eq!(conservation_report(&s, &["v"]).unwrap().drift("v"), Some(0.0));
        let s = synthetic(|t| 1.0 + 0.01 * t, 0.0, 1.0, 10);
        let d = conservation_report(&s, &["v"]).unwrap().drift("v").unwrap();
        assert!((d - 0.01).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = TimeSeries::new(vec!["a".into(), "b".into()]);
        s.push(0.1, vec![1.0 / 3.0, -2e-300]).unwrap();
        s.push(0.2, vec![f64::MAX, 5e-324]).unwrap();
        let back = TimeSeries::parse_csv(&s.to_csv()).unwrap();
        assert_eq!(back.times, s.times);
        assert_eq!(back.rows, s.rows);
        assert!(s.push(0.2, vec![0.0, 0.0]).is_err());
        assert!(s.push(0.3, vec![0.0]).is_err());
    }

    #[test]
    fn trimmed_drops_last_five_percent() {
        let s = synthetic(|t| t, 0.0, 1.0, 100);
        assert_eq!(s.trimmed().len(), 95);
    }
}
