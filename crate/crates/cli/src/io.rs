//! CSV reading and writing. Files may start with `# key=value` metadata
//! lines, followed by a header row and numeric rows.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use fsdr_core::metrics::{EmpiricalDistribution, SpdMatrix, UnitVector};
use fsdr_core::ResponseSet;
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult, CoreExt};

/// Tolerance for renormalizing sphere responses read from text.
pub const SPHERE_READ_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Distribution,
    Spd,
    Sphere,
}

impl ResponseKind {
    pub fn of(ys: &ResponseSet) -> Self {
        match ys {
            ResponseSet::Distributions(_) => ResponseKind::Distribution,
            ResponseSet::Spd(_) => ResponseKind::Spd,
            ResponseSet::Sphere(_) => ResponseKind::Sphere,
        }
    }
}

impl fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResponseKind::Distribution => "distribution",
            ResponseKind::Spd => "spd",
            ResponseKind::Sphere => "sphere",
        })
    }
}

impl FromStr for ResponseKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distribution" | "distributions" | "wasserstein" => Ok(ResponseKind::Distribution),
            "spd" => Ok(ResponseKind::Spd),
            "sphere" => Ok(ResponseKind::Sphere),
            _ => Err(CliError::config(format!(
                "unknown response kind {s:?}; expected distribution, spd or sphere"
            ))),
        }
    }
}

/// `%.6g`-style formatting: six significant digits, trailing zeros trimmed.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// A parsed numeric CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: DMatrix<f64>,
}

impl Table {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_table(path: &Path, stage: &'static str) -> CliResult<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(stage, format!("{}: {e}", path.display())))?;
    let meta = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |e: csv::Error| CliError::data(stage, format!("{}: {e}", path.display()));
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut values = Vec::new();
    let mut nrows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(bad)?;
        if record.len() != header.len() {
            return Err(CliError::data(
                stage,
                format!("{}: row {} has {} fields, header has {}", path.display(), r + 1, record.len(), header.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::data(stage, format!("{}: row {}: {field:?} is not a number", path.display(), r + 1))
            })?;
            values.push(v);
        }
        nrows += 1;
    }
    if nrows == 0 {
        return Err(CliError::data(stage, format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        meta,
        rows: DMatrix::from_row_slice(nrows, header.len(), &values),
        header,
    })
}

pub fn write_table(path: &Path, meta: &[(String, String)], header: &[String], rows: &DMatrix<f64>) -> CliResult<()> {
    let records: Vec<Vec<String>> = rows.row_iter().map(|r| r.iter().map(|v| fmt_sig(*v)).collect()).collect();
    write_records(path, meta, header, &records)
}

/// Write metadata lines, a header and pre-formatted records.
pub fn write_records(path: &Path, meta: &[(String, String)], header: &[String], records: &[Vec<String>]) -> CliResult<()> {
    let out_err = |e: std::io::Error| CliError::Output {
        path: path.display().to_string(),
        source: e,
    };
    let csv_err = |e: csv::Error| out_err(std::io::Error::other(e.to_string()));
    let mut buf = String::new();
    for (k, v) in meta {
        buf.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| out_err(std::io::Error::other(e.to_string())))?;
    buf.push_str(&String::from_utf8_lossy(&bytes));
    fs::write(path, buf).map_err(out_err)
}

pub fn numbered(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Responses from a CSV with one response per row: the `m` samples of a
/// distribution, the `r²` row-major entries of an SPD matrix, or the
/// coordinates of a unit vector.
pub fn read_responses(path: &Path, kind: Option<ResponseKind>) -> CliResult<(ResponseSet, Table)> {
    let stage = "read responses";
    let table = read_table(path, stage)?;
    let kind = match (kind, table.meta("kind")) {
        (Some(k), _) => k,
        (None, Some(k)) => k.parse()?,
        (None, None) => {
            return Err(CliError::config(format!(
                "response kind of {} is unknown; pass --kind",
                path.display()
            )))
        }
    };
    let rows = &table.rows;
    let row = |i: usize| rows.row(i).iter().copied().collect::<Vec<f64>>();
    let n = rows.nrows();
    let ys = match kind {
        ResponseKind::Distribution => ResponseSet::Distributions(
            (0..n)
                .map(|i| EmpiricalDistribution::new(row(i)))
                .collect::<fsdr_core::Result<_>>()
                .at(stage)?,
        ),
        ResponseKind::Spd => {
            let c = rows.ncols();
            let r = (c as f64).sqrt().round() as usize;
            if r * r != c {
                return Err(CliError::data(stage, format!("SPD rows need r² columns, found {c}")));
            }
            ResponseSet::Spd(
                (0..n)
                    .map(|i| SpdMatrix::new(DMatrix::from_row_slice(r, r, &row(i))))
                    .collect::<fsdr_core::Result<_>>()
                    .at(stage)?,
            )
        }
        ResponseKind::Sphere => ResponseSet::Sphere(
            (0..n)
                .map(|i| UnitVector::normalized(DVector::from_vec(row(i)), SPHERE_READ_TOL))
                .collect::<fsdr_core::Result<_>>()
                .at(stage)?,
        ),
    };
    Ok((ys, table))
}

pub fn write_responses(path: &Path, meta: &[(String, String)], ys: &ResponseSet) -> CliResult<()> {
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = match ys {
        ResponseSet::Distributions(v) => (
            numbered("y", v.first().map_or(0, |d| d.len())),
            v.iter().map(|d| d.samples().to_vec()).collect(),
        ),
        ResponseSet::Spd(v) => {
            let r = v.first().map_or(0, |s| s.dim());
            let header = (1..=r).flat_map(|i| (1..=r).map(move |j| format!("s{i}{j}"))).collect();
            // row-major entries
            (header, v.iter().map(|s| s.matrix().transpose().as_slice().to_vec()).collect())
        }
        ResponseSet::Sphere(v) => (
            numbered("u", v.first().map_or(0, |u| u.dim())),
            v.iter().map(|u| u.coords().as_slice().to_vec()).collect(),
        ),
    };
    let mut meta = meta.to_vec();
    meta.insert(0, ("kind".into(), ResponseKind::of(ys).to_string()));
    let flat: Vec<f64> = rows.concat();
    write_table(path, &meta, &header, &DMatrix::from_row_slice(rows.len(), header.len(), &flat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.23456789), "1.23457");
        assert_eq!(fmt_sig(123456.789), "123457");
        assert_eq!(fmt_sig(0.000123456789), "0.000123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e6");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("SPD".parse::<ResponseKind>().unwrap(), ResponseKind::Spd);
        assert!("matrix".parse::<ResponseKind>().is_err());
    }
}
