use std::path::Path;

use crate::dde::Trajectory;
use crate::experiments::{SensitivityResult, SweepTable};
use crate::model::Compartment;

use super::{write_file, ManifestEntry, ReportError};

/// Significant digits of every written number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Largest relative change a value can suffer from being written and read back.
pub const ROUND_TRIP_TOLERANCE: f64 = 5e-12;

/// A rectangular numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), ReportError> {
        if row.len() != self.columns.len() {
            return Err(ReportError::Table(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// `t,S,E,I,Q,R,D`, keeping every `every`-th grid point plus the last one.
    pub fn from_trajectory(traj: &Trajectory, every: usize) -> Self {
        let every = every.max(1);
        let mut table =
            Table::new(std::iter::once("t").chain(Compartment::ALL.iter().map(|c| c.label())));
        let n = traj.len();
        for k in (0..n).filter(|k| k % every == 0 || k + 1 == n) {
            let mut row = vec![traj.time(k)];
            row.extend_from_slice(traj.state(k));
            table.rows.push(row);
        }
        table
    }

    /// Failed grid points appear as `NaN` rows.
    pub fn from_sweep(sweep: &SweepTable) -> Self {
        Self {
            columns: sweep.columns.clone(),
            rows: sweep.rows.iter().map(|r| r.values.clone()).collect(),
        }
    }

    /// `t,mean_I,mse` over the sampled times.
    pub fn sensitivity_summary(res: &SensitivityResult) -> Self {
        let mut table = Table::new(["t", "mean_I", "mse"]);
        for (j, &t) in res.times.iter().enumerate() {
            table.rows.push(vec![t, res.mean[j], res.mse[j]]);
        }
        table
    }

    /// `t` followed by one `I_<value>` column per fan member.
    pub fn sensitivity_fan(res: &SensitivityResult) -> Self {
        let mut columns = vec!["t".to_string()];
        columns.extend(res.values.iter().map(|v| format!("I_{}", format_sig(*v))));
        let mut table = Table::new(columns);
        for (j, &t) in res.times.iter().enumerate() {
            let mut row = vec![t];
            row.extend(res.fan.iter().map(|f| f[j]));
            table.rows.push(row);
        }
        table
    }

    /// Same columns, and values equal within relative `tol` (NaN matches NaN).
    pub fn approx_eq(&self, other: &Table, tol: f64) -> bool {
        self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        (x.is_nan() && y.is_nan())
                            || x == y
                            || (x - y).abs() <= tol * x.abs().max(y.abs())
                    })
            })
    }
}

/// `%.12g`-style formatting: plain decimals for moderate exponents,
/// scientific notation otherwise, no trailing zeros, `NaN` for NaN.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let digits: String = mant.chars().filter(|c| *c != '.').collect();
        let plain = if exp >= 0 {
            let e = exp as usize + 1;
            format!("{}.{}", &digits[..e], &digits[e..])
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!(
            "{sign}{}",
            plain.trim_end_matches('0').trim_end_matches('.')
        )
    } else {
        format!(
            "{sign}{}e{exp}",
            mant.trim_end_matches('0').trim_end_matches('.')
        )
    }
}

pub fn to_csv_string(table: &Table) -> Result<String, ReportError> {
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let bad = |e: ::csv::Error| ReportError::Table(e.to_string());
    w.write_record(&table.columns).map_err(bad)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_sig(*v)))
            .map_err(bad)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ReportError::Table(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn parse_csv(text: &str) -> Result<Table, ReportError> {
    let mut r = ::csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |e: ::csv::Error| ReportError::Table(e.to_string());
    let columns: Vec<String> = r
        .headers()
        .map_err(bad)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut table = Table::new(columns);
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let row: Result<Vec<f64>, ReportError> = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    ReportError::Table(format!("row {}: `{f}` is not a number", n + 1))
                })
            })
            .collect();
        table.push(row?)?;
    }
    Ok(table)
}

/// Writes `table` to `path`; the entry records each column's unit.
pub fn write_csv(table: &Table, path: &Path) -> Result<ManifestEntry, ReportError> {
    let text = to_csv_string(table)?;
    let mut entry = write_file(path, "table", text.as_bytes())?;
    entry.columns = table
        .columns
        .iter()
        .map(|c| (c.clone(), unit_of(c).to_string()))
        .collect();
    Ok(entry)
}

pub fn read_csv(path: &Path) -> Result<Table, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}

/// Unit of a column produced by this crate.
pub fn unit_of(column: &str) -> &'static str {
    match column {
        "t" | "tau" | "kappa" => "day",
        "T" => "degC",
        "beta" | "mu" | "Omega" | "epsilon" | "gamma" | "rho" | "delta" => "1/day",
        "R0" | "p" | "alpha" => "1",
        "mse" => "fraction^2",
        _ => "fraction of population",
    }
}
