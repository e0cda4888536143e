//! Tables, declarative checks over them, and the on-disk report layout.
//!
//! Verdicts are pure functions of the emitted tables, so a report directory
//! can be re-checked offline by [`verify`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const PLOTS_FILE: &str = "plots.csv";

/// Numeric table whose rows are addressed by a string key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// Value columns; the CSV adds a leading `key` column.
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<(String, Vec<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

/// How a table maps onto long-format plot rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub observable: String,
    pub series_prefix: String,
    /// Columns whose values label the series.
    pub series: Vec<String>,
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub err: Option<String>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), plot: None }
    }

    pub fn with_plot(mut self, plot: PlotSpec) -> Self {
        self.plot = Some(plot);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, values: &[f64]) {
        assert_eq!(values.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push((key.into(), values.to_vec()));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, key: &str, column: &str) -> Option<f64> {
        let c = self.column(column)?;
        self.rows.iter().find(|(k, _)| k == key).map(|(_, v)| v[c])
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut head = vec!["key".to_string()];
        head.extend(self.columns.iter().cloned());
        w.write_record(&head).map_err(|e| Error::csv(path, e))?;
        for (key, vals) in &self.rows {
            let mut rec = vec![key.clone()];
            rec.extend(vals.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads rows back into a table whose metadata came from the report.
    pub fn read_rows(&mut self, path: &Path) -> Result<()> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let head = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        let expected: Vec<&str> = std::iter::once("key").chain(self.columns.iter().map(|s| s.as_str())).collect();
        if head.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Config(format!("{}: header does not match the report", path.display())));
        }
        self.rows.clear();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("{}: bad number `{s}`", path.display()))))
                .collect::<Result<Vec<f64>>>()?;
            self.rows.push((rec[0].to_string(), vals));
        }
        Ok(())
    }
}

/// A bound that is either a constant or another column of the same row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Limit {
    Value(f64),
    Column(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// min ≤ table[row][column] ≤ max.
    Bound { row: String, column: String, min: Option<Limit>, max: Option<Limit> },
    /// |value − target| ≤ abs + rel·|target| + k·sigma.
    Close {
        row: String,
        value: String,
        target: String,
        rel: f64,
        abs: f64,
        sigma: Option<String>,
        k: f64,
    },
    /// The column strictly decreases along the listed rows.
    StrictlyDecreasing { rows: Vec<String>, column: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub table: String,
    #[serde(flatten)]
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: Check,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn bound(name: &str, table: &str, row: &str, column: &str, min: Option<Limit>, max: Option<Limit>) -> Self {
        Check { name: name.into(), table: table.into(), rule: Rule::Bound { row: row.into(), column: column.into(), min, max } }
    }

    pub fn at_most(name: &str, table: &str, row: &str, column: &str, max: f64) -> Self {
        Self::bound(name, table, row, column, None, Some(Limit::Value(max)))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn close(
        name: &str,
        table: &str,
        row: &str,
        value: &str,
        target: &str,
        rel: f64,
        abs: f64,
        sigma: Option<(&str, f64)>,
    ) -> Self {
        Check {
            name: name.into(),
            table: table.into(),
            rule: Rule::Close {
                row: row.into(),
                value: value.into(),
                target: target.into(),
                rel,
                abs,
                sigma: sigma.map(|(s, _)| s.to_string()),
                k: sigma.map_or(0.0, |(_, k)| k),
            },
        }
    }

    pub fn strictly_decreasing(name: &str, table: &str, rows: Vec<String>, column: &str) -> Self {
        Check { name: name.into(), table: table.into(), rule: Rule::StrictlyDecreasing { rows, column: column.into() } }
    }

    pub fn evaluate(&self, tables: &[Table]) -> Verdict {
        let outcome = self.evaluate_inner(tables);
        let (passed, detail) = match outcome {
            Ok(r) => r,
            Err(msg) => (false, msg),
        };
        Verdict { check: self.clone(), passed, detail }
    }

    fn evaluate_inner(&self, tables: &[Table]) -> std::result::Result<(bool, String), String> {
        let t = tables.iter().find(|t| t.name == self.table).ok_or(format!("missing table {}", self.table))?;
        let get = |row: &str, col: &str| t.value(row, col).ok_or(format!("missing {}[{row}][{col}]", t.name));
        let limit = |row: &str, l: &Limit| match l {
            Limit::Value(v) => Ok(*v),
            Limit::Column(c) => get(row, c),
        };
        match &self.rule {
            Rule::Bound { row, column, min, max } => {
                let v = get(row, column)?;
                let lo = min.as_ref().map(|l| limit(row, l)).transpose()?;
                let hi = max.as_ref().map(|l| limit(row, l)).transpose()?;
                let ok = lo.is_none_or(|lo| v >= lo) && hi.is_none_or(|hi| v <= hi);
                let fmt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.6e}"));
                Ok((ok, format!("{column} = {v:.6e} in [{}, {}]", fmt(lo), fmt(hi))))
            }
            Rule::Close { row, value, target, rel, abs, sigma, k } => {
                let v = get(row, value)?;
                let tg = get(row, target)?;
                let s = sigma.as_ref().map(|c| get(row, c)).transpose()?.unwrap_or(0.0);
                let allowed = abs + rel * tg.abs() + k * s;
                let dev = (v - tg).abs();
                Ok((dev <= allowed, format!("{value} = {v:.6e}, {target} = {tg:.6e}, |diff| = {dev:.3e} vs allowed {allowed:.3e}")))
            }
            Rule::StrictlyDecreasing { rows, column } => {
                let vals = rows.iter().map(|r| get(r, column)).collect::<std::result::Result<Vec<_>, _>>()?;
                let ok = !vals.is_empty() && vals.windows(2).all(|w| w[1] < w[0]);
                let shown: Vec<String> = vals.iter().map(|v| format!("{v:.6e}")).collect();
                Ok((ok, format!("{column}: {}", shown.join(" > "))))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    /// The configuration as run, in the config file's own format.
    pub config: serde_json::Value,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub runtime_s: f64,
    pub passed: bool,
}

impl Report {
    pub fn new(scenario: &str, seed: u64, config: serde_json::Value, tables: Vec<Table>, checks: Vec<Check>, runtime_s: f64) -> Self {
        let verdicts: Vec<Verdict> = checks.iter().map(|c| c.evaluate(&tables)).collect();
        let passed = verdicts.iter().all(|v| v.passed);
        Report { scenario: scenario.into(), seed, config, tables, verdicts, runtime_s, passed }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check.name == name)
    }

    /// Writes one CSV per table and the JSON summary.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.tables {
            t.write_csv(&dir.join(t.file_name()))?;
        }
        let path = dir.join(REPORT_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut report: Report = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        for t in report.tables.iter_mut() {
            let p = dir.join(t.file_name());
            t.read_rows(&p)?;
        }
        Ok(report)
    }
}

/// Long-format plot rows, one observable value per row, for every table
/// that declares a plot mapping. An empty report gives a header-only file.
pub fn emit_plots_data(report: &Report, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(PLOTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(["observable", "series", "x", "value", "stderr"]).map_err(|e| Error::csv(&path, e))?;
    for t in &report.tables {
        let Some(spec) = &t.plot else { continue };
        let col = |name: &str| {
            t.column(name).ok_or_else(|| Error::Config(format!("table {} has no column {name}", t.name)))
        };
        let series_cols = spec.series.iter().map(|s| col(s)).collect::<Result<Vec<_>>>()?;
        let (xc, yc) = (col(&spec.x)?, col(&spec.y)?);
        let ec = spec.err.as_deref().map(col).transpose()?;
        for (_, vals) in &t.rows {
            let label: Vec<String> =
                spec.series.iter().zip(&series_cols).map(|(name, &c)| format!("{name}={}", vals[c])).collect();
            let series = if label.is_empty() {
                spec.series_prefix.clone()
            } else {
                format!("{}[{}]", spec.series_prefix, label.join(","))
            };
            let err = ec.map_or(String::new(), |c| vals[c].to_string());
            w.write_record([spec.observable.clone(), series, vals[xc].to_string(), vals[yc].to_string(), err])
                .map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOutcome {
    pub report: Report,
    pub recomputed: Vec<Verdict>,
    /// Recorded and recomputed verdicts agree.
    pub consistent: bool,
    pub passed: bool,
}

/// Re-evaluates every recorded check against the CSV tables on disk.
pub fn verify(dir: &Path) -> Result<VerifyOutcome> {
    let report = Report::load(dir)?;
    let recomputed: Vec<Verdict> = report.verdicts.iter().map(|v| v.check.evaluate(&report.tables)).collect();
    let consistent = recomputed.len() == report.verdicts.len()
        && recomputed.iter().zip(&report.verdicts).all(|(a, b)| a.passed == b.passed)
        && report.passed == report.verdicts.iter().all(|v| v.passed);
    let passed = consistent && recomputed.iter().all(|v| v.passed);
    Ok(VerifyOutcome { report, recomputed, consistent, passed })
}
