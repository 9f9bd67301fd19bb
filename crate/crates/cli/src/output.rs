//! Number formatting, tables, and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{usage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

/// Rounds to 10 significant digits, ties to even.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().expect("formatted float parses")
}

/// CSV rendering of a rounded value: plain decimals in a human range,
/// exponent form outside it.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let r = round_sig(x);
    let exp = if r == 0.0 {
        0
    } else {
        r.abs().log10().floor() as i32
    };
    if (-6..16).contains(&exp) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every float in a JSON tree; non-finite values become null.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(Some(x))
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Rows under a fixed header; renders as CSV or as a JSON array of objects.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(Some(x)) => fmt_num(*x),
                Cell::Num(None) => String::new(),
                Cell::Text(s) => s.clone(),
                Cell::Bool(b) => b.to_string(),
            }))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (key, cell) in self.header.iter().zip(row) {
                    let v = match cell {
                        Cell::Num(Some(x)) => {
                            serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number)
                        }
                        Cell::Num(None) => Value::Null,
                        Cell::Text(s) => Value::String(s.clone()),
                        Cell::Bool(b) => Value::Bool(*b),
                    };
                    obj.insert(key.to_string(), v);
                }
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Provenance record written with every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, Value>,
    pub version: String,
    pub timestamp: String,
    /// SHA-256 of the emitted payload: the CSV text, or the compact JSON of `result`.
    pub output_sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, parameters: BTreeMap<String, Value>, payload: &[u8]) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            output_sha256: format!("{:x}", Sha256::digest(payload)),
        }
    }
}

/// What a subcommand produced.
pub enum Payload {
    Table(Table),
    Single(Value),
}

pub struct Emitter {
    pub subcommand: &'static str,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Emitter {
    pub fn emit(&self, payload: Payload, parameters: BTreeMap<String, Value>) -> Result<()> {
        let (body, manifest) = match (payload, self.format) {
            (Payload::Table(t), Format::Csv) => {
                let csv = t.to_csv()?;
                let m = RunManifest::new(self.subcommand, parameters, csv.as_bytes());
                (csv, m)
            }
            (Payload::Table(t), Format::Json) => self.json(t.to_json(), parameters)?,
            (Payload::Single(v), Format::Json) => self.json(v, parameters)?,
            (Payload::Single(_), Format::Csv) => {
                return Err(usage(format!(
                    "{} produces a single result; use --format json",
                    self.subcommand
                )))
            }
        };
        match &self.out {
            None => std::io::stdout().lock().write_all(body.as_bytes())?,
            Some(path) => {
                std::fs::write(path, &body)?;
                let sidecar = sidecar_path(path);
                std::fs::write(sidecar, serde_json::to_string_pretty(&manifest)? + "\n")?;
            }
        }
        Ok(())
    }

    fn json(
        &self,
        mut result: Value,
        parameters: BTreeMap<String, Value>,
    ) -> Result<(String, RunManifest)> {
        round_json(&mut result);
        let compact = serde_json::to_string(&result)?;
        let manifest = RunManifest::new(self.subcommand, parameters, compact.as_bytes());
        let doc = serde_json::json!({ "manifest": manifest, "result": result });
        Ok((serde_json::to_string_pretty(&doc)? + "\n", manifest))
    }
}

/// `rows.csv` → `rows.manifest.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(round_sig(2.159_768_135_609_321_7), 2.159_768_136);
        assert_eq!(round_sig(1.0 / 3.0), 0.333_333_333_3);
        assert_eq!(fmt_num(25.612_352_658_155_743), "25.61235266");
        assert_eq!(fmt_num(1e-6), "0.000001");
        assert_eq!(fmt_num(2.5e-7), "2.5e-7");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(123_456_789_012.0), "123456789000");
    }

    #[test]
    fn ties_round_to_even() {
        // Integers with eleven digits are exact, so these are true ties.
        assert_eq!(round_sig(12_345_678_905.0), 12_345_678_900.0);
        assert_eq!(round_sig(12_345_678_915.0), 12_345_678_920.0);
        assert_eq!(round_sig(-12_345_678_925.0), -12_345_678_920.0);
    }

    #[test]
    fn json_rounding() {
        let mut v = serde_json::json!({"a": [1.0 / 3.0, 2], "b": {"c": 2.0}});
        round_json(&mut v);
        assert_eq!(
            v,
            serde_json::json!({"a": [0.3333333333, 2], "b": {"c": 2.0}})
        );
    }

    #[test]
    fn table_csv_and_json() {
        let mut t = Table::new(vec!["theta", "E", "note"]);
        t.rows.push(vec![0.5.into(), None.into(), "a,b".into()]);
        assert_eq!(t.to_csv().unwrap(), "theta,E,note\n0.5,,\"a,b\"\n");
        assert_eq!(
            t.to_json(),
            serde_json::json!([{"theta": 0.5, "E": null, "note": "a,b"}])
        );
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/rows.csv")),
            PathBuf::from("out/rows.manifest.json")
        );
    }
}
