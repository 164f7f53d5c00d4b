//! CSV and JSON export. Files are staged in memory and written only after a
//! command has finished, so a failing run leaves no partial output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::CliError;

/// Formats `x` with 6 significant digits, without trailing zeros.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // the exponent after rounding to 6 digits decides the layout
    let s = format!("{x:.5e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let mag: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&mag) {
        return format!("{}e{exp}", trim_zeros(mant));
    }
    let decimals = (5 - mag) as usize;
    let s = trim_zeros(&format!("{x:.decimals$}"));
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Num(x) => sig6(*x),
            Self::Int(k) => k.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) => json!(x),
            Self::Int(k) => json!(k),
            Self::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Self::Int(k as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self.header.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    fn to_csv(&self, provenance: &Provenance) -> Result<Vec<u8>, CliError> {
        let mut buf = provenance.csv_preamble().into_bytes();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let wrap = |e: csv::Error| CliError::Validation(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(wrap)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(wrap)?;
        }
        buf.extend(w.into_inner().map_err(|e| CliError::Validation(format!("csv encoding: {e}")))?);
        Ok(buf)
    }
}

/// Where a result came from: enough to rerun it.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config_sha256: String,
    pub engine: String,
    pub seeds: BTreeMap<String, u64>,
}

impl Provenance {
    fn csv_preamble(&self) -> String {
        let mut s = format!("# tool: {}\n# command: {}\n# config_sha256: {}\n# engine: {}\n", self.tool, self.command, self.config_sha256, self.engine);
        let seeds: Vec<String> = self.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
        s.push_str(&format!("# seeds: {}\n", if seeds.is_empty() { "none".to_string() } else { seeds.join(" ") }));
        s
    }
}

/// One output file before serialization.
pub enum Payload {
    /// Written as `stem.csv` or `stem.json` depending on the format.
    Table { stem: String, table: Table, extra: Option<Value> },
    /// Always `stem.json`.
    Json { stem: String, value: Value },
}

/// Files staged for writing.
#[derive(Debug, Default)]
pub struct Bundle {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Bundle {
    pub fn render(payloads: Vec<Payload>, format: Format, provenance: &Provenance, config: &Value) -> Result<Self, CliError> {
        let mut files = Vec::new();
        for p in payloads {
            match p {
                Payload::Table { stem, table, extra } => match format {
                    Format::Csv => files.push((format!("{stem}.csv"), table.to_csv(provenance)?)),
                    Format::Json => {
                        let mut data = Map::new();
                        data.insert("columns".into(), json!(table.header));
                        data.insert("rows".into(), table.to_json());
                        if let Some(Value::Object(extra)) = extra {
                            data.extend(extra);
                        }
                        files.push((format!("{stem}.json"), envelope(provenance, config, Value::Object(data))?));
                    }
                },
                Payload::Json { stem, value } => files.push((format!("{stem}.json"), envelope(provenance, config, value)?)),
            }
        }
        Ok(Self { files })
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}

fn envelope(provenance: &Provenance, config: &Value, data: Value) -> Result<Vec<u8>, CliError> {
    let doc = json!({
        "provenance": provenance,
        "config": config,
        "data": data,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Validation(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(4.043612345), "4.04361");
        assert_eq!(sig6(0.792481250360578), "0.792481");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.000012345678), "1.23457e-5");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(1e-10), "1e-10");
        assert_eq!(sig6(999999.6), "1e6");
        assert_eq!(sig6(99999.96), "100000");
    }

    #[test]
    fn csv_has_preamble_and_header() {
        let prov = Provenance {
            tool: "t".into(),
            command: "c".into(),
            config_sha256: "abc".into(),
            engine: "quad(8)".into(),
            seeds: BTreeMap::new(),
        };
        let mut t = Table::new(["R1", "R2"]);
        t.push(vec![1.0.into(), 0.5.into()]);
        let text = String::from_utf8(t.to_csv(&prov).unwrap()).unwrap();
        assert_eq!(text, "# tool: t\n# command: c\n# config_sha256: abc\n# engine: quad(8)\n# seeds: none\nR1,R2\n1,0.5\n");
    }
}
