//! Report documents and their JSON and CSV encodings.
//!
//! JSON keeps struct field order, so equal documents give equal bytes. CSV
//! flattens the document into `meta`, `config` and `check` rows and parses
//! back to the same document.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::exactnum::{parse_rational, Q7Number, Rational, REPORT_PLACES};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// The configuration a report was produced with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandConfig {
    pub command: String,
    pub depth: Option<usize>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub delta: Option<String>,
    pub tolerance: Option<String>,
    pub max_factors: Option<usize>,
    pub ceiling: Option<u64>,
    pub samples: Option<u64>,
    pub pairs: Option<u64>,
    pub strategy: Option<String>,
    pub clamp: Option<String>,
    pub series_depth: Option<usize>,
    pub output: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportValue {
    Exact(Q7Number),
    Approx { decimal: String },
    Count(u64),
    Text(String),
}

impl ReportValue {
    pub fn exact(x: &Q7Number) -> Self {
        ReportValue::Exact(x.clone())
    }

    pub fn rational(x: &Rational) -> Self {
        ReportValue::Exact(Q7Number::from_rational(x.clone()))
    }

    pub fn approx(x: f64) -> Self {
        ReportValue::Approx { decimal: format!("{x:.6}") }
    }

    pub fn text(s: impl Into<String>) -> Self {
        ReportValue::Text(s.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: ReportValue,
}

impl NamedValue {
    pub fn new(name: impl Into<String>, value: ReportValue) -> Self {
        NamedValue { name: name.into(), value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// What the check reproduces, in words.
    pub anchor: String,
    pub values: Vec<NamedValue>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub config: CommandConfig,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl ReportDocument {
    pub fn new(config: CommandConfig, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        ReportDocument {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            passed,
            checks,
        }
    }
}

const CSV_HEADER: [&str; 11] =
    ["record", "name", "anchor", "passed", "runtime_ms", "field", "kind", "a", "b", "decimal", "value"];

pub fn write_report(doc: &ReportDocument, format: Format) -> Result<Vec<u8>, ReportError> {
    match format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(doc)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => write_csv(doc),
    }
}

pub fn parse_report(bytes: &[u8], format: Format) -> Result<ReportDocument, ReportError> {
    match format {
        Format::Json => Ok(serde_json::from_slice(bytes)?),
        Format::Csv => parse_csv(bytes),
    }
}

fn write_csv(doc: &ReportDocument) -> Result<Vec<u8>, ReportError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(CSV_HEADER)?;
    let blank = |record: &str, name: &str, value: &str| {
        let mut row = vec![String::new(); CSV_HEADER.len()];
        row[0] = record.to_string();
        row[1] = name.to_string();
        row[10] = value.to_string();
        row
    };
    wtr.write_record(blank("meta", "tool", &doc.tool))?;
    wtr.write_record(blank("meta", "version", &doc.version))?;
    wtr.write_record(blank("meta", "passed", &doc.passed.to_string()))?;
    let Value::Object(config) = serde_json::to_value(&doc.config)? else {
        return Err(ReportError::Malformed("config is not an object".into()));
    };
    for (key, value) in &config {
        wtr.write_record(blank("config", key, &value.to_string()))?;
    }
    for check in &doc.checks {
        let head = [
            "check".to_string(),
            check.name.clone(),
            check.anchor.clone(),
            check.passed.to_string(),
            check.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
        ];
        if check.values.is_empty() {
            let mut row = head.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 6));
            wtr.write_record(&row)?;
        }
        for v in &check.values {
            let (kind, a, b, decimal, value) = match &v.value {
                ReportValue::Exact(x) => {
                    ("exact", x.a().to_string(), x.b().to_string(), x.to_decimal(REPORT_PLACES), String::new())
                }
                ReportValue::Approx { decimal } => ("approx", String::new(), String::new(), decimal.clone(), String::new()),
                ReportValue::Count(n) => ("count", String::new(), String::new(), String::new(), n.to_string()),
                ReportValue::Text(s) => ("text", String::new(), String::new(), String::new(), s.clone()),
            };
            let mut row = head.to_vec();
            row.extend([v.name.clone(), kind.to_string(), a, b, decimal, value]);
            wtr.write_record(&row)?;
        }
    }
    wtr.into_inner().map_err(|e| ReportError::Malformed(e.to_string()))
}

fn parse_csv(bytes: &[u8]) -> Result<ReportDocument, ReportError> {
    let bad = |m: &str| ReportError::Malformed(m.to_string());
    let mut rdr = csv::Reader::from_reader(bytes);
    let (mut tool, mut version, mut passed) = (None, None, None);
    let mut config = Map::new();
    let mut checks: Vec<CheckRecord> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |i: usize| row.get(i).unwrap_or("").to_string();
        match f(0).as_str() {
            "meta" => match f(1).as_str() {
                "tool" => tool = Some(f(10)),
                "version" => version = Some(f(10)),
                "passed" => passed = Some(f(10) == "true"),
                _ => return Err(bad("unknown meta row")),
            },
            "config" => {
                config.insert(f(1), serde_json::from_str(&f(10))?);
            }
            "check" => {
                let runtime_ms = match f(4).as_str() {
                    "" => None,
                    t => Some(t.parse().map_err(|_| bad("runtime"))?),
                };
                let record = CheckRecord {
                    name: f(1),
                    anchor: f(2),
                    values: Vec::new(),
                    passed: f(3) == "true",
                    runtime_ms,
                };
                let continues = checks.last().is_some_and(|c| {
                    c.name == record.name && c.anchor == record.anchor && c.passed == record.passed
                });
                if !continues {
                    checks.push(record);
                }
                let value = match f(6).as_str() {
                    "" => continue,
                    "exact" => ReportValue::Exact(Q7Number::new(
                        parse_rational(&f(7)).map_err(|_| bad("a"))?,
                        parse_rational(&f(8)).map_err(|_| bad("b"))?,
                    )),
                    "approx" => ReportValue::Approx { decimal: f(9) },
                    "count" => ReportValue::Count(f(10).parse().map_err(|_| bad("count"))?),
                    "text" => ReportValue::Text(f(10)),
                    _ => return Err(bad("unknown value kind")),
                };
                checks.last_mut().expect("pushed").values.push(NamedValue { name: f(5), value });
            }
            _ => return Err(bad("unknown record type")),
        }
    }
    Ok(ReportDocument {
        tool: tool.ok_or_else(|| bad("missing tool"))?,
        version: version.ok_or_else(|| bad("missing version"))?,
        config: serde_json::from_value(Value::Object(config))?,
        passed: passed.ok_or_else(|| bad("missing passed"))?,
        checks,
    })
}
