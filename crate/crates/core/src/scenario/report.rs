use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioKind};

/// One reported quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Num(f64),
    Text(String),
}

impl Value {
    fn is_finite(&self) -> bool {
        match self {
            Value::Num(x) => x.is_finite(),
            _ => true,
        }
    }

    fn to_field(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            // Shortest representation that parses back to the same f64.
            Value::Num(x) => format!("{x:?}"),
            Value::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// A reported value compared against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub expected: Value,
    /// Absolute tolerance; `None` for exact comparisons.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// Passes when `|value - expected| <= tolerance`.
    pub fn within(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value: value.into(),
            expected: expected.into(),
            tolerance: Some(tolerance),
            passed: (value - expected).abs() <= tolerance,
        }
    }

    /// Same, comparing angles on the circle.
    pub fn angle(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            passed: crate::angle_diff(value, expected).abs() <= tolerance,
            ..Self::within(name, value, expected, tolerance)
        }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value: value.into(),
            expected: 0.0.into(),
            tolerance: Some(bound),
            passed: value <= bound,
        }
    }

    pub fn equal(name: &str, value: impl Into<Value>, expected: impl Into<Value>) -> Self {
        let (value, expected) = (value.into(), expected.into());
        Self {
            name: name.to_string(),
            passed: value == expected,
            value,
            expected,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine: String,
    pub version: String,
    pub hbar: f64,
    pub c: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub id: String,
    pub kind: ScenarioKind,
    pub outputs: BTreeMap<String, Value>,
    pub diagnostics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn output(&self, name: &str) -> Option<f64> {
        self.outputs.get(name).and_then(Value::as_f64)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let bad = self
            .outputs
            .iter()
            .chain(&self.diagnostics)
            .find(|(_, v)| !v.is_finite())
            .map(|(k, _)| k.clone())
            .or_else(|| {
                self.checks
                    .iter()
                    .find(|c| {
                        !c.value.is_finite() || !c.expected.is_finite() || c.tolerance.is_some_and(|t| !t.is_finite())
                    })
                    .map(|c| format!("checks.{}", c.name))
            })
            .or_else(|| {
                (!self.provenance.hbar.is_finite() || !self.provenance.c.is_finite()).then(|| "provenance".to_string())
            });
        match bad {
            Some(k) => Err(ScenarioError::InternalInvariantBroken(format!(
                "report `{}` has a non-finite value at `{k}`",
                self.id
            ))),
            None => Ok(()),
        }
    }

    /// Dotted-path view used for CSV rows.
    pub fn flatten(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("id".to_string(), self.id.clone());
        m.insert("kind".to_string(), self.kind.to_string());
        for (k, v) in &self.outputs {
            m.insert(format!("outputs.{k}"), v.to_field());
        }
        for (k, v) in &self.diagnostics {
            m.insert(format!("diagnostics.{k}"), v.to_field());
        }
        for c in &self.checks {
            m.insert(format!("checks.{}.value", c.name), c.value.to_field());
            m.insert(format!("checks.{}.expected", c.name), c.expected.to_field());
            if let Some(t) = c.tolerance {
                m.insert(format!("checks.{}.tolerance", c.name), Value::Num(t).to_field());
            }
            m.insert(format!("checks.{}.passed", c.name), c.passed.to_string());
        }
        let p = &self.provenance;
        m.insert("provenance.engine".to_string(), p.engine.clone());
        m.insert("provenance.version".to_string(), p.version.clone());
        m.insert("provenance.hbar".to_string(), Value::Num(p.hbar).to_field());
        m.insert("provenance.c".to_string(), Value::Num(p.c).to_field());
        m.insert("provenance.seed".to_string(), p.seed.to_string());
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(ScenarioError::UnsupportedFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

pub fn emit_report(report: &RunReport, format: Format) -> Result<String, ScenarioError> {
    match format {
        Format::Json => {
            report.validate()?;
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => emit_reports(std::slice::from_ref(report), Format::Csv),
    }
}

/// Several reports as one document: a JSON array, or one CSV row per report
/// under the sorted union of their dotted keys.
pub fn emit_reports(reports: &[RunReport], format: Format) -> Result<String, ScenarioError> {
    for r in reports {
        r.validate()?;
    }
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(reports)
                .map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let rows: Vec<BTreeMap<String, String>> = reports.iter().map(RunReport::flatten).collect();
            let header: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| ScenarioError::InternalInvariantBroken(e.to_string());
            w.write_record(header.iter().map(|s| s.as_str())).map_err(io)?;
            for row in &rows {
                w.write_record(header.iter().map(|k| row.get(*k).map_or("", String::as_str)))
                    .map_err(io)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        let mut outputs = BTreeMap::new();
        outputs.insert("phase".to_string(), Value::Num(0.1 + 0.2));
        outputs.insert("winding".to_string(), Value::Int(-3));
        outputs.insert("class".to_string(), Value::from("ab_type"));
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("error, estimated".to_string(), Value::Num(1.234_567_890_123_456_7e-13));
        RunReport {
            id: "sample".into(),
            kind: ScenarioKind::AbPhase,
            outputs,
            diagnostics,
            checks: vec![
                Check::within("phase", 0.3, 0.1 + 0.2, 1e-12),
                Check::equal("class", "a", "a"),
            ],
            provenance: Provenance {
                engine: "holonomy-core".into(),
                version: "0".into(),
                hbar: 1.0,
                c: 1.0,
                seed: 7,
            },
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let text = emit_report(&r, Format::Json).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(emit_report(&back, Format::Json).unwrap(), text);
    }

    #[test]
    fn csv_header_is_sorted_dotted_keys() {
        let text = emit_report(&sample(), Format::Csv).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        let mut sorted = header.clone();
        sorted.sort();
        assert_eq!(header, sorted);
        assert!(header.contains(&"outputs.phase".to_string()));
        assert!(header.contains(&"diagnostics.error, estimated".to_string()));
        let row = rd.records().next().unwrap().unwrap();
        let i = header.iter().position(|h| h == "outputs.phase").unwrap();
        assert_eq!(row[i].parse::<f64>().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn nan_is_refused() {
        let mut r = sample();
        r.outputs.insert("bad".into(), Value::Num(f64::NAN));
        for f in [Format::Json, Format::Csv] {
            assert!(matches!(
                emit_report(&r, f),
                Err(ScenarioError::InternalInvariantBroken(_))
            ));
        }
    }

    #[test]
    fn unknown_format() {
        assert!(matches!(
            "yaml".parse::<Format>(),
            Err(ScenarioError::UnsupportedFormat(_))
        ));
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
    }
}
