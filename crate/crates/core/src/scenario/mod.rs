//! Scenario files: parsing and validation, dispatch to the engines, and
//! machine-readable reports.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! id = "cone-60"
//! kind = "berry_adiabatic"
//! seed = 0                      # optional
//!
//! [constants]                   # optional, natural units by default
//! hbar = 1.0
//! c = 1.0
//!
//! [params]
//! theta = "60 deg"
//! ```
//!
//! Unknown keys anywhere are rejected. Angles are radians when given as
//! numbers; strings take an explicit `deg` or `rad` suffix.

mod corpus;
mod params;
mod report;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::HolonomyError;
use crate::Constants;

pub use corpus::{corpus, run_corpus, CorpusEntry, CorpusOutcome};
pub use params::{ClassifySubject, Params, SpherePreset};
pub use report::{emit_report, emit_reports, Check, Format, Provenance, RunReport, Value};
pub use run::{run, run_sweep, sweep_values};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("scenario `{id}`: {source}")]
    Engine {
        id: String,
        #[source]
        source: HolonomyError,
    },

    #[error("unsupported output format `{0}` (expected json or csv)")]
    UnsupportedFormat(String),

    #[error("internal invariant broken: {0}")]
    InternalInvariantBroken(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit status for this failure: 2 for input problems, 3 for
    /// engine failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation { .. } | Self::UnsupportedFormat(_) | Self::Io { .. } => 2,
            Self::Engine { .. } | Self::InternalInvariantBroken(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BerryAdiabatic,
    AharonovAnandan,
    Bargmann,
    ConnectionIntegral,
    SphereTransport,
    Mobius,
    Foucault,
    Thomas,
    AbPhase,
    Classify,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 10] = [
        Self::BerryAdiabatic,
        Self::AharonovAnandan,
        Self::Bargmann,
        Self::ConnectionIntegral,
        Self::SphereTransport,
        Self::Mobius,
        Self::Foucault,
        Self::Thomas,
        Self::AbPhase,
        Self::Classify,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BerryAdiabatic => "berry_adiabatic",
            Self::AharonovAnandan => "aharonov_anandan",
            Self::Bargmann => "bargmann",
            Self::ConnectionIntegral => "connection_integral",
            Self::SphereTransport => "sphere_transport",
            Self::Mobius => "mobius",
            Self::Foucault => "foucault",
            Self::Thomas => "thomas",
            Self::AbPhase => "ab_phase",
            Self::Classify => "classify",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
            ScenarioError::validation(
                "kind",
                format!("unknown kind `{s}`; expected one of {}", names.join(", ")),
            )
        })
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub constants: Constants,
    pub params: Params,
    raw_params: toml::Table,
}

impl Scenario {
    /// Replaces one numeric parameter and revalidates.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, ScenarioError> {
        let mut raw = self.raw_params.clone();
        let v = if value.fract() == 0.0 && value.abs() < 9.0e15 && raw.get(name).is_some_and(|v| v.is_integer()) {
            toml::Value::Integer(value as i64)
        } else {
            toml::Value::Float(value)
        };
        raw.insert(name.to_string(), v);
        let params = Params::from_table(self.kind, &raw, &self.constants)?;
        Ok(Self {
            params,
            raw_params: raw,
            ..self.clone()
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates one scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;

    let id = match doc.remove("id") {
        Some(toml::Value::String(s)) if !s.trim().is_empty() => s,
        Some(_) => return Err(ScenarioError::validation("id", "must be a non-empty string")),
        None => return Err(ScenarioError::validation("id", "missing required key")),
    };
    let kind: ScenarioKind = match doc.remove("kind") {
        Some(toml::Value::String(s)) => s.parse()?,
        Some(_) => return Err(ScenarioError::validation("kind", "must be a string")),
        None => return Err(ScenarioError::validation("kind", "missing required key")),
    };
    let seed = match doc.remove("seed") {
        Some(toml::Value::Integer(s)) if s >= 0 => s as u64,
        Some(_) => return Err(ScenarioError::validation("seed", "must be a non-negative integer")),
        None => 0,
    };
    let constants = match doc.remove("constants") {
        Some(toml::Value::Table(t)) => parse_constants(t)?,
        Some(_) => return Err(ScenarioError::validation("constants", "must be a table")),
        None => Constants::default(),
    };
    let raw_params = match doc.remove("params") {
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(ScenarioError::validation("params", "must be a table")),
        None => toml::Table::new(),
    };
    if let Some(key) = doc.keys().next() {
        return Err(ScenarioError::validation(key.as_str(), "unknown key"));
    }
    let params = Params::from_table(kind, &raw_params, &constants)?;
    Ok(Scenario {
        id,
        kind,
        seed,
        constants,
        params,
        raw_params,
    })
}

fn parse_constants(mut t: toml::Table) -> Result<Constants, ScenarioError> {
    let mut c = Constants::default();
    for (key, slot) in [("hbar", &mut c.hbar), ("c", &mut c.c)] {
        if let Some(v) = t.remove(key) {
            let x = match v {
                toml::Value::Float(x) => x,
                toml::Value::Integer(i) => i as f64,
                _ => {
                    return Err(ScenarioError::validation(
                        format!("constants.{key}"),
                        "must be a number",
                    ))
                }
            };
            if !(x > 0.0 && x.is_finite()) {
                return Err(ScenarioError::validation(
                    format!("constants.{key}"),
                    "must be positive and finite",
                ));
            }
            *slot = x;
        }
    }
    if let Some(key) = t.keys().next() {
        return Err(ScenarioError::validation(format!("constants.{key}"), "unknown key"));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn minimal_berry_document_gets_defaults() {
        let s = parse_scenario("id = \"c\"\nkind = \"berry_adiabatic\"\n[params]\ntheta = \"60 deg\"\n").unwrap();
        assert_eq!(s.kind, ScenarioKind::BerryAdiabatic);
        assert_eq!(s.seed, 0);
        match s.params {
            Params::BerryAdiabatic {
                theta,
                field,
                points,
                steps,
                level,
                ..
            } => {
                assert!((theta - PI / 3.0).abs() < 1e-15);
                assert_eq!((field, points, steps, level), (1.0, 2000, 16, 0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_latitude_is_named() {
        let err = parse_scenario("id = \"f\"\nkind = \"foucault\"\n[params]\ndays = 1.0\n").unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Validation { key, .. } if key == "latitude"),
            "{err}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario("id = \"f\"\nkind = \"foucault\"\n[params]\nlatitude = 0.5\ncolour = \"red\"\n")
            .unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Validation { key, .. } if key == "colour"),
            "{err}"
        );
        let err =
            parse_scenario("id = \"f\"\nkind = \"foucault\"\nauthor = \"x\"\n[params]\nlatitude = 0.5\n").unwrap_err();
        assert!(matches!(&err, ScenarioError::Validation { key, .. } if key == "author"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("id = \"x\"\nkind = = 3\n").unwrap_err();
        match err {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_kind() {
        let err = parse_scenario("id = \"x\"\nkind = \"wormhole\"\n").unwrap_err();
        assert!(matches!(&err, ScenarioError::Validation { key, .. } if key == "kind"));
    }

    #[test]
    fn with_param_revalidates() {
        let s = parse_scenario("id = \"f\"\nkind = \"foucault\"\n[params]\nlatitude = 0.5\n").unwrap();
        let t = s.with_param("latitude", 0.25).unwrap();
        assert!(matches!(t.params, Params::Foucault { latitude, .. } if latitude == 0.25));
        assert!(s.with_param("latitude", 3.0).is_err());
    }
}
