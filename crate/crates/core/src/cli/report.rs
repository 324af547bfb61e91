//! Report envelopes and their serialization.
//!
//! Reports are pretty-printed JSON. Every float is written as `{:.16e}` (17
//! significant digits) so that re-reading a report reproduces its numbers
//! exactly, and keys appear in a fixed order.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::RunConfig;
use crate::bodies::SupportValue;
use crate::bounds::{BoundReport, PowerReport};
use crate::error::{Error, Result};
use crate::verify::{DerivativeReport, McEstimate, SandwichVerdict, SeedRecord};

/// Name and version of the producing build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactVersion {
    pub name: String,
    pub version: String,
    /// Short git revision of the source tree, if it was known at build time.
    pub revision: Option<String>,
}

impl ArtifactVersion {
    pub fn current() -> Self {
        ArtifactVersion {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            revision: option_env!("GSHIFT_GIT_REV").map(str::to_owned),
        }
    }
}

impl std::fmt::Display for ArtifactVersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.name, self.version)?;
        if let Some(rev) = &self.revision {
            write!(f, " ({rev})")?;
        }
        Ok(())
    }
}

/// How a number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Quadrature { tolerance: f64 },
    MonteCarlo { seed: SeedRecord },
}

/// An adjudicated comparison of a computed value against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(with = "crate::cli::float")]
    pub value: f64,
    #[serde(with = "crate::cli::float")]
    pub reference: f64,
    /// Signed z-score of `value − reference` when the check is statistical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(with = "crate::cli::float")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Bound {
        provenance: Provenance,
        report: BoundReport,
    },
    Power {
        provenance: Provenance,
        report: PowerReport,
    },
    Estimate {
        label: String,
        provenance: Provenance,
        estimate: McEstimate,
    },
    Sandwich {
        t: f64,
        provenance: Provenance,
        verdict: SandwichVerdict,
    },
    Derivative {
        provenance: Provenance,
        report: DerivativeReport,
    },
    Support {
        #[serde(with = "crate::cli::float::vec")]
        direction: Vec<f64>,
        provenance: Provenance,
        support: SupportValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<Vec<f64>>,
    },
    Check {
        provenance: Provenance,
        check: Check,
    },
}

impl Record {
    /// The verdict this record carries, if any.
    pub fn verdict(&self) -> Option<bool> {
        match self {
            Record::Sandwich { verdict, .. } => Some(verdict.pass),
            Record::Derivative { report, .. } => Some(report.pass()),
            Record::Check { check, .. } => Some(check.pass),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Status {
    pub verdicts: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub command: String,
    pub artifact: ArtifactVersion,
    /// The configuration exactly as read; rerunning it reproduces the report.
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub timings: Vec<Timing>,
    pub status: Status,
}

impl ReportEnvelope {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ReportEnvelope {
            command: command.into(),
            artifact: ArtifactVersion::current(),
            config: config.clone(),
            records: Vec::new(),
            timings: Vec::new(),
            status: Status {
                verdicts: 0,
                failed: 0,
                pass: true,
            },
        }
    }

    pub fn push(&mut self, record: Record) {
        if let Some(pass) = record.verdict() {
            self.status.verdicts += 1;
            if !pass {
                self.status.failed += 1;
                self.status.pass = false;
            }
        }
        self.records.push(record);
    }

    pub fn time(&mut self, stage: &str, started: std::time::Instant) {
        self.timings.push(Timing {
            stage: stage.into(),
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    /// True iff every verdict in the report passed.
    pub fn passed(&self) -> bool {
        self.status.pass
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<report>", e.to_string()))
    }
}

/// Serializes with the report float format and indentation.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ReportFormatter::default());
    value.serialize(&mut ser).expect("report values always serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Pretty printing with floats at 17 significant digits.
#[derive(Default)]
pub struct ReportFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&vec![0.1, 1.0 / 3.0, -2.5e-300]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-300]);
    }

    #[test]
    fn verdicts_drive_status() {
        let config = RunConfig::from_json(r#"{"dim": 1, "u": [1]}"#).unwrap();
        let mut env = ReportEnvelope::new("verify", &config);
        let check = |pass| Record::Check {
            provenance: Provenance::Analytic,
            check: Check {
                name: "c".into(),
                pass,
                value: 1.0,
                reference: f64::INFINITY,
                z: None,
                tolerance: 0.0,
            },
        };
        env.push(check(true));
        assert!(env.passed());
        env.push(check(false));
        assert!(!env.passed());
        assert_eq!((env.status.verdicts, env.status.failed), (2, 1));
        let back = ReportEnvelope::from_json(&env.to_json()).unwrap();
        assert_eq!(back, env);
    }
}
