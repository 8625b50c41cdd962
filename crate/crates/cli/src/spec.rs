//! Constraint files.
//!
//! A constraint file is TOML:
//!
//! ```toml
//! circuit = "s27.bench"      # optional, relative to this file
//!
//! [cycles]                   # optional
//! min = 1
//! max = 25
//!
//! [[constraint]]
//! output = "G17"
//! value = 1
//! ```
//!
//! At least one `[[constraint]]` is required. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use seqsat_core::{ConstraintError, Netlist, OutputConstraint};

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("{0}")]
    Syntax(String),
    #[error("no [[constraint]] entries")]
    NoConstraints,
    #[error("output {output}: value must be 0 or 1, got {value}")]
    NonBinary { output: String, value: i64 },
    #[error("cycles: min ({min}) must be at least 1 and at most max ({max})")]
    BadCycles { min: usize, max: usize },
    #[error("output {0} is not a primary output of the circuit")]
    UnknownOutput(String),
    #[error("output {0} is constrained more than once")]
    Duplicate(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleBounds {
    pub min: Option<usize>,
    pub max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputValue {
    pub output: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub circuit: Option<PathBuf>,
    #[serde(default)]
    pub cycles: CycleBounds,
    #[serde(rename = "constraint", default)]
    pub constraints: Vec<OutputValue>,
}

impl ConstraintSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec: ConstraintSpec = toml::from_str(text).map_err(|e| SpecError::Syntax(e.message().to_string()))?;
        if spec.constraints.is_empty() {
            return Err(SpecError::NoConstraints);
        }
        if let Some(bad) = spec.constraints.iter().find(|c| c.value != 0 && c.value != 1) {
            return Err(SpecError::NonBinary {
                output: bad.output.clone(),
                value: bad.value,
            });
        }
        let min = spec.cycles.min.unwrap_or(1);
        let max = spec.cycles.max.unwrap_or(usize::MAX);
        if min < 1 || min > max {
            return Err(SpecError::BadCycles { min, max });
        }
        Ok(spec)
    }

    /// Circuit path resolved against the directory holding the spec file.
    pub fn circuit_path(&self, spec_file: &Path) -> Option<PathBuf> {
        let rel = self.circuit.as_ref()?;
        Some(match spec_file.parent() {
            Some(dir) if rel.is_relative() => dir.join(rel),
            _ => rel.clone(),
        })
    }

    pub fn to_constraint(&self, nl: &Netlist) -> Result<OutputConstraint, SpecError> {
        let pairs: Vec<(&str, bool)> = self
            .constraints
            .iter()
            .map(|c| (c.output.as_str(), c.value == 1))
            .collect();
        OutputConstraint::from_named(nl, &pairs).map_err(|e| match e {
            ConstraintError::UnknownOutput(name) => SpecError::UnknownOutput(name),
            ConstraintError::Conflict(name) => SpecError::Duplicate(name),
            other => SpecError::Syntax(other.to_string()),
        })
    }
}
