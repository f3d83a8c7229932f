use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::json::{read_json, DataFile, ElementFile, MatrixJson, FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Feasible,
    Infeasible,
    Undecided,
    Violation,
    NoViolationFound,
    Found,
    NotFound,
    /// Two routes certified opposite decisions.
    Contradiction,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Feasible | Status::NoViolationFound | Status::Found => 0,
            Status::Infeasible | Status::Violation | Status::NotFound => 1,
            Status::Undecided => 2,
            Status::Contradiction => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Undecided => "undecided",
            Status::Violation => "violation",
            Status::NoViolationFound => "no-violation-found",
            Status::Found => "found",
            Status::NotFound => "not-found",
            Status::Contradiction => "contradiction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub strict_tol: f64,
    pub gap_tol: f64,
    pub violation_tol: f64,
}

/// Evidence attached to a result; `verify` replays each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// A lifted element through `route`; its smallest eigenvalue is `margin`.
    Lift { route: String, margin: f64, lift: ElementFile },
    /// Dual witness for `problem` (a route name, `th-st`, `riesz` or
    /// `tr-interpolate`): PSD blocks annihilating the linear part, bounding
    /// every achievable margin by `upper_bound`.
    Dual {
        problem: String,
        upper_bound: f64,
        blocks: Vec<MatrixJson>,
    },
    /// Contraction or unitary tuple at which the pencil has least eigenvalue `value`.
    Representation {
        reps: String,
        d: usize,
        value: f64,
        mats: Vec<MatrixJson>,
    },
    Decomposition {
        margin: f64,
        b: MatrixJson,
        c: MatrixJson,
        z1: MatrixJson,
        z2: MatrixJson,
    },
    Scheme { delta: f64, x: Vec<MatrixJson> },
    Interpolant { margin: f64, y: MatrixJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub format: u32,
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub status: Status,
    pub margin: Option<f64>,
    pub upper_bound: Option<f64>,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<ElementFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    pub certificates: Vec<Certificate>,
    /// Only recorded with `--timing`, so that default output is reproducible.
    pub wall_time_s: Option<f64>,
}

impl ResultFile {
    pub fn new(command: Vec<String>, status: Status, seed: u64, tolerances: Tolerances) -> Self {
        Self {
            format: FORMAT,
            command,
            status,
            margin: None,
            upper_bound: None,
            seed,
            tolerances,
            element: None,
            data: None,
            algebra: None,
            certificates: Vec::new(),
            wall_time_s: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r: Self = read_json(path)?;
        if r.format != FORMAT {
            return Err(crate::error::CliError::Invalid(format!("unsupported format {}", r.format)));
        }
        Ok(r)
    }
}
