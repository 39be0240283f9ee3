use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use steiner_core::weight::{format_rational, to_f64};
use steiner_core::Weight;

/// One JSON-lines run record. Costs are in input units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub instance: String,
    pub solver: String,
    /// `solved`, `infeasible`, `certified-no` or `error`.
    pub status: String,
    pub cost: Option<String>,
    pub oracle_cost: Option<String>,
    /// cost / oracle cost.
    pub ratio: Option<f64>,
    pub claimed_ratio: Option<String>,
    pub guarantee_void: bool,
    pub wall_ms: f64,
    pub contractions: Option<usize>,
    pub residual_terminals: Option<usize>,
    pub tau: Option<u64>,
    pub message: Option<String>,
}

impl Record {
    pub fn new(instance: &str, solver: &str) -> Self {
        Record { instance: instance.to_string(), solver: solver.to_string(), status: "solved".into(), ..Default::default() }
    }

    pub fn set_cost(&mut self, cost: &Weight) {
        self.cost = Some(format_rational(cost));
    }

    pub fn set_oracle(&mut self, cost: &Weight, oracle: &Weight) {
        self.oracle_cost = Some(format_rational(oracle));
        self.ratio = Some(if *oracle == Weight::from_integer(0) {
            if *cost == *oracle {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            to_f64(&(cost / oracle))
        });
    }
}

/// Appends to `path`, or writes to stderr.
pub fn emit(path: Option<&Path>, record: &Record) -> std::io::Result<()> {
    let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    match path {
        Some(p) => {
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            writeln!(f, "{line}")
        }
        None => {
            eprintln!("{line}");
            Ok(())
        }
    }
}
