//! Solution files: JSON for exact round trips, CSV of sampled flows for plotting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::efpa::ParametricSolution;
use crate::error::{Error, Result};
use crate::mcfi::InterpolatedSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionFormat {
    Json,
    Csv,
}

impl std::str::FromStr for SolutionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(SolutionFormat::Json),
            "csv" => Ok(SolutionFormat::Csv),
            _ => Err(Error::invalid(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolutionFile {
    Parametric(ParametricSolution),
    Interpolated(InterpolatedSolution),
}

impl SolutionFile {
    fn is_empty(&self) -> bool {
        match self {
            SolutionFile::Parametric(s) => s.segments.is_empty(),
            SolutionFile::Interpolated(s) => s.breakpoints.is_empty(),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            SolutionFile::Parametric(s) => (s.segments[0].lambda_lo, s.lambda_max()),
            SolutionFile::Interpolated(s) => (s.breakpoints[0].lambda, s.lambda_max()),
        }
    }

    pub fn flow_at(&self, lambda: f64) -> Result<Vec<f64>> {
        match self {
            SolutionFile::Parametric(s) => s.flow_at(lambda).ok_or_else(|| Error::invalid("empty solution")),
            SolutionFile::Interpolated(s) => s.query(lambda),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        if self.is_empty() {
            return Err(Error::invalid("refusing to write an empty solution"));
        }
        Ok(serde_json::to_string(self)?)
    }

    /// One row per λ on a uniform grid of `samples` points, flows per edge.
    pub fn to_csv(&self, samples: usize) -> Result<String> {
        if self.is_empty() {
            return Err(Error::invalid("refusing to write an empty solution"));
        }
        let (lo, hi) = self.range();
        let m = self.flow_at(lo)?.len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["lambda".to_string()];
        header.extend((0..m).map(|e| format!("x{e}")));
        w.write_record(&header)?;
        let k = samples.max(2);
        for i in 0..k {
            let lam = if i + 1 == k {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (k - 1) as f64
            };
            let mut row = vec![format!("{lam:?}")];
            row.extend(self.flow_at(lam)?.iter().map(|x| format!("{x:?}")));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }
}

pub fn write_solution(sol: &SolutionFile, format: SolutionFormat, samples: usize, path: &Path) -> Result<()> {
    let text = match format {
        SolutionFormat::Json => sol.to_json()?,
        SolutionFormat::Csv => sol.to_csv(samples)?,
    };
    write_text(path, &text)
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}
