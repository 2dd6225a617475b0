//! Per-UE spectral-efficiency results shared by the UL and DL evaluators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ul,
    Dl,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ul => "ul",
            Self::Dl => "dl",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ul" | "uplink" => Ok(Self::Ul),
            "dl" | "downlink" => Ok(Self::Dl),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

/// SE in bit/s/Hz from an SINR and the pre-log factor.
pub fn spectral_efficiency(prelog: f64, sinr: f64) -> f64 {
    prelog * (1.0 + sinr.max(0.0)).log2()
}

/// Monte-Carlo and closed-form results for one UE. Columns that were not
/// evaluated are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UeSe {
    pub sinr_mc: Option<f64>,
    pub se_mc: Option<f64>,
    /// Batch-means standard error of `se_mc`.
    pub stderr: Option<f64>,
    pub sinr_cf: Option<f64>,
    pub se_cf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeReport {
    pub direction: Direction,
    pub scheme: String,
    pub estimator: String,
    pub ues: Vec<UeSe>,
}

pub type UlSeReport = SeReport;

impl SeReport {
    pub fn new(direction: Direction, scheme: &str, estimator: &str, num_ues: usize) -> Self {
        Self {
            direction,
            scheme: scheme.to_string(),
            estimator: estimator.to_string(),
            ues: vec![UeSe::default(); num_ues],
        }
    }

    pub fn set_mc(&mut self, prelog: f64, sinr: &[f64], stderr: &[f64]) {
        for (ue, (&s, &e)) in self.ues.iter_mut().zip(sinr.iter().zip(stderr)) {
            ue.sinr_mc = Some(s);
            ue.se_mc = Some(spectral_efficiency(prelog, s));
            ue.stderr = Some(e);
        }
    }

    pub fn set_cf(&mut self, prelog: f64, sinr: &[f64]) {
        for (ue, &s) in self.ues.iter_mut().zip(sinr) {
            ue.sinr_cf = Some(s);
            ue.se_cf = Some(spectral_efficiency(prelog, s));
        }
    }

    /// Copies the closed-form columns of `other` into this report.
    pub fn merge_cf(&mut self, other: &SeReport) {
        for (ue, o) in self.ues.iter_mut().zip(&other.ues) {
            ue.sinr_cf = o.sinr_cf;
            ue.se_cf = o.se_cf;
        }
    }

    pub fn se_mc(&self) -> Vec<f64> {
        self.ues.iter().map(|u| u.se_mc.unwrap_or(f64::NAN)).collect()
    }

    pub fn se_cf(&self) -> Vec<f64> {
        self.ues.iter().map(|u| u.se_cf.unwrap_or(f64::NAN)).collect()
    }

    /// Sum SE, preferring the closed-form column where present.
    pub fn sum_se(&self) -> f64 {
        self.ues.iter().map(|u| u.se_cf.or(u.se_mc).unwrap_or(0.0)).sum()
    }
}
