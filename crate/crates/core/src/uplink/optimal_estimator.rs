//! Estimator matrices maximizing the UatF SINR for a fixed BE bank in
//! Rayleigh fading.

use crate::error::{Error, Result};
use crate::estimation::{EstimatorBank, EstimatorSpec};
use crate::linalg::{unvec, CMatrix, CVector};
use crate::montecarlo::McSettings;
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

use super::combiners::CombinerBank;
use super::stacked::{stacked_mc, Side, StackedSolution};

/// Sampled system `a*_k = T⁻¹ E{ř_k}` and the resulting estimators.
#[derive(Debug, Clone)]
pub struct OptEstimatorSystem {
    pub ues: Vec<StackedSolution>,
    /// `A*_mk`, `m`-major.
    pub estimators: Vec<CMatrix>,
}

impl OptEstimatorSystem {
    pub fn sinr(&self) -> Vec<f64> {
        self.ues.iter().map(|u| u.sinr).collect()
    }

    pub fn spec(&self) -> EstimatorSpec {
        EstimatorSpec::Custom(self.estimators.clone())
    }
}

pub fn optimal_estimator_rayleigh(
    bank: &CombinerBank,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    settings: &McSettings,
    loading: f64,
) -> Result<OptEstimatorSystem> {
    if let Some((ap, ue)) = stats.first_rician_link() {
        return Err(Error::RicianNotSupported { ap, ue });
    }
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    bank.check_shape(mm, kk, n)?;
    settings.validate(McSettings::MIN_REALIZATIONS)?;
    // the estimator only sets how y is mapped to ĝ; the pilot side does not
    // depend on it, so any bank works for drawing (g, y)
    let est = EstimatorBank::build(&EstimatorSpec::Gls, stats, pilots, cfg)?;
    let ues = stacked_mc(stats, pilots, cfg, &est, Side::Pilot, Some(bank), settings, loading)?;
    let n2 = n * n;
    let mut estimators = vec![CMatrix::zeros(n, n); mm * kk];
    for (k, ue) in ues.iter().enumerate() {
        for m in 0..mm {
            let seg = CVector::from_column_slice(&ue.weights.as_slice()[m * n2..(m + 1) * n2]);
            estimators[m * kk + k] = unvec(&seg, n)?;
        }
    }
    Ok(OptEstimatorSystem { ues, estimators })
}
