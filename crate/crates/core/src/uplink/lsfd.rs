//! Two-layer decoding: local combining at the APs, statistical weighting
//! of the local estimates at the CPU.

use crate::error::{Error, Result};
use crate::estimation::EstimatorBank;
use crate::linalg::{rayleigh_quotient_max_scaled, CMatrix, CVector, C64, DEFAULT_LOADING};
use crate::montecarlo::{simulate_moments, BatchedMoments, McSettings};
use crate::report::{Direction, SeReport};
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

use super::combiners::{LocalCombiner, LocalScheme};

#[derive(Debug, Clone)]
pub struct LsfdResult {
    pub report: SeReport,
    /// CPU weights per UE (length `M`).
    pub weights: Vec<CVector>,
    /// Same moments evaluated with unit weights.
    pub equal_weight: SeReport,
}

/// Optimal CPU weights `c_k = T⁻¹ b_k` from sampled moments.
pub fn lsfd_weights(moments: &BatchedMoments, cfg: &ScenarioConfig, k: usize) -> Result<CVector> {
    let s = &moments.total;
    let mm = cfg.num_aps;
    let b = CVector::from_fn(mm, |m, _| s.mean_vg(m, k, k));
    let mut t = CMatrix::zeros(mm, mm);
    for l in 0..cfg.num_ues {
        t += s.cross(k, l) * C64::new(cfg.ul_power(l), 0.0);
    }
    t -= &b * b.adjoint() * C64::new(cfg.ul_power(k), 0.0);
    for m in 0..mm {
        t[(m, m)] += cfg.noise_power * s.vnorm(m, k);
    }
    let t = crate::linalg::hermitian_part(&t);
    Ok(rayleigh_quotient_max_scaled(&t, &b, DEFAULT_LOADING)?.x)
}

pub fn lsfd_two_layer(
    scheme: &LocalScheme,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    settings: &McSettings,
) -> Result<LsfdResult> {
    if !matches!(scheme, LocalScheme::Lmmse | LocalScheme::Lrzf) {
        return Err(Error::UnknownScheme(format!("{scheme}+lsfd")));
    }
    let combiner = LocalCombiner::new(scheme, est, cfg)?;
    let moments = simulate_moments(stats, pilots, cfg, est, &combiner, settings)?;
    let kk = cfg.num_ues;
    let ones = vec![C64::new(1.0, 0.0); cfg.num_aps];
    let mut weights = Vec::with_capacity(kk);
    let (mut sinr, mut err, mut sinr_eq, mut err_eq) = (vec![], vec![], vec![], vec![]);
    for k in 0..kk {
        let c = lsfd_weights(&moments, cfg, k)?;
        let e = moments.ul(k, c.as_slice(), cfg);
        sinr.push(e.sinr);
        err.push(e.stderr);
        let e = moments.ul(k, &ones, cfg);
        sinr_eq.push(e.sinr);
        err_eq.push(e.stderr);
        weights.push(c);
    }
    let mut report = SeReport::new(Direction::Ul, &format!("{scheme}+lsfd"), est.label(), kk);
    report.set_mc(cfg.prelog(), &sinr, &err);
    let mut equal_weight = SeReport::new(Direction::Ul, &scheme.to_string(), est.label(), kk);
    equal_weight.set_mc(cfg.prelog(), &sinr_eq, &err_eq);
    Ok(LsfdResult { report, weights, equal_weight })
}
