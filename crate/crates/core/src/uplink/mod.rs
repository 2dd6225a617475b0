//! Uplink combining and spectral efficiency.

mod closed_form;
mod combiners;
mod lsfd;
mod obe;
mod optimal_estimator;
mod stacked;

pub use closed_form::{b_matrix, r_bar, se_closed_form_ul, ul_closed_form_sinr, ul_terms, NoiseTerm, UlTerms};
pub use combiners::{local_combiner, CombinerBank, LocalCombiner, LocalCombining, LocalScheme};
pub use lsfd::{lsfd_two_layer, lsfd_weights, LsfdResult};
pub use obe::{
    b_blocks, closed_form_blocks, link_blocks, obe_closed, obe_mc, r_bar_stacked, LosCoupling, ObeFormula,
    ObeLinkBlocks, ObeOptions, ObeSystem,
};
pub use optimal_estimator::{optimal_estimator_rayleigh, OptEstimatorSystem};
pub use stacked::StackedSolution;

use crate::error::Result;
use crate::estimation::EstimatorBank;
use crate::linalg::C64;
use crate::montecarlo::{simulate_moments, BatchedMoments, McSettings};
use crate::report::{Direction, SeReport};
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

/// Monte-Carlo UatF SE of a local scheme with plain summation at the CPU.
pub fn se_uatf_mc(
    scheme: &LocalScheme,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    settings: &McSettings,
) -> Result<SeReport> {
    let moments = ul_moments(scheme, stats, pilots, est, cfg, settings)?;
    Ok(ul_report_from_moments(&moments, &scheme.to_string(), est.label(), cfg))
}

/// Sampled UatF moments of a local scheme.
pub fn ul_moments(
    scheme: &LocalScheme,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    settings: &McSettings,
) -> Result<BatchedMoments> {
    let combiner = LocalCombiner::new(scheme, est, cfg)?;
    simulate_moments(stats, pilots, cfg, est, &combiner, settings)
}

pub fn ul_report_from_moments(moments: &BatchedMoments, scheme: &str, estimator: &str, cfg: &ScenarioConfig) -> SeReport {
    let ones = vec![C64::new(1.0, 0.0); cfg.num_aps];
    let (sinr, err): (Vec<f64>, Vec<f64>) = (0..cfg.num_ues)
        .map(|k| {
            let e = moments.ul(k, &ones, cfg);
            (e.sinr, e.stderr)
        })
        .unzip();
    let mut report = SeReport::new(Direction::Ul, scheme, estimator, cfg.num_ues);
    report.set_mc(cfg.prelog(), &sinr, &err);
    report
}
