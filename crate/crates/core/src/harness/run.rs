//! Experiment runner.

use std::time::Instant;

use rayon::prelude::*;

use crate::downlink::{dl_from_moments, dl_power_allocation, se_dl_closed, DlFormula, DlNormalization};
use crate::error::Result;
use crate::estimation::{EstimatorBank, EstimatorSpec};
use crate::montecarlo::McSettings;
use crate::report::{Direction, SeReport};
use crate::scenario::{assign_pilots, build_statistics, generate_geometry, ChannelStatistics, ScenarioConfig};
use crate::uplink::{
    lsfd_two_layer, obe_closed, obe_mc, ul_closed_form_sinr, ul_moments, ul_report_from_moments, CombinerBank,
    LocalScheme, NoiseTerm, ObeOptions,
};
use crate::linalg::DEFAULT_LOADING;

use super::config::{ExperimentConfig, Scheme};
use super::rows::{rows_from_report, ReportRow};

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Reports of one `(scheme, estimator)` cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub scheme: Scheme,
    pub estimator: String,
    pub ul: Option<SeReport>,
    pub dl: Option<SeReport>,
    pub wall_ms: f64,
}

/// Evaluates every scheme and estimator on one scenario. All cells share
/// the same Monte-Carlo seed.
pub fn evaluate_scenario(
    exp: &ExperimentConfig,
    sc: &ScenarioConfig,
    stats: &ChannelStatistics,
    mc_seed: u64,
) -> Result<Vec<CellResult>> {
    let pilots = assign_pilots(sc);
    let settings = McSettings::new(exp.mc_samples, mc_seed).with_batches(exp.batches);
    let obe_settings = McSettings::new(exp.obe_samples, mix(mc_seed, 1, 0)).with_batches(exp.batches);
    let power = dl_power_allocation(stats, sc);
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    let mut out = Vec::new();
    for spec in &exp.estimators {
        let est = EstimatorBank::build(spec, stats, &pilots, sc)?;
        for &scheme in &exp.schemes {
            let start = Instant::now();
            let mut ul = None;
            let mut dl = None;
            let be_bank = match scheme {
                Scheme::Mr => Some(CombinerBank::identity(mm, kk, n)),
                Scheme::Obe => Some(obe_closed(stats, &pilots, &est, sc, &ObeOptions::default())?.bank),
                Scheme::ObeMc => Some(obe_mc(stats, &pilots, &est, sc, &obe_settings, DEFAULT_LOADING)?.bank),
                _ => None,
            };
            match scheme {
                Scheme::LmmseLsfd | Scheme::LrzfLsfd => {
                    if exp.direction.ul() {
                        let local = if scheme == Scheme::LmmseLsfd { LocalScheme::Lmmse } else { LocalScheme::Lrzf };
                        ul = Some(lsfd_two_layer(&local, stats, &pilots, &est, sc, &settings)?.report);
                    }
                }
                _ => {
                    let local = match (&be_bank, scheme) {
                        (Some(bank), _) => LocalScheme::Bilinear(bank.clone()),
                        (None, Scheme::Lmmse) => LocalScheme::Lmmse,
                        _ => LocalScheme::Lrzf,
                    };
                    let moments = ul_moments(&local, stats, &pilots, &est, sc, &settings)?;
                    if exp.direction.ul() {
                        let mut r = ul_report_from_moments(&moments, scheme.name(), est.label(), sc);
                        if let Some(bank) = &be_bank {
                            let cf = ul_closed_form_sinr(bank, stats, &pilots, &est, sc, NoiseTerm::Direct)?;
                            r.set_cf(sc.prelog(), &cf);
                        }
                        ul = Some(r);
                    }
                    if exp.direction.dl() {
                        let norm = if be_bank.is_some() { DlNormalization::ClosedForm } else { DlNormalization::MonteCarlo };
                        let mut r = dl_from_moments(&moments, &local, &power, norm, &est, sc)?.report;
                        if let Some(bank) = &be_bank {
                            let cf = se_dl_closed(bank, stats, &pilots, &est, &power, sc, DlFormula::Consistent)?;
                            r.merge_cf(&cf.report);
                        }
                        dl = Some(r);
                    }
                }
            }
            for r in ul.iter_mut().chain(dl.iter_mut()) {
                r.scheme = scheme.name().to_string();
            }
            let wall_ms = if exp.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            out.push(CellResult { scheme, estimator: est.label().to_string(), ul, dl, wall_ms });
        }
    }
    Ok(out)
}

/// Statistics of one trial's scenario.
pub fn trial_statistics(exp: &ExperimentConfig, trial: usize, sweep: usize) -> Result<(ScenarioConfig, ChannelStatistics)> {
    let sc = exp.scenario_for(trial, sweep);
    sc.validate()?;
    let stats = build_statistics(&generate_geometry(&sc), &sc)?;
    Ok((sc, stats))
}

/// Runs every trial and sweep point; rows come out in
/// `(trial, sweep, estimator, scheme, direction, ue)` order regardless of
/// how many worker threads are used.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_experiment_with(exp, None)
}

/// Like [`run_experiment`], optionally replaying fixed statistics instead
/// of drawing geometry.
pub fn run_experiment_with(exp: &ExperimentConfig, fixed: Option<&ChannelStatistics>) -> Result<Vec<ReportRow>> {
    exp.validate()?;
    let points = exp.sweep_points();
    let jobs: Vec<(usize, usize, usize)> = (0..exp.trials)
        .flat_map(|t| points.iter().enumerate().map(move |(i, &v)| (t, i, v)))
        .collect();
    let per_job: Vec<Result<Vec<ReportRow>>> = jobs
        .par_iter()
        .map(|&(trial, idx, value)| {
            let (sc, stats) = match fixed {
                Some(s) => {
                    let mut sc = exp.scenario_for(trial, value);
                    sc.num_aps = s.num_aps();
                    sc.num_ues = s.num_ues();
                    sc.antennas = s.antennas();
                    sc.validate()?;
                    (sc, s.clone())
                }
                None => trial_statistics(exp, trial, value)?,
            };
            let cells = evaluate_scenario(exp, &sc, &stats, mix(exp.seed, trial as u64 + 1, idx as u64 + 1))?;
            let sweep = if exp.sweep == super::config::SweepAxis::None { 0 } else { value };
            let mut rows = Vec::new();
            for c in &cells {
                for r in c.ul.iter().chain(c.dl.iter()) {
                    rows.extend(rows_from_report(r, trial, sweep, c.wall_ms));
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Mean of the per-UE SE column over rows matching the filter.
pub fn mean_se(rows: &[ReportRow], direction: Direction, scheme: &str, estimator: &EstimatorSpec) -> Option<f64> {
    let label = estimator.label();
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.direction == direction && r.scheme == scheme && r.estimator == label)
        .filter_map(|r| r.se())
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
