//! Reciprocity-based BE precoding, DL power allocation and DL UatF SE.

use crate::channel::ChannelEstimates;
use crate::error::{Error, Result};
use crate::estimation::EstimatorBank;
use crate::linalg::{trace_of_product, CVector, C64};
use crate::montecarlo::{batch_stderr, BatchedMoments, McSettings};
use crate::report::{Direction, SeReport};
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};
use crate::uplink::{ul_moments, ul_terms, CombinerBank, LocalScheme};

/// Per-link DL powers and precoder normalizations, `m`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DlPowerMap {
    num_ues: usize,
    /// `p_mk` (W).
    pub power: Vec<f64>,
    /// Closed-form normalization `η̄_mk` for BE precoders.
    pub eta_cf: Option<Vec<f64>>,
    /// Sampled normalization `η_mk = sqrt(p_mk / E{‖v_mk‖²})`.
    pub eta_mc: Option<Vec<f64>>,
    /// APs whose allocation was scaled down to meet the AP budget.
    pub scaled_aps: Vec<usize>,
}

impl DlPowerMap {
    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn power(&self, m: usize, k: usize) -> f64 {
        self.power[m * self.num_ues + k]
    }

    /// `Σ_m p_mk`.
    pub fn ue_total(&self, k: usize) -> f64 {
        self.power.iter().skip(k).step_by(self.num_ues).sum()
    }

    /// `Σ_k p_mk`.
    pub fn ap_total(&self, m: usize) -> f64 {
        self.power[m * self.num_ues..(m + 1) * self.num_ues].iter().sum()
    }

    /// Sets `η̄_mk = sqrt(p_mk / tr(W_mkᴴ W_mk E{ĝ_mk ĝ_mkᴴ}))`.
    pub fn set_closed_form_eta(&mut self, bank: &CombinerBank, est: &EstimatorBank) -> Result<()> {
        let kk = self.num_ues;
        let mut eta = vec![0.0; self.power.len()];
        for (i, e) in eta.iter_mut().enumerate() {
            let (m, k) = (i / kk, i % kk);
            let w = bank.w(m, k);
            let avg = trace_of_product(&(w.adjoint() * w), &est.link(m, k).est_second_moment).re;
            *e = normalization(self.power[i], avg, m, k)?;
        }
        self.eta_cf = Some(eta);
        Ok(())
    }

    /// Sets `η_mk` from sampled precoder norms.
    pub fn set_mc_eta(&mut self, moments: &BatchedMoments) -> Result<()> {
        let kk = self.num_ues;
        let mut eta = vec![0.0; self.power.len()];
        for (i, e) in eta.iter_mut().enumerate() {
            let (m, k) = (i / kk, i % kk);
            *e = normalization(self.power[i], moments.total.vnorm(m, k), m, k)?;
        }
        self.eta_mc = Some(eta);
        Ok(())
    }
}

fn normalization(power: f64, avg_norm: f64, m: usize, k: usize) -> Result<f64> {
    if power == 0.0 {
        return Ok(0.0);
    }
    if !(avg_norm > 0.0) || !avg_norm.is_finite() {
        return Err(Error::ZeroPrecoderPower { ap: m, ue: k });
    }
    Ok((power / avg_norm).sqrt())
}

/// `p_mk = p_dl · β_mk / Σ_m' β_m'k`, scaled down per AP if the AP budget
/// is exceeded.
pub fn dl_power_allocation(stats: &ChannelStatistics, cfg: &ScenarioConfig) -> DlPowerMap {
    let (mm, kk) = (stats.num_aps(), stats.num_ues());
    let mut power = vec![0.0; mm * kk];
    for k in 0..kk {
        let total: f64 = (0..mm).map(|m| stats.beta(m, k)).sum();
        for m in 0..mm {
            power[m * kk + k] = if total > 0.0 {
                cfg.dl_power_per_ue * stats.beta(m, k) / total
            } else {
                cfg.dl_power_per_ue / mm as f64
            };
        }
    }
    let budget = cfg.ap_budget();
    let mut scaled_aps = Vec::new();
    for m in 0..mm {
        let row = &mut power[m * kk..(m + 1) * kk];
        let used: f64 = row.iter().sum();
        if used > budget * (1.0 + 1e-12) {
            let s = budget / used;
            row.iter_mut().for_each(|p| *p *= s);
            log::warn!("AP {m} allocation {used:.3e} W exceeds budget {budget:.3e} W; scaled by {s:.3}");
            scaled_aps.push(m);
        }
    }
    DlPowerMap { num_ues: kk, power, eta_cf: None, eta_mc: None, scaled_aps }
}

/// `f_mk = η̄_mk W_mk ĝ_mk`.
pub fn precoder(
    bank: &CombinerBank,
    estimates: &ChannelEstimates,
    map: &DlPowerMap,
    m: usize,
    k: usize,
) -> Result<CVector> {
    let eta = map
        .eta_cf
        .as_ref()
        .map(|e| e[m * map.num_ues + k])
        .ok_or_else(|| Error::Config("closed-form normalization not set".into()))?;
    if !(eta.is_finite()) {
        return Err(Error::ZeroPrecoderPower { ap: m, ue: k });
    }
    Ok(bank.w(m, k) * estimates.get(m, k) * C64::new(eta, 0.0))
}

/// Which normalization the sampled DL evaluator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlNormalization {
    /// `η̄` in closed form; BE precoders only.
    ClosedForm,
    /// `η` from the sampled precoder norms.
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct DlMcOutcome {
    pub report: SeReport,
    /// Normalization used, `m`-major.
    pub eta: Vec<f64>,
    /// Sampled `E{‖f_mk‖²}` and its batch-means standard error.
    pub power_mc: Vec<f64>,
    pub power_stderr: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn se_dl_mc(
    scheme: &LocalScheme,
    map: &DlPowerMap,
    normalization: DlNormalization,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    settings: &McSettings,
) -> Result<DlMcOutcome> {
    let moments = ul_moments(scheme, stats, pilots, est, cfg, settings)?;
    dl_from_moments(&moments, scheme, map, normalization, est, cfg)
}

/// DL evaluation from precomputed UatF moments of the same local scheme.
pub fn dl_from_moments(
    moments: &BatchedMoments,
    scheme: &LocalScheme,
    map: &DlPowerMap,
    normalization: DlNormalization,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
) -> Result<DlMcOutcome> {
    let mut map = map.clone();
    let eta = match normalization {
        DlNormalization::ClosedForm => {
            let LocalScheme::Bilinear(bank) = scheme else {
                return Err(Error::Config(format!("closed-form normalization needs BE precoders, got {scheme}")));
            };
            map.set_closed_form_eta(bank, est)?;
            map.eta_cf.expect("just set")
        }
        DlNormalization::MonteCarlo => {
            map.set_mc_eta(moments)?;
            map.eta_mc.expect("just set")
        }
    };
    let kk = cfg.num_ues;
    let (sinr, err): (Vec<f64>, Vec<f64>) = (0..kk)
        .map(|k| {
            let e = moments.dl(k, &eta, cfg);
            (e.sinr, e.stderr)
        })
        .unzip();
    let mut report = SeReport::new(Direction::Dl, &scheme.to_string(), est.label(), kk);
    report.set_mc(cfg.prelog(), &sinr, &err);
    let mut power_mc = Vec::with_capacity(eta.len());
    let mut power_stderr = Vec::with_capacity(eta.len());
    for (i, &e) in eta.iter().enumerate() {
        let (m, k) = (i / kk, i % kk);
        power_mc.push(e * e * moments.total.vnorm(m, k));
        let per_batch: Vec<f64> = moments.batches.iter().map(|b| e * e * b.vnorm(m, k)).collect();
        power_stderr.push(batch_stderr(&per_batch));
    }
    Ok(DlMcOutcome { report, eta, power_mc, power_stderr })
}

/// Reading of the last `μ` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DlFormula {
    /// Every term uses UE `l`'s own matrix `W_ml`.
    #[default]
    Consistent,
    /// Last `μ` term as typeset: `tr(W_mlᴴ Ḡ_mkk W_mk R̃_ml)`.
    AsPrinted,
}

/// Closed-form ingredients for one `(m, k, l)`: precoder of UE `l` at AP
/// `m` seen through UE `k`'s channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlTerms {
    pub mu: f64,
    pub omega: f64,
    pub lambda: C64,
}

#[derive(Debug, Clone)]
pub struct DlClosedForm {
    pub report: SeReport,
    /// Indexed `(m · K + k) · K + l`.
    pub terms: Vec<DlTerms>,
}

pub fn se_dl_closed(
    bank: &CombinerBank,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    map: &DlPowerMap,
    cfg: &ScenarioConfig,
    formula: DlFormula,
) -> Result<DlClosedForm> {
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    bank.check_shape(mm, kk, n)?;
    let mut map = map.clone();
    if map.eta_cf.is_none() {
        map.set_closed_form_eta(bank, est)?;
    }
    let eta = map.eta_cf.as_ref().expect("set above");
    let mut terms = Vec::with_capacity(mm * kk * kk);
    for m in 0..mm {
        for k in 0..kk {
            for l in 0..kk {
                let e2 = eta[m * kk + l].powi(2);
                // UL terms with combiner UE l and channel UE k
                let t = ul_terms(bank.w(m, l), stats, pilots, est, cfg, m, l, k);
                let mut mu = t.epsilon;
                if formula == DlFormula::AsPrinted {
                    let gkk = stats.los_outer(m, k, k);
                    let r_tilde = &est.link(m, l).est_cov;
                    let wl = bank.w(m, l);
                    let consistent = trace_of_product(&(wl.adjoint() * &gkk * wl), r_tilde).re;
                    let printed = trace_of_product(&(wl.adjoint() * &gkk * bank.w(m, k)), r_tilde).re;
                    mu += printed - consistent;
                }
                terms.push(DlTerms { mu: e2 * mu, omega: e2 * t.xi, lambda: t.chi * eta[m * kk + l] });
            }
        }
    }
    let at = |m: usize, k: usize, l: usize| &terms[(m * kk + k) * kk + l];
    let mut sinr = Vec::with_capacity(kk);
    for k in 0..kk {
        let desired: C64 = (0..mm).map(|m| at(m, k, k).lambda).sum();
        let signal = desired.norm_sqr();
        if signal == 0.0 {
            sinr.push(0.0);
            continue;
        }
        let mut den = cfg.noise_power;
        for l in 0..kk {
            let mut sum = C64::new(0.0, 0.0);
            for m in 0..mm {
                let t = at(m, k, l);
                den += t.mu + t.omega - t.lambda.norm_sqr();
                sum += t.lambda;
            }
            den += sum.norm_sqr();
        }
        den -= signal;
        sinr.push(if den > 0.0 { signal / den } else { f64::INFINITY });
    }
    let mut report = SeReport::new(Direction::Dl, "be", est.label(), kk);
    report.set_cf(cfg.prelog(), &sinr);
    Ok(DlClosedForm { report, terms })
}
