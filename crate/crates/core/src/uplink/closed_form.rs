//! Closed-form UatF SINR of BE combining.

use crate::error::Result;
use crate::estimation::EstimatorBank;
use crate::linalg::{trace_of_product, CMatrix, C64};
use crate::report::{Direction, SeReport};
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

use super::combiners::CombinerBank;

/// Which second moment the noise term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseTerm {
    /// `tr(WᴴW (Ḡ_mkk + τ_p AΨAᴴ))`, exact for every estimator.
    #[default]
    Direct,
    /// `tr(WᴴW (Ḡ_mkk + √p_k τ_p Ř Aᴴ))`; equal to `Direct` for MMSE.
    AsPrinted,
}

/// Terms of the closed form for one `(m, k, l)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlTerms {
    /// `ε_mkl = tr(Wᴴ E{g_ml g_mlᴴ} W E{ĝ_mk ĝ_mkᴴ})`.
    pub epsilon: f64,
    /// `ξ_mkl`, nonzero only inside the pilot coset.
    pub xi: f64,
    /// `χ_mkl`.
    pub chi: C64,
}

/// `√p_k τ_p Ř_mk A_mkᴴ`.
fn coherent_part(stats: &ChannelStatistics, est: &EstimatorBank, cfg: &ScenarioConfig, m: usize, l: usize, k: usize) -> CMatrix {
    (stats.corr(m, l) * est.a(m, k).adjoint()).scale(cfg.ul_power(l).sqrt() * cfg.tau_p as f64)
}

/// `R̄_mk = Ḡ_mkk + √p_k τ_p Ř_mk A_mkᴴ`.
pub fn r_bar(stats: &ChannelStatistics, est: &EstimatorBank, cfg: &ScenarioConfig, m: usize, k: usize) -> CMatrix {
    stats.los_outer(m, k, k) + coherent_part(stats, est, cfg, m, k, k)
}

/// `B_mlk = Ḡ_mlk + √p_l τ_p Ř_ml A_mkᴴ`.
pub fn b_matrix(stats: &ChannelStatistics, est: &EstimatorBank, cfg: &ScenarioConfig, m: usize, l: usize, k: usize) -> CMatrix {
    stats.los_outer(m, l, k) + coherent_part(stats, est, cfg, m, l, k)
}

/// Evaluates `ε, ξ, χ` for combiner `W_mk` against UE `l`'s channel.
pub fn ul_terms(
    w: &CMatrix,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    m: usize,
    k: usize,
    l: usize,
) -> UlTerms {
    let x = w * &est.link(m, k).est_second_moment * w.adjoint();
    let epsilon = trace_of_product(&stats.link(m, l).second_moment(), &x).re;
    let wh = w.adjoint();
    let t1 = trace_of_product(&wh, &stats.los_outer(m, l, k));
    if pilots.shares_pilot(k, l) {
        let t2 = trace_of_product(&wh, &(stats.corr(m, l) * est.a(m, k).adjoint()));
        let s = cfg.ul_power(l).sqrt() * cfg.tau_p as f64;
        let xi = 2.0 * s * (t1 * t2.conj()).re + s * s * t2.norm_sqr();
        UlTerms { epsilon, xi, chi: t1 + t2 * s }
    } else {
        UlTerms { epsilon, xi: 0.0, chi: t1 }
    }
}

/// Closed-form UatF SINR of every UE for BE combiners.
pub fn ul_closed_form_sinr(
    bank: &CombinerBank,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    noise_term: NoiseTerm,
) -> Result<Vec<f64>> {
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    bank.check_shape(mm, kk, n)?;
    let mut out = Vec::with_capacity(kk);
    for k in 0..kk {
        let pk = cfg.ul_power(k);
        let mut desired = C64::new(0.0, 0.0);
        let mut noise = 0.0;
        for m in 0..mm {
            let w = bank.w(m, k);
            desired += trace_of_product(&w.adjoint(), &r_bar(stats, est, cfg, m, k));
            let moment = match noise_term {
                NoiseTerm::Direct => est.link(m, k).est_second_moment.clone(),
                NoiseTerm::AsPrinted => r_bar(stats, est, cfg, m, k),
            };
            noise += trace_of_product(&(w.adjoint() * w), &moment).re;
        }
        let signal = pk * desired.norm_sqr();
        if signal == 0.0 {
            out.push(0.0);
            continue;
        }
        let mut interference = 0.0;
        for l in 0..kk {
            let pl = cfg.ul_power(l);
            let mut chi_sum = C64::new(0.0, 0.0);
            let mut chi_sq = 0.0;
            for m in 0..mm {
                let t = ul_terms(bank.w(m, k), stats, pilots, est, cfg, m, k, l);
                interference += pl * (t.epsilon + t.xi);
                chi_sum += t.chi;
                chi_sq += t.chi.norm_sqr();
            }
            interference += pl * (chi_sum.norm_sqr() - chi_sq);
        }
        let den = interference - signal + cfg.noise_power * noise;
        out.push(if den > 0.0 { signal / den } else { f64::INFINITY });
    }
    Ok(out)
}

/// Closed-form columns of a UL report.
pub fn se_closed_form_ul(
    bank: &CombinerBank,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    scheme: &str,
) -> Result<SeReport> {
    let sinr = ul_closed_form_sinr(bank, stats, pilots, est, cfg, NoiseTerm::Direct)?;
    let mut report = SeReport::new(Direction::Ul, scheme, est.label(), sinr.len());
    report.set_cf(cfg.prelog(), &sinr);
    Ok(report)
}
