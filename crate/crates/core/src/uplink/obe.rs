//! Optimal bilinear equalizer: closed-form and sampled constructions.

use crate::error::Result;
use crate::estimation::EstimatorBank;
use crate::linalg::{kron_add_into, outer_add_into, unvec, vec, CMatrix, CVector, C64, DEFAULT_LOADING};
use crate::montecarlo::McSettings;
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

use super::closed_form::{b_matrix, r_bar};
use super::combiners::CombinerBank;
use super::stacked::{block_noise, solve_stacked, stacked_mc, Side, StackedSolution};

/// Reading of the LoS cross vectors in the closed-form blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObeFormula {
    /// `c = vec(Ḡ_mlk)` and `b = vec(B_mlk)`, matching the exact moments.
    #[default]
    Derived,
    /// `c = vec(Ḡ_mkl)` and `b = √p_l τ_p vec(Ř_ml A_mkᴴ)` as typeset.
    /// Identical to `Derived` in Rayleigh fading.
    AsPrinted,
}

/// Treatment of the deterministic LoS coupling between different UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosCoupling {
    #[default]
    Full,
    /// `Ḡ_mlk = 0` for `l ≠ k`, the model obtained by averaging out
    /// independent uniform LoS phases.
    PhaseAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObeOptions {
    pub formula: ObeFormula,
    pub coupling: LosCoupling,
    /// Relative diagonal loading of the system matrix.
    pub loading: f64,
}

impl Default for ObeOptions {
    fn default() -> Self {
        Self { formula: ObeFormula::Derived, coupling: LosCoupling::Full, loading: DEFAULT_LOADING }
    }
}

/// Per-UE stacked systems and the optimal bank they define.
#[derive(Debug, Clone)]
pub struct ObeSystem {
    pub ues: Vec<StackedSolution>,
    pub bank: CombinerBank,
}

impl ObeSystem {
    pub fn sinr(&self) -> Vec<f64> {
        self.ues.iter().map(|u| u.sinr).collect()
    }

    fn from_solutions(ues: Vec<StackedSolution>, num_aps: usize, antennas: usize) -> Result<Self> {
        let kk = ues.len();
        let n2 = antennas * antennas;
        let mut w = vec![CMatrix::zeros(antennas, antennas); num_aps * kk];
        for (k, ue) in ues.iter().enumerate() {
            for m in 0..num_aps {
                let seg = CVector::from_column_slice(&ue.weights.as_slice()[m * n2..(m + 1) * n2]);
                w[m * kk + k] = unvec(&seg, antennas)?;
            }
        }
        let bank = CombinerBank::from_matrices(num_aps, kk, antennas, w)?;
        Ok(Self { ues, bank })
    }
}

/// Closed-form ingredients for UE `k` at AP `m` against UE `l`.
#[derive(Debug, Clone)]
pub struct ObeLinkBlocks {
    /// LoS cross vector `c`.
    pub los: CVector,
    /// `d = √p_l τ_p vec(Ř_ml A_mkᴴ)`, inside the coset only.
    pub coherent: Option<CVector>,
    /// Vector `b` of the off-diagonal coset correction.
    pub b: Option<CVector>,
}

pub fn link_blocks(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    opts: &ObeOptions,
    m: usize,
    k: usize,
    l: usize,
) -> Result<ObeLinkBlocks> {
    let n = stats.antennas();
    let los = if l != k && opts.coupling == LosCoupling::PhaseAveraged {
        CVector::zeros(n * n)
    } else {
        match opts.formula {
            ObeFormula::Derived => vec(&stats.los_outer(m, l, k))?,
            ObeFormula::AsPrinted => vec(&stats.los_outer(m, k, l))?,
        }
    };
    if !pilots.shares_pilot(k, l) {
        return Ok(ObeLinkBlocks { los, coherent: None, b: None });
    }
    let s = cfg.ul_power(l).sqrt() * cfg.tau_p as f64;
    let d = vec(&(stats.corr(m, l) * est.a(m, k).adjoint()))?.scale(s);
    let b = match opts.formula {
        ObeFormula::Derived => &los + &d,
        ObeFormula::AsPrinted => d.clone(),
    };
    Ok(ObeLinkBlocks { los, coherent: Some(d), b: Some(b) })
}

/// Stacked `r̄_k = [vec(R̄_mk)]_m`.
pub fn r_bar_stacked(stats: &ChannelStatistics, est: &EstimatorBank, cfg: &ScenarioConfig, k: usize) -> Result<CVector> {
    let n2 = stats.antennas().pow(2);
    let mut out = CVector::zeros(stats.num_aps() * n2);
    for m in 0..stats.num_aps() {
        out.rows_mut(m * n2, n2).copy_from(&vec(&r_bar(stats, est, cfg, m, k))?);
    }
    Ok(out)
}

fn add_blockdiag_outer(t: &mut CMatrix, n2: usize, x: &[CVector], y: &[CVector], scale: f64) {
    for (m, (xm, ym)) in x.iter().zip(y).enumerate() {
        outer_add_into(t, m * n2, m * n2, xm.as_slice(), ym.as_slice(), scale);
    }
}

fn add_offdiag_outer(t: &mut CMatrix, n2: usize, x: &[CVector], scale: f64) {
    for (m, xm) in x.iter().enumerate() {
        for (nn, xn) in x.iter().enumerate() {
            if m != nn {
                outer_add_into(t, m * n2, nn * n2, xm.as_slice(), xn.as_slice(), scale);
            }
        }
    }
}

/// Closed-form interference part `Σ_l (Γ¹ + Γ³) + Σ_{l∈P_k} (Γ² + Γ⁴)` and
/// the noise block `Γ⁵` for UE `k`.
pub fn closed_form_blocks(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    opts: &ObeOptions,
    k: usize,
) -> Result<(CMatrix, CMatrix)> {
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    let n2 = n * n;
    let dim = mm * n2;
    let mut t = CMatrix::zeros(dim, dim);
    let q_t: Vec<CMatrix> = (0..mm).map(|m| est.link(m, k).est_second_moment.transpose()).collect();
    for l in 0..kk {
        let pl = cfg.ul_power(l);
        for m in 0..mm {
            // Γ¹: p_l E{ĝ_mk ĝ_mkᴴ}ᵀ ⊗ E{g_ml g_mlᴴ}
            kron_add_into(&mut t, m * n2, m * n2, &q_t[m], &stats.link(m, l).second_moment(), C64::new(pl, 0.0));
        }
        let blocks = (0..mm)
            .map(|m| link_blocks(stats, pilots, est, cfg, opts, m, k, l))
            .collect::<Result<Vec<_>>>()?;
        let c: Vec<CVector> = blocks.iter().map(|b| b.los.clone()).collect();
        // Γ³
        add_offdiag_outer(&mut t, n2, &c, pl);
        if pilots.shares_pilot(k, l) {
            let d: Vec<CVector> = blocks.iter().map(|b| b.coherent.clone().expect("coset link")).collect();
            let b: Vec<CVector> = blocks.iter().map(|b| b.b.clone().expect("coset link")).collect();
            // Γ²
            add_blockdiag_outer(&mut t, n2, &c, &d, pl);
            add_blockdiag_outer(&mut t, n2, &d, &c, pl);
            add_blockdiag_outer(&mut t, n2, &d, &d, pl);
            // Γ⁴
            add_offdiag_outer(&mut t, n2, &b, pl);
            add_offdiag_outer(&mut t, n2, &c, -pl);
        }
    }
    let second: Vec<CMatrix> = (0..mm).map(|m| est.link(m, k).est_second_moment.clone()).collect();
    let noise = block_noise(&second, &vec![CMatrix::identity(n, n); mm]);
    Ok((t, noise))
}

/// Closed-form OBE for every UE.
pub fn obe_closed(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    opts: &ObeOptions,
) -> Result<ObeSystem> {
    let ues = (0..stats.num_ues())
        .map(|k| {
            let (inter, noise) = closed_form_blocks(stats, pilots, est, cfg, opts, k)?;
            let mean = r_bar_stacked(stats, est, cfg, k)?;
            solve_stacked(mean, inter, noise, cfg.ul_power(k), cfg.noise_power, opts.loading)
        })
        .collect::<Result<Vec<_>>>()?;
    ObeSystem::from_solutions(ues, stats.num_aps(), stats.antennas())
}

/// OBE from sampled moments of `(g, ĝ)` pairs.
pub fn obe_mc(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    settings: &McSettings,
    loading: f64,
) -> Result<ObeSystem> {
    settings.validate(McSettings::MIN_REALIZATIONS)?;
    if settings.realizations < 10_000 {
        log::warn!("OBE moments from only {} samples", settings.realizations);
    }
    let ues = stacked_mc(stats, pilots, cfg, est, Side::Estimate, None, settings, loading)?;
    ObeSystem::from_solutions(ues, stats.num_aps(), stats.antennas())
}

/// `B_mlk` for every AP, exposed for diagnostics.
pub fn b_blocks(stats: &ChannelStatistics, est: &EstimatorBank, cfg: &ScenarioConfig, k: usize, l: usize) -> Vec<CMatrix> {
    (0..stats.num_aps()).map(|m| b_matrix(stats, est, cfg, m, l, k)).collect()
}
