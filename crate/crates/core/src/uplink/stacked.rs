//! Sample-based estimation of the stacked moments `E{p_k}`, `Σ_l p_l E{q qᴴ}`
//! and the block-diagonal noise term, shared by the OBE and the optimal
//! estimator design.

use crate::error::Result;
use crate::estimation::EstimatorBank;
use crate::linalg::{kron_add_into, rayleigh_quotient, rayleigh_quotient_max_scaled, CMatrix, CVector, RngStream, C64};
use crate::montecarlo::{batch_stderr, run_batches, Draw, LinkSampler, McSettings};
use crate::report::spectral_efficiency;
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

use super::combiners::CombinerBank;

/// Which per-link vector multiplies the channel from the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// `ĝ_mk`: segment `vec(L g_ml ĝ_mkᴴ)`.
    Estimate,
    /// `y_mk^p`: segment `vec(L g_ml y_mkᴴ)`.
    Pilot,
}

/// Solution of one stacked Rayleigh-quotient problem.
#[derive(Debug, Clone)]
pub struct StackedSolution {
    /// Stacked mean vector.
    pub mean: CVector,
    /// `Σ_l p_l E{q qᴴ} − p_k mean meanᴴ + σ² · noise`.
    pub system: CMatrix,
    /// Block-diagonal noise moment.
    pub noise: CMatrix,
    /// Maximizer `system⁻¹ mean`.
    pub weights: CVector,
    pub sinr: f64,
    /// Batch-means standard error of the SE, when sampled.
    pub se_stderr: Option<f64>,
}

/// Builds `system`, solves it and evaluates the optimum.
pub(crate) fn solve_stacked(
    mean: CVector,
    interference: CMatrix,
    noise: CMatrix,
    pk: f64,
    noise_power: f64,
    loading: f64,
) -> Result<StackedSolution> {
    let mut system = interference + &noise * C64::new(noise_power, 0.0);
    let dim = mean.len();
    for j in 0..dim {
        let s = mean[j].conj() * pk;
        for i in 0..dim {
            system[(i, j)] -= mean[i] * s;
        }
    }
    let opt = rayleigh_quotient_max_scaled(&system, &mean, loading)?;
    // value actually achieved by the (loaded) maximizer
    let sinr = pk * rayleigh_quotient(&system, &mean, &opt.x);
    Ok(StackedSolution { sinr, weights: opt.x, mean, system, noise, se_stderr: None })
}

/// `blockdiag_m(S_mᵀ ⊗ L_m Lᴴ_m)`.
pub(crate) fn block_noise(side: &[CMatrix], kernels: &[CMatrix]) -> CMatrix {
    let n = side[0].nrows();
    let n2 = n * n;
    let dim = side.len() * n2;
    let mut out = CMatrix::zeros(dim, dim);
    for (m, (s, kern)) in side.iter().zip(kernels).enumerate() {
        kron_add_into(&mut out, m * n2, m * n2, &s.transpose(), kern, C64::new(1.0, 0.0));
    }
    out
}

const CHUNK: usize = 32;

struct Accum {
    count: usize,
    mean: Vec<CVector>,
    inter: Vec<CMatrix>,
    side: Vec<CMatrix>,
    zbuf: Vec<CMatrix>,
    /// Samples buffered in `zbuf` (each uses `K` columns).
    fill: usize,
    num_ues: usize,
    draw: Draw,
    lg: CVector,
}

impl Accum {
    fn flush(&mut self) {
        if self.fill == 0 {
            return;
        }
        for (inter, z) in self.inter.iter_mut().zip(&self.zbuf) {
            let used = z.columns(0, self.fill * self.num_ues);
            inter.gemm(C64::new(1.0, 0.0), &used, &used.adjoint(), C64::new(1.0, 0.0));
        }
        self.fill = 0;
    }
}

/// Monte-Carlo estimate of the stacked system for every UE, with
/// per-batch re-solves for error bars.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stacked_mc(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    est: &EstimatorBank,
    side: Side,
    left: Option<&CombinerBank>,
    settings: &McSettings,
    loading: f64,
) -> Result<Vec<StackedSolution>> {
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());
    let n2 = n * n;
    let dim = mm * n2;
    let sampler = LinkSampler::new(stats, pilots, cfg, est)?;
    let powers: Vec<f64> = (0..kk).map(|l| cfg.ul_power(l)).collect();
    let left_ops: Option<Vec<CMatrix>> = left.map(|b| b.matrices().iter().map(|w| w.adjoint()).collect());
    let kernels: Vec<Vec<CMatrix>> = (0..kk)
        .map(|k| {
            (0..mm)
                .map(|m| match &left_ops {
                    Some(ops) => &ops[m * kk + k] * ops[m * kk + k].adjoint(),
                    None => CMatrix::identity(n, n),
                })
                .collect()
        })
        .collect();

    let side_vec = |d: &Draw, m: usize, k: usize| -> CVector {
        match side {
            Side::Estimate => d.ghat.get(m, k).clone(),
            Side::Pilot => d.obs.y(m, k).clone(),
        }
    };

    let init = || Accum {
        count: 0,
        mean: vec![CVector::zeros(dim); kk],
        inter: vec![CMatrix::zeros(dim, dim); kk],
        side: vec![CMatrix::zeros(n, n); mm * kk],
        zbuf: vec![CMatrix::zeros(dim, CHUNK * kk); kk],
        fill: 0,
        num_ues: kk,
        draw: sampler.blank(),
        lg: CVector::zeros(n),
    };

    let step = |rng: &mut RngStream, acc: &mut Accum| {
        sampler.draw_into(rng, &mut acc.draw);
        let col0 = acc.fill * kk;
        for m in 0..mm {
            for k in 0..kk {
                let s = side_vec(&acc.draw, m, k);
                let sm = &mut acc.side[m * kk + k];
                for j in 0..n {
                    let cj = s[j].conj();
                    for i in 0..n {
                        sm[(i, j)] += s[i] * cj;
                    }
                }
                for l in 0..kk {
                    let g = acc.draw.g.get(m, l);
                    match &left_ops {
                        Some(ops) => ops[m * kk + k].mul_to(g, &mut acc.lg),
                        None => acc.lg.copy_from(g),
                    }
                    let sp = powers[l].sqrt();
                    let z = &mut acc.zbuf[k];
                    for i in 0..n {
                        let si = s[i].conj();
                        for a in 0..n {
                            let q = si * acc.lg[a];
                            z[(m * n2 + i * n + a, col0 + l)] = q * sp;
                            if l == k {
                                acc.mean[k][m * n2 + i * n + a] += q;
                            }
                        }
                    }
                }
            }
        }
        acc.count += 1;
        acc.fill += 1;
        if acc.fill == CHUNK {
            acc.flush();
        }
    };

    let finish = |count: usize, mean: &[CVector], inter: &[CMatrix], side_sum: &[CMatrix]| -> Result<Vec<StackedSolution>> {
        let inv = 1.0 / count.max(1) as f64;
        (0..kk)
            .map(|k| {
                let side_k: Vec<CMatrix> = (0..mm).map(|m| side_sum[m * kk + k].scale(inv)).collect();
                let noise = block_noise(&side_k, &kernels[k]);
                solve_stacked(
                    mean[k].scale(inv),
                    inter[k].scale(inv),
                    noise,
                    powers[k],
                    cfg.noise_power,
                    loading,
                )
            })
            .collect()
    };

    // each batch solves its own system so only running sums are kept
    let batches: Vec<Result<(Accum, Vec<f64>)>> = run_batches(settings, init, step)
        .into_iter()
        .map(|mut acc| {
            acc.flush();
            let sols = finish(acc.count, &acc.mean, &acc.inter, &acc.side)?;
            Ok((acc, sols.iter().map(|s| s.sinr).collect()))
        })
        .collect();

    let mut total: Option<(usize, Vec<CVector>, Vec<CMatrix>, Vec<CMatrix>)> = None;
    let mut per_batch = Vec::with_capacity(settings.batches);
    for b in batches {
        let (acc, sinr) = b?;
        per_batch.push(sinr);
        match &mut total {
            None => total = Some((acc.count, acc.mean, acc.inter, acc.side)),
            Some((c, mean, inter, side_sum)) => {
                *c += acc.count;
                for (a, b) in mean.iter_mut().zip(&acc.mean) {
                    *a += b;
                }
                for (a, b) in inter.iter_mut().zip(&acc.inter) {
                    *a += b;
                }
                for (a, b) in side_sum.iter_mut().zip(&acc.side) {
                    *a += b;
                }
            }
        }
    }
    let (count, mean, inter, side_sum) = total.expect("at least one batch");
    let mut sols = finish(count, &mean, &inter, &side_sum)?;
    let prelog = cfg.prelog();
    for (k, sol) in sols.iter_mut().enumerate() {
        let se: Vec<f64> = per_batch.iter().map(|b| spectral_efficiency(prelog, b[k])).collect();
        sol.se_stderr = Some(batch_stderr(&se));
    }
    Ok(sols)
}
