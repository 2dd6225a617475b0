//! Batched Monte-Carlo engine shared by the UL and DL evaluators.
//!
//! Every batch owns its own random stream, so results depend only on the
//! seed and the batch count, never on the number of worker threads.

use rayon::prelude::*;

use crate::channel::{ChannelEstimates, ChannelRealization, ChannelSampler};
use crate::error::{Error, Result};
use crate::estimation::{estimate_into, EstimatorBank, PilotDespreader, PilotObservation};
use crate::linalg::{CMatrix, CVector, RngStream, C64};
use crate::report::spectral_efficiency;
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

const STREAM_BASE: u64 = 1 << 20;

/// Sample size and batching of a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub realizations: usize,
    pub batches: usize,
    pub seed: u64,
}

impl McSettings {
    pub const DEFAULT_BATCHES: usize = 20;
    pub const MIN_BATCHES: usize = 10;
    pub const MIN_REALIZATIONS: usize = 1000;

    pub fn new(realizations: usize, seed: u64) -> Self {
        Self { realizations, batches: Self::DEFAULT_BATCHES, seed }
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn validate(&self, min_realizations: usize) -> Result<()> {
        if self.batches < Self::MIN_BATCHES {
            return Err(Error::Config(format!(
                "at least {} batches are needed for batch-means error bars, got {}",
                Self::MIN_BATCHES,
                self.batches
            )));
        }
        if self.realizations < min_realizations.max(self.batches) {
            return Err(Error::Config(format!(
                "at least {} realizations are needed, got {}",
                min_realizations.max(self.batches),
                self.realizations
            )));
        }
        Ok(())
    }

    fn batch_len(&self, b: usize) -> usize {
        self.realizations / self.batches + usize::from(b < self.realizations % self.batches)
    }
}

/// Runs `step` once per realization inside each batch and returns the
/// per-batch states in batch order.
pub fn run_batches<T, I, S>(settings: &McSettings, init: I, step: S) -> Vec<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    S: Fn(&mut RngStream, &mut T) + Sync,
{
    (0..settings.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(settings.seed, STREAM_BASE + b as u64);
            let mut state = init();
            for _ in 0..settings.batch_len(b) {
                step(&mut rng, &mut state);
            }
            state
        })
        .collect()
}

/// Draws `(g, y, ĝ)` triples for a fixed estimator bank.
#[derive(Debug, Clone)]
pub struct LinkSampler<'a> {
    stats: &'a ChannelStatistics,
    est: &'a EstimatorBank,
    channels: ChannelSampler,
    despreader: PilotDespreader,
}

/// Scratch buffers for one realization.
#[derive(Debug, Clone)]
pub struct Draw {
    pub g: ChannelRealization,
    pub obs: PilotObservation,
    pub ghat: ChannelEstimates,
}

impl<'a> LinkSampler<'a> {
    pub fn new(
        stats: &'a ChannelStatistics,
        pilots: &PilotSetup,
        cfg: &ScenarioConfig,
        est: &'a EstimatorBank,
    ) -> Result<Self> {
        Ok(Self {
            stats,
            est,
            channels: ChannelSampler::new(stats)?,
            despreader: PilotDespreader::new(stats, pilots, cfg),
        })
    }

    pub fn blank(&self) -> Draw {
        Draw {
            g: self.channels.blank(),
            obs: self.despreader.blank(),
            ghat: self.channels.blank(),
        }
    }

    /// Channels first (`m`-major), then pilot noise per `(m, pilot)`.
    pub fn draw_into(&self, rng: &mut RngStream, d: &mut Draw) {
        self.channels.draw_into(rng, &mut d.g);
        self.despreader.observe_into(&d.g, rng, 1.0, &mut d.obs);
        for m in 0..self.stats.num_aps() {
            for k in 0..self.stats.num_ues() {
                estimate_into(
                    self.est.a(m, k),
                    d.obs.y(m, k),
                    d.obs.y_mean(m, k),
                    self.stats.los(m, k),
                    d.ghat.get_mut(m, k),
                );
            }
        }
    }
}

/// Per-realization local processing at each AP.
pub trait Combining: Sync {
    /// Writes `v_mk` for every UE `k` at AP `m`. Returns `true` when
    /// diagonal loading had to be applied.
    fn combine(&self, m: usize, estimates: &ChannelEstimates, out: &mut [CVector]) -> bool;
}

/// Accumulated sums of the moments needed by every UatF evaluator:
/// `E{v_mkᴴ g_ml}`, `E{a_kl a_klᴴ}` with `a_kl = [v_mkᴴ g_ml]_m`, and
/// `E{‖v_mk‖²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    num_aps: usize,
    num_ues: usize,
    count: usize,
    loaded: usize,
    mean_vg: Vec<C64>,
    cross: Vec<C64>,
    vnorm: Vec<f64>,
}

impl MomentSet {
    pub fn zeros(num_aps: usize, num_ues: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            count: 0,
            loaded: 0,
            mean_vg: vec![C64::new(0.0, 0.0); num_aps * num_ues * num_ues],
            cross: vec![C64::new(0.0, 0.0); num_ues * num_ues * num_aps * num_aps],
            vnorm: vec![0.0; num_aps * num_ues],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of per-AP combiner computations that needed loading.
    pub fn loaded(&self) -> usize {
        self.loaded
    }

    pub fn merge(&mut self, other: &MomentSet) {
        self.count += other.count;
        self.loaded += other.loaded;
        for (a, b) in self.mean_vg.iter_mut().zip(&other.mean_vg) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
        for (a, b) in self.vnorm.iter_mut().zip(&other.vnorm) {
            *a += b;
        }
    }

    fn inv_count(&self) -> f64 {
        1.0 / self.count.max(1) as f64
    }

    /// `E{v_mkᴴ g_ml}`.
    pub fn mean_vg(&self, m: usize, k: usize, l: usize) -> C64 {
        self.mean_vg[(m * self.num_ues + k) * self.num_ues + l] * self.inv_count()
    }

    /// `E{a aᴴ}` with `a_m = v_mkᴴ g_ml`, as an `M × M` matrix.
    pub fn cross(&self, k: usize, l: usize) -> CMatrix {
        let m = self.num_aps;
        let base = (k * self.num_ues + l) * m * m;
        let s = self.inv_count();
        CMatrix::from_fn(m, m, |i, j| self.cross[base + i * m + j] * s)
    }

    /// `E{‖v_mk‖²}`.
    pub fn vnorm(&self, m: usize, k: usize) -> f64 {
        self.vnorm[m * self.num_ues + k] * self.inv_count()
    }

    /// UatF UL SINR of UE `k` when the CPU forms `Σ_m c_m* v_mkᴴ y_m`.
    pub fn ul_sinr(&self, k: usize, weights: &[C64], cfg: &ScenarioConfig) -> f64 {
        let mm = self.num_aps;
        let s = self.inv_count();
        let mut desired = C64::new(0.0, 0.0);
        let mut noise = 0.0;
        for m in 0..mm {
            desired += weights[m].conj() * self.mean_vg(m, k, k);
            noise += weights[m].norm_sqr() * self.vnorm(m, k);
        }
        let num = cfg.ul_power(k) * desired.norm_sqr();
        if num == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for l in 0..self.num_ues {
            let base = (k * self.num_ues + l) * mm * mm;
            let mut q = C64::new(0.0, 0.0);
            for i in 0..mm {
                for j in 0..mm {
                    q += weights[i].conj() * self.cross[base + i * mm + j] * weights[j];
                }
            }
            total += cfg.ul_power(l) * q.re * s;
        }
        ratio(num, total - num + cfg.noise_power * noise)
    }

    /// UatF DL SINR of UE `k` for precoders `f_ml = η_ml v_ml`, with
    /// `eta` stored `m`-major.
    pub fn dl_sinr(&self, k: usize, eta: &[f64], noise_power: f64) -> f64 {
        let mm = self.num_aps;
        let kk = self.num_ues;
        let s = self.inv_count();
        let mut desired = C64::new(0.0, 0.0);
        for m in 0..mm {
            desired += self.mean_vg(m, k, k) * eta[m * kk + k];
        }
        let num = desired.norm_sqr();
        if num == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for l in 0..kk {
            let base = (l * kk + k) * mm * mm;
            for i in 0..mm {
                for j in 0..mm {
                    total += eta[i * kk + l] * eta[j * kk + l] * self.cross[base + i * mm + j].re;
                }
            }
        }
        ratio(num, total * s - num + noise_power)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Full-sample moments together with their per-batch parts.
#[derive(Debug, Clone)]
pub struct BatchedMoments {
    pub total: MomentSet,
    pub batches: Vec<MomentSet>,
}

/// Point estimate from the full sample and batch-means standard error of
/// the SE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub sinr: f64,
    pub se: f64,
    pub stderr: f64,
}

impl BatchedMoments {
    fn estimate(&self, prelog: f64, f: impl Fn(&MomentSet) -> f64) -> McEstimate {
        let sinr = f(&self.total);
        let per_batch: Vec<f64> = self.batches.iter().map(|b| spectral_efficiency(prelog, f(b))).collect();
        McEstimate { sinr, se: spectral_efficiency(prelog, sinr), stderr: batch_stderr(&per_batch) }
    }

    pub fn ul(&self, k: usize, weights: &[C64], cfg: &ScenarioConfig) -> McEstimate {
        self.estimate(cfg.prelog(), |s| s.ul_sinr(k, weights, cfg))
    }

    pub fn dl(&self, k: usize, eta: &[f64], cfg: &ScenarioConfig) -> McEstimate {
        self.estimate(cfg.prelog(), |s| s.dl_sinr(k, eta, cfg.noise_power))
    }
}

/// Standard error of the mean of batch values.
pub fn batch_stderr(values: &[f64]) -> f64 {
    let b = values.len();
    if b < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / b as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Estimates the UatF moments of a local combining scheme.
pub fn simulate_moments(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    est: &EstimatorBank,
    combining: &dyn Combining,
    settings: &McSettings,
) -> Result<BatchedMoments> {
    settings.validate(McSettings::MIN_REALIZATIONS)?;
    let sampler = LinkSampler::new(stats, pilots, cfg, est)?;
    let (mm, kk, n) = (stats.num_aps(), stats.num_ues(), stats.antennas());

    struct State {
        draw: Draw,
        v: Vec<CVector>,
        a: Vec<C64>,
        moments: MomentSet,
    }

    let batches = run_batches(
        settings,
        || State {
            draw: sampler.blank(),
            v: vec![CVector::zeros(n); kk],
            a: vec![C64::new(0.0, 0.0); kk * kk * mm],
            moments: MomentSet::zeros(mm, kk),
        },
        |rng, st| {
            sampler.draw_into(rng, &mut st.draw);
            let mo = &mut st.moments;
            for m in 0..mm {
                if combining.combine(m, &st.draw.ghat, &mut st.v) {
                    mo.loaded += 1;
                }
                for k in 0..kk {
                    let v = &st.v[k];
                    mo.vnorm[m * kk + k] += v.norm_squared();
                    for l in 0..kk {
                        let a = v.dotc(st.draw.g.get(m, l));
                        mo.mean_vg[(m * kk + k) * kk + l] += a;
                        st.a[(k * kk + l) * mm + m] = a;
                    }
                }
            }
            for kl in 0..kk * kk {
                let a = &st.a[kl * mm..(kl + 1) * mm];
                let base = kl * mm * mm;
                for i in 0..mm {
                    for j in 0..mm {
                        mo.cross[base + i * mm + j] += a[i] * a[j].conj();
                    }
                }
            }
            mo.count += 1;
        },
    );
    let batches: Vec<MomentSet> = batches.into_iter().map(|s| s.moments).collect();
    let mut total = MomentSet::zeros(mm, kk);
    for b in &batches {
        total.merge(b);
    }
    if total.loaded > 0 {
        log::warn!("diagonal loading applied in {} local combiner solves", total.loaded);
    }
    Ok(BatchedMoments { total, batches })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_lengths_cover_all_realizations() {
        let s = McSettings::new(1003, 0);
        let total: usize = (0..s.batches).map(|b| s.batch_len(b)).sum();
        assert_eq!(total, 1003);
    }

    #[test]
    fn settings_guard() {
        assert!(McSettings::new(999, 0).validate(1000).is_err());
        assert!(McSettings::new(1000, 0).with_batches(5).validate(1000).is_err());
        assert!(McSettings::new(1000, 0).validate(1000).is_ok());
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(batch_stderr(&[2.0; 10]), 0.0);
        let se = batch_stderr(&[0.0, 2.0]);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batches_are_independent_of_thread_count() {
        let s = McSettings::new(2000, 7);
        let run = || {
            run_batches(&s, || 0.0, |rng, acc: &mut f64| *acc += rng.standard_normal())
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
    }
}
