//! Pilot despreading and the family of linear, statistics-based channel
//! estimators `ĝ = ḡ + A (y − ȳ)`.

use std::fmt;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, psd_projection, CMatrix, CVector, HpdFactor, RngStream, C64};
use crate::scenario::{ChannelStatistics, PilotSetup, ScenarioConfig};

/// Which estimator matrix `A_mk` to use.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// `A = √p_k Ř Ψ⁻¹`.
    Mmse,
    /// `A = I / (√p_k τ_p)`.
    Gls,
    /// MMSE built from correlation matrices carrying a seeded relative
    /// Hermitian error of size `rel_error`.
    ApproxMmse { rel_error: f64, seed: u64 },
    /// Explicit per-link matrices, `m`-major (`index = m · K + k`).
    Custom(Vec<CMatrix>),
}

impl EstimatorSpec {
    /// Parses `mmse`, `gls` or `approx-mmse:<rel_error>[:<seed>]`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        match name.as_str() {
            "mmse" => return Ok(Self::Mmse),
            "gls" => return Ok(Self::Gls),
            _ => {}
        }
        let mut parts = name.split(':');
        if parts.next() == Some("approx-mmse") {
            let rel_error = parts
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|e| *e >= 0.0)
                .ok_or_else(|| Error::UnknownEstimator(name.clone()))?;
            let seed = match parts.next() {
                Some(s) => s.parse().map_err(|_| Error::UnknownEstimator(name.clone()))?,
                None => 0,
            };
            if parts.next().is_none() {
                return Ok(Self::ApproxMmse { rel_error, seed });
            }
        }
        Err(Error::UnknownEstimator(name))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mmse => f.write_str("mmse"),
            Self::Gls => f.write_str("gls"),
            Self::ApproxMmse { rel_error, seed: 0 } => write!(f, "approx-mmse:{rel_error}"),
            Self::ApproxMmse { rel_error, seed } => write!(f, "approx-mmse:{rel_error}:{seed}"),
            Self::Custom(_) => f.write_str("custom"),
        }
    }
}

/// `Ψ_mk = Σ_{l∈P_k} p_l τ_p Ř_ml + σ² I`.
pub fn psi_matrix(
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    m: usize,
    k: usize,
) -> CMatrix {
    psi_from(|l| stats.corr(m, l).clone(), stats.antennas(), pilots, cfg, k)
}

fn psi_from(
    corr: impl Fn(usize) -> CMatrix,
    n: usize,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    k: usize,
) -> CMatrix {
    let tau_p = cfg.tau_p as f64;
    let mut psi = CMatrix::identity(n, n).scale(cfg.noise_power);
    for &l in pilots.coset(k) {
        psi += corr(l).scale(cfg.ul_power(l) * tau_p);
    }
    psi
}

/// `√p · R Ψ⁻¹` for Hermitian `R` and `Ψ`.
fn mmse_like(sqrt_p: f64, corr: &CMatrix, psi: &CMatrix) -> Result<CMatrix> {
    let x = HpdFactor::new(psi, 0.0)?.solve_matrix(corr);
    Ok(x.adjoint().scale(sqrt_p))
}

/// Correlation matrix with a seeded relative Hermitian error, projected
/// back onto the PSD cone.
pub fn perturbed_correlation(
    stats: &ChannelStatistics,
    m: usize,
    l: usize,
    rel_error: f64,
    seed: u64,
) -> CMatrix {
    let r = stats.corr(m, l);
    if rel_error == 0.0 {
        return r.clone();
    }
    let n = stats.antennas();
    let stream = (1u64 << 40) + (m * stats.num_ues() + l) as u64;
    let mut rng = RngStream::new(seed, stream);
    let h = hermitian_part(&rng.complex_matrix(n, n));
    let h_norm = h.norm();
    if h_norm == 0.0 {
        return r.clone();
    }
    let noisy = r + h.scale(rel_error * r.norm() / h_norm);
    psd_projection(&noisy)
}

/// Estimator matrix `A_mk` for the given spec.
pub fn estimator_matrix(
    spec: &EstimatorSpec,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    m: usize,
    k: usize,
) -> Result<CMatrix> {
    let n = stats.antennas();
    let sqrt_p = cfg.ul_power(k).sqrt();
    match spec {
        EstimatorSpec::Mmse => {
            let psi = psi_matrix(stats, pilots, cfg, m, k);
            mmse_like(sqrt_p, stats.corr(m, k), &psi)
        }
        EstimatorSpec::Gls => {
            let s = 1.0 / (sqrt_p * cfg.tau_p as f64);
            Ok(CMatrix::identity(n, n).scale(s))
        }
        EstimatorSpec::ApproxMmse { rel_error, seed } => {
            if !(*rel_error >= 0.0) {
                return Err(Error::Config(format!("approximation error must be >= 0, got {rel_error}")));
            }
            let corr = |l| perturbed_correlation(stats, m, l, *rel_error, *seed);
            let psi_hat = psi_from(corr, n, pilots, cfg, k);
            mmse_like(sqrt_p, &corr(k), &psi_hat)
        }
        EstimatorSpec::Custom(mats) => {
            let expected = stats.num_aps() * stats.num_ues();
            if mats.len() != expected {
                return Err(Error::Dimension(format!(
                    "custom estimator has {} matrices, expected {expected}",
                    mats.len()
                )));
            }
            let a = &mats[m * stats.num_ues() + k];
            if a.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "custom estimator matrix is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            Ok(a.clone())
        }
    }
}

/// `C = Ř − √p_k τ_p Ř Aᴴ − √p_k τ_p A Ř + τ_p A Ψ Aᴴ`.
pub fn error_covariance(
    a: &CMatrix,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    m: usize,
    k: usize,
) -> CMatrix {
    let psi = psi_matrix(stats, pilots, cfg, m, k);
    error_covariance_with(a, stats.corr(m, k), &psi, cfg.ul_power(k).sqrt(), cfg.tau_p as f64)
}

fn error_covariance_with(a: &CMatrix, r: &CMatrix, psi: &CMatrix, sqrt_p: f64, tau_p: f64) -> CMatrix {
    let cross = (r * a.adjoint()).scale(sqrt_p * tau_p);
    let c = r - &cross - cross.adjoint() + (a * psi * a.adjoint()).scale(tau_p);
    hermitian_part(&c)
}

/// Everything the estimator family needs about one link.
#[derive(Debug, Clone)]
pub struct EstimatorLink {
    /// `A_mk`.
    pub a: CMatrix,
    /// `Ψ_mk`.
    pub psi: CMatrix,
    /// Error covariance `C_mk`.
    pub error_cov: CMatrix,
    /// Covariance of the estimate, `R̃_mk = τ_p A Ψ Aᴴ`.
    pub est_cov: CMatrix,
    /// `E{ĝĝᴴ} = Ḡ_mkk + τ_p A Ψ Aᴴ`.
    pub est_second_moment: CMatrix,
}

/// Per-link estimator matrices and second-order statistics.
#[derive(Debug, Clone)]
pub struct EstimatorBank {
    label: String,
    num_ues: usize,
    links: Vec<EstimatorLink>,
}

impl EstimatorBank {
    pub fn build(
        spec: &EstimatorSpec,
        stats: &ChannelStatistics,
        pilots: &PilotSetup,
        cfg: &ScenarioConfig,
    ) -> Result<Self> {
        if pilots.num_ues() != stats.num_ues() {
            return Err(Error::Dimension("pilot setup does not match UE count".into()));
        }
        let tau_p = cfg.tau_p as f64;
        let mut links = Vec::with_capacity(stats.num_aps() * stats.num_ues());
        for m in 0..stats.num_aps() {
            for k in 0..stats.num_ues() {
                let a = estimator_matrix(spec, stats, pilots, cfg, m, k)?;
                let psi = psi_matrix(stats, pilots, cfg, m, k);
                let error_cov =
                    error_covariance_with(&a, stats.corr(m, k), &psi, cfg.ul_power(k).sqrt(), tau_p);
                let est_cov = hermitian_part(&(&a * &psi * a.adjoint()).scale(tau_p));
                let est_second_moment = stats.los_outer(m, k, k) + &est_cov;
                links.push(EstimatorLink { a, psi, error_cov, est_cov, est_second_moment });
            }
        }
        Ok(Self { label: spec.label(), num_ues: stats.num_ues(), links })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn link(&self, m: usize, k: usize) -> &EstimatorLink {
        &self.links[m * self.num_ues + k]
    }

    pub fn a(&self, m: usize, k: usize) -> &CMatrix {
        &self.link(m, k).a
    }

    /// Relative Frobenius gap between the direct second moment
    /// `Ḡ + τ_p AΨAᴴ` and `Ḡ + √p_k τ_p Ř Aᴴ` on link `(m, k)`. The two
    /// coincide for MMSE-like `A`.
    pub fn second_moment_discrepancy(
        &self,
        stats: &ChannelStatistics,
        cfg: &ScenarioConfig,
        m: usize,
        k: usize,
    ) -> f64 {
        let link = self.link(m, k);
        let alt = stats.los_outer(m, k, k)
            + (stats.corr(m, k) * link.a.adjoint()).scale(cfg.ul_power(k).sqrt() * cfg.tau_p as f64);
        let direct = &link.est_second_moment;
        let scale = direct.norm().max(f64::MIN_POSITIVE);
        (direct - alt).norm() / scale
    }
}

/// Despread pilot signals `y_mk^p` and their deterministic means `ȳ_mk^p`,
/// `m`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    num_ues: usize,
    pub y: Vec<CVector>,
    pub y_mean: Vec<CVector>,
}

impl PilotObservation {
    pub fn y(&self, m: usize, k: usize) -> &CVector {
        &self.y[m * self.num_ues + k]
    }

    pub fn y_mean(&self, m: usize, k: usize) -> &CVector {
        &self.y_mean[m * self.num_ues + k]
    }
}

/// Precomputed despreading for repeated realizations.
#[derive(Debug, Clone)]
pub struct PilotDespreader {
    num_aps: usize,
    num_ues: usize,
    antennas: usize,
    tau_p: usize,
    /// `√p_l τ_p`.
    gain: Vec<f64>,
    noise_std: f64,
    pilots: PilotSetup,
    y_mean: Vec<CVector>,
}

impl PilotDespreader {
    pub fn new(stats: &ChannelStatistics, pilots: &PilotSetup, cfg: &ScenarioConfig) -> Self {
        let tau_p = cfg.tau_p as f64;
        let gain: Vec<f64> = (0..stats.num_ues()).map(|l| cfg.ul_power(l).sqrt() * tau_p).collect();
        let mut y_mean = Vec::with_capacity(stats.num_aps() * stats.num_ues());
        for m in 0..stats.num_aps() {
            for k in 0..stats.num_ues() {
                let mut mean = CVector::zeros(stats.antennas());
                for &l in pilots.coset(k) {
                    mean.axpy(C64::new(gain[l], 0.0), stats.los(m, l), C64::new(1.0, 0.0));
                }
                y_mean.push(mean);
            }
        }
        Self {
            num_aps: stats.num_aps(),
            num_ues: stats.num_ues(),
            antennas: stats.antennas(),
            tau_p: cfg.tau_p,
            gain,
            noise_std: (tau_p * cfg.noise_power).sqrt(),
            pilots: pilots.clone(),
            y_mean,
        }
    }

    pub fn blank(&self) -> PilotObservation {
        PilotObservation {
            num_ues: self.num_ues,
            y: vec![CVector::zeros(self.antennas); self.num_aps * self.num_ues],
            y_mean: self.y_mean.clone(),
        }
    }

    /// Writes `y_mk^p` for every link. UEs sharing a pilot see the same
    /// noise realization at a given AP.
    pub fn observe_into(
        &self,
        channels: &ChannelRealization,
        rng: &mut RngStream,
        noise_scale: f64,
        out: &mut PilotObservation,
    ) {
        let n = self.antennas;
        let mut received = CVector::zeros(n);
        for m in 0..self.num_aps {
            for t in 0..self.tau_p {
                let users = self.pilots.users_of_pilot(t);
                if users.is_empty() {
                    continue;
                }
                for i in 0..n {
                    received[i] = rng.standard_complex() * (self.noise_std * noise_scale);
                }
                for &l in users {
                    received.axpy(C64::new(self.gain[l], 0.0), channels.get(m, l), C64::new(1.0, 0.0));
                }
                for &k in users {
                    out.y[m * self.num_ues + k].copy_from(&received);
                }
            }
        }
    }
}

/// Despreads one realization: `y_mk^p = Σ_{l∈P_k} √p_l τ_p g_ml + n_mk^p`.
pub fn despread_pilot(
    channels: &ChannelRealization,
    stats: &ChannelStatistics,
    pilots: &PilotSetup,
    cfg: &ScenarioConfig,
    rng: &mut RngStream,
) -> PilotObservation {
    let despreader = PilotDespreader::new(stats, pilots, cfg);
    let mut obs = despreader.blank();
    despreader.observe_into(channels, rng, 1.0, &mut obs);
    obs
}

/// `ĝ = ḡ_mk + A (y_mk^p − ȳ_mk^p)`.
pub fn estimate_channel(
    a: &CMatrix,
    obs: &PilotObservation,
    stats: &ChannelStatistics,
    m: usize,
    k: usize,
) -> CVector {
    let mut out = stats.los(m, k).clone();
    estimate_into(a, obs.y(m, k), obs.y_mean(m, k), stats.los(m, k), &mut out);
    out
}

/// In-place variant of [`estimate_channel`].
pub fn estimate_into(a: &CMatrix, y: &CVector, y_mean: &CVector, los: &CVector, out: &mut CVector) {
    let n = los.len();
    for i in 0..n {
        let mut acc = los[i];
        for j in 0..n {
            acc += a[(i, j)] * (y[j] - y_mean[j]);
        }
        out[i] = acc;
    }
}
