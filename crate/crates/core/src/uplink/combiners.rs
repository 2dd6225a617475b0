//! Statistics-level BE matrices and the per-realization local combiners.

use std::fmt;

use nalgebra::Cholesky;

use crate::channel::ChannelEstimates;
use crate::error::{Error, Result};
use crate::estimation::EstimatorBank;
use crate::linalg::{CMatrix, CVector, RngStream, C64, DEFAULT_LOADING};
use crate::montecarlo::Combining;
use crate::scenario::ScenarioConfig;

/// Per-link BE matrices `W_mk`, `m`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerBank {
    num_aps: usize,
    num_ues: usize,
    antennas: usize,
    w: Vec<CMatrix>,
}

impl CombinerBank {
    pub fn identity(num_aps: usize, num_ues: usize, antennas: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            antennas,
            w: vec![CMatrix::identity(antennas, antennas); num_aps * num_ues],
        }
    }

    pub fn from_matrices(num_aps: usize, num_ues: usize, antennas: usize, w: Vec<CMatrix>) -> Result<Self> {
        if w.len() != num_aps * num_ues {
            return Err(Error::Dimension(format!(
                "combiner bank needs {} matrices, got {}",
                num_aps * num_ues,
                w.len()
            )));
        }
        if let Some(bad) = w.iter().find(|x| x.shape() != (antennas, antennas)) {
            return Err(Error::Dimension(format!(
                "BE matrix is {}x{}, expected {antennas}x{antennas}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        if w.iter().any(|x| x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Config("BE matrix has non-finite entries".into()));
        }
        Ok(Self { num_aps, num_ues, antennas, w })
    }

    /// I.i.d. standard complex Gaussian entries.
    pub fn random(num_aps: usize, num_ues: usize, antennas: usize, rng: &mut RngStream) -> Self {
        let w = (0..num_aps * num_ues).map(|_| rng.complex_matrix(antennas, antennas)).collect();
        Self { num_aps, num_ues, antennas, w }
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn w(&self, m: usize, k: usize) -> &CMatrix {
        &self.w[m * self.num_ues + k]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.w
    }

    /// `W_mk ← s(m, k) · W_mk`.
    pub fn scaled(&self, s: impl Fn(usize, usize) -> C64) -> Self {
        let mut out = self.clone();
        for m in 0..self.num_aps {
            for k in 0..self.num_ues {
                out.w[m * self.num_ues + k] *= s(m, k);
            }
        }
        out
    }

    /// Adds a random perturbation of relative Frobenius size `rel` to
    /// every matrix.
    pub fn perturbed(&self, rel: f64, rng: &mut RngStream) -> Self {
        let n = self.antennas;
        let mut out = self.clone();
        for w in out.w.iter_mut() {
            let d = rng.complex_matrix(n, n);
            let scale = rel * w.norm().max(f64::MIN_POSITIVE) / d.norm();
            *w += d * C64::new(scale, 0.0);
        }
        out
    }

    pub fn check_shape(&self, num_aps: usize, num_ues: usize, antennas: usize) -> Result<()> {
        if (self.num_aps, self.num_ues, self.antennas) != (num_aps, num_ues, antennas) {
            return Err(Error::Dimension(format!(
                "combiner bank is M={} K={} N={}, scenario is M={num_aps} K={num_ues} N={antennas}",
                self.num_aps, self.num_ues, self.antennas
            )));
        }
        Ok(())
    }
}

/// Local combining rule applied at every AP.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalScheme {
    /// `v = ĝ_mk`.
    Mr,
    /// Local MMSE from the AP's estimates and error covariances.
    Lmmse,
    /// Regularized zero-forcing on the AP's estimate matrix.
    Lrzf,
    /// `v = W_mk ĝ_mk`.
    Bilinear(CombinerBank),
}

impl fmt::Display for LocalScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mr => "mr",
            Self::Lmmse => "lmmse",
            Self::Lrzf => "lrzf",
            Self::Bilinear(_) => "be",
        })
    }
}

/// Combining vectors of one AP for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCombining {
    pub v: Vec<CVector>,
    /// Diagonal loading was needed.
    pub loaded: bool,
}

/// A [`LocalScheme`] bound to the statistics it needs.
#[derive(Debug, Clone)]
pub struct LocalCombiner<'a> {
    scheme: &'a LocalScheme,
    powers: Vec<f64>,
    noise: f64,
    /// LMMSE only: `Σ_l p_l C_ml + σ² I` per AP.
    base: Vec<CMatrix>,
}

impl<'a> LocalCombiner<'a> {
    pub fn new(scheme: &'a LocalScheme, est: &EstimatorBank, cfg: &ScenarioConfig) -> Result<Self> {
        let (mm, kk, n) = (cfg.num_aps, cfg.num_ues, cfg.antennas);
        if let LocalScheme::Bilinear(bank) = scheme {
            bank.check_shape(mm, kk, n)?;
        }
        let powers: Vec<f64> = (0..kk).map(|k| cfg.ul_power(k)).collect();
        let base = if matches!(scheme, LocalScheme::Lmmse) {
            (0..mm)
                .map(|m| {
                    let mut s = CMatrix::identity(n, n).scale(cfg.noise_power);
                    for (l, &p) in powers.iter().enumerate() {
                        s += est.link(m, l).error_cov.scale(p);
                    }
                    s
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { scheme, powers, noise: cfg.noise_power, base })
    }

    fn lmmse(&self, m: usize, ghat: &ChannelEstimates, out: &mut [CVector]) -> bool {
        let mut s = self.base[m].clone();
        let n = s.nrows();
        let kk = out.len();
        let mut rhs = CMatrix::zeros(n, kk);
        for l in 0..kk {
            let g = ghat.get(m, l);
            let p = self.powers[l];
            for j in 0..n {
                let gj = g[j].conj() * p;
                for i in 0..n {
                    s[(i, j)] += g[i] * gj;
                }
                rhs[(j, l)] = g[j] * p;
            }
        }
        let (x, loaded) = solve_loaded(s, &rhs);
        for (k, v) in out.iter_mut().enumerate() {
            v.copy_from(&x.column(k));
        }
        loaded
    }

    fn lrzf(&self, m: usize, ghat: &ChannelEstimates, out: &mut [CVector]) -> bool {
        let kk = out.len();
        let n = ghat.get(m, 0).len();
        let g = CMatrix::from_fn(n, kk, |i, l| ghat.get(m, l)[i]);
        let mut gram = g.adjoint() * &g;
        for l in 0..kk {
            gram[(l, l)] += self.noise / self.powers[l];
        }
        let eye = CMatrix::identity(kk, kk);
        let (inv, loaded) = solve_loaded(gram, &eye);
        let v = g * inv;
        for (k, out_k) in out.iter_mut().enumerate() {
            out_k.copy_from(&v.column(k));
        }
        loaded
    }
}

/// Solves `S X = B`, falling back to relative diagonal loading when the
/// Cholesky factorization fails.
fn solve_loaded(s: CMatrix, b: &CMatrix) -> (CMatrix, bool) {
    if let Some(ch) = Cholesky::new(s.clone()) {
        return (ch.solve(b), false);
    }
    let n = s.nrows();
    let scale = (s.trace().re / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut loading = DEFAULT_LOADING;
    loop {
        let mut loaded = s.clone();
        for i in 0..n {
            loaded[(i, i)] += scale * loading;
        }
        if let Some(ch) = Cholesky::new(loaded) {
            return (ch.solve(b), true);
        }
        loading *= 10.0;
    }
}

impl Combining for LocalCombiner<'_> {
    fn combine(&self, m: usize, ghat: &ChannelEstimates, out: &mut [CVector]) -> bool {
        match self.scheme {
            LocalScheme::Mr => {
                for (k, v) in out.iter_mut().enumerate() {
                    v.copy_from(ghat.get(m, k));
                }
                false
            }
            LocalScheme::Bilinear(bank) => {
                for (k, v) in out.iter_mut().enumerate() {
                    bank.w(m, k).mul_to(ghat.get(m, k), v);
                }
                false
            }
            LocalScheme::Lmmse => self.lmmse(m, ghat, out),
            LocalScheme::Lrzf => self.lrzf(m, ghat, out),
        }
    }
}

/// Combining vectors of every UE at AP `m` for one set of estimates.
pub fn local_combiner(
    scheme: &LocalScheme,
    estimates: &ChannelEstimates,
    est: &EstimatorBank,
    cfg: &ScenarioConfig,
    m: usize,
) -> Result<LocalCombining> {
    let combiner = LocalCombiner::new(scheme, est, cfg)?;
    let mut v = vec![CVector::zeros(cfg.antennas); cfg.num_ues];
    let loaded = combiner.combine(m, estimates, &mut v);
    Ok(LocalCombining { v, loaded })
}
