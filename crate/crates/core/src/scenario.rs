//! Network geometry, per-link channel statistics and pilot assignment.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_asymmetry, min_eigenvalue, CMatrix, CVector, RngStream, C64};

const STREAM_GEOMETRY: u64 = 1;
const STREAM_LINKS: u64 = 2;

/// Fading model for the AP–UE links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FadingModel {
    /// Zero-mean channels; every LoS mean is exactly zero.
    Rayleigh,
    /// Rician factor `κ[dB] = k0_db − slope_db_per_m · d`.
    Rician { k0_db: f64, slope_db_per_m: f64 },
}

/// Large-scale propagation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    /// Gain in dB at 1 m.
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    /// AP–UE distances are clamped from below to this value (meters).
    pub min_distance: f64,
    /// Standard deviation of i.i.d. log-normal shadowing (dB).
    pub shadow_std_db: f64,
    /// Angular standard deviation of the local scattering (degrees).
    pub angular_spread_deg: f64,
    pub fading: FadingModel,
}

impl Default for PropagationModel {
    fn default() -> Self {
        Self {
            pathloss_ref_db: -30.5,
            pathloss_exponent: 3.67,
            min_distance: 10.0,
            shadow_std_db: 4.0,
            angular_spread_deg: 15.0,
            fading: FadingModel::Rician { k0_db: 13.0, slope_db_per_m: 0.03 },
        }
    }
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of APs `M`.
    pub num_aps: usize,
    /// Antennas per AP `N`.
    pub antennas: usize,
    /// Number of single-antenna UEs `K`.
    pub num_ues: usize,
    /// Side of the square deployment area (meters).
    pub area_side: f64,
    /// Coherence block length in channel uses.
    pub tau_c: usize,
    /// Pilot length in channel uses.
    pub tau_p: usize,
    /// UL transmit power per UE (W), used when `ul_power_per_ue` is empty.
    pub ul_power: f64,
    /// Optional per-UE UL powers (W); overrides `ul_power` when non-empty.
    pub ul_power_per_ue: Vec<f64>,
    /// Total DL power spent on each UE across all APs (W).
    pub dl_power_per_ue: f64,
    /// Per-AP DL budget (W); `None` means `K · dl_power_per_ue`.
    pub ap_power_budget: Option<f64>,
    /// Noise power `σ²` (W), shared by UL and DL.
    pub noise_power: f64,
    pub propagation: PropagationModel,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_aps: 10,
            antennas: 2,
            num_ues: 4,
            area_side: 1000.0,
            tau_c: 200,
            tau_p: 1,
            ul_power: 0.2,
            ul_power_per_ue: Vec::new(),
            dl_power_per_ue: 0.2,
            ap_power_budget: None,
            noise_power: dbm_to_watts(-94.0),
            propagation: PropagationModel::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_aps == 0 || self.antennas == 0 || self.num_ues == 0 {
            return fail("M, N and K must all be at least 1".into());
        }
        if self.tau_p == 0 {
            return fail("tau_p must be at least 1".into());
        }
        if self.tau_c < self.tau_p + 1 {
            return fail(format!("tau_c ({}) must exceed tau_p ({})", self.tau_c, self.tau_p));
        }
        if !(self.area_side > 0.0) {
            return fail("area side must be positive".into());
        }
        let powers_ok = self.ul_power > 0.0
            && self.dl_power_per_ue > 0.0
            && self.noise_power > 0.0
            && self.ap_power_budget.is_none_or(|p| p > 0.0)
            && self.ul_power_per_ue.iter().all(|&p| p > 0.0);
        if !powers_ok {
            return fail("all powers must be positive".into());
        }
        if !self.ul_power_per_ue.is_empty() && self.ul_power_per_ue.len() != self.num_ues {
            return fail(format!(
                "ul_power_per_ue has {} entries for {} UEs",
                self.ul_power_per_ue.len(),
                self.num_ues
            ));
        }
        if self.propagation.min_distance <= 0.0 || self.propagation.angular_spread_deg < 0.0 {
            return fail("min distance must be positive and angular spread nonnegative".into());
        }
        Ok(())
    }

    /// UL power of UE `k` (W).
    pub fn ul_power(&self, k: usize) -> f64 {
        self.ul_power_per_ue.get(k).copied().unwrap_or(self.ul_power)
    }

    /// Channel uses left for data; every block is used either for UL or
    /// DL data, so `τ_u = τ_d = τ_c − τ_p`.
    pub fn data_uses(&self) -> usize {
        self.tau_c - self.tau_p
    }

    /// Pre-log factor `τ_u/τ_c` (also `τ_d/τ_c`).
    pub fn prelog(&self) -> f64 {
        self.data_uses() as f64 / self.tau_c as f64
    }

    pub fn ap_budget(&self) -> f64 {
        self.ap_power_budget
            .unwrap_or(self.num_ues as f64 * self.dl_power_per_ue)
    }

    pub fn is_rayleigh(&self) -> bool {
        matches!(self.propagation.fading, FadingModel::Rayleigh)
    }
}

/// AP and UE positions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
}

impl Geometry {
    pub fn distance(&self, m: usize, k: usize) -> f64 {
        let a = self.ap_positions[m];
        let u = self.ue_positions[k];
        ((a[0] - u[0]).powi(2) + (a[1] - u[1]).powi(2)).sqrt()
    }

    /// Angle of UE `k` seen from AP `m`, in radians.
    pub fn angle(&self, m: usize, k: usize) -> f64 {
        let a = self.ap_positions[m];
        let u = self.ue_positions[k];
        (u[1] - a[1]).atan2(u[0] - a[0])
    }
}

/// Uniform i.i.d. placement of APs and UEs in the square area.
pub fn generate_geometry(cfg: &ScenarioConfig) -> Geometry {
    let mut rng = RngStream::new(cfg.seed, STREAM_GEOMETRY);
    let side = cfg.area_side;
    let point = |rng: &mut RngStream| [side * rng.uniform(), side * rng.uniform()];
    let ap_positions = (0..cfg.num_aps).map(|_| point(&mut rng)).collect();
    let ue_positions = (0..cfg.num_ues).map(|_| point(&mut rng)).collect();
    Geometry { ap_positions, ue_positions }
}

/// Statistics of one AP–UE link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatistics {
    /// Deterministic LoS component `ḡ`.
    pub los_mean: CVector,
    /// NLoS spatial correlation `Ř`.
    pub nlos_corr: CMatrix,
    /// Large-scale gain `β` (linear).
    pub beta: f64,
    /// Rician factor `κ` (linear); zero for Rayleigh links.
    pub rician_factor: f64,
}

impl LinkStatistics {
    /// `E{g gᴴ} = ḡḡᴴ + Ř`.
    pub fn second_moment(&self) -> CMatrix {
        &self.los_mean * self.los_mean.adjoint() + &self.nlos_corr
    }
}

/// Channel statistics for every `(m, k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStatistics {
    num_aps: usize,
    num_ues: usize,
    antennas: usize,
    links: Vec<LinkStatistics>,
}

impl ChannelStatistics {
    /// Assembles statistics from links given in `m`-major order
    /// (`index = m · K + k`).
    pub fn from_links(
        num_aps: usize,
        num_ues: usize,
        antennas: usize,
        links: Vec<LinkStatistics>,
    ) -> Result<Self> {
        if links.len() != num_aps * num_ues {
            return Err(Error::Dimension(format!(
                "expected {} links, got {}",
                num_aps * num_ues,
                links.len()
            )));
        }
        for link in &links {
            if link.los_mean.len() != antennas || link.nlos_corr.shape() != (antennas, antennas) {
                return Err(Error::Dimension("link statistics do not match N".into()));
            }
        }
        Ok(Self { num_aps, num_ues, antennas, links })
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

    pub fn link(&self, m: usize, k: usize) -> &LinkStatistics {
        &self.links[m * self.num_ues + k]
    }

    pub fn los(&self, m: usize, k: usize) -> &CVector {
        &self.link(m, k).los_mean
    }

    pub fn corr(&self, m: usize, k: usize) -> &CMatrix {
        &self.link(m, k).nlos_corr
    }

    pub fn beta(&self, m: usize, k: usize) -> f64 {
        self.link(m, k).beta
    }

    pub fn links(&self) -> &[LinkStatistics] {
        &self.links
    }

    /// `Ḡ_mkl = ḡ_mk ḡ_mlᴴ`.
    pub fn los_outer(&self, m: usize, k: usize, l: usize) -> CMatrix {
        self.los(m, k) * self.los(m, l).adjoint()
    }

    /// True when every LoS mean is exactly zero.
    pub fn is_rayleigh(&self) -> bool {
        self.links.iter().all(|l| l.los_mean.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    /// First link with a nonzero LoS component, as `(m, k)`.
    pub fn first_rician_link(&self) -> Option<(usize, usize)> {
        self.links
            .iter()
            .position(|l| l.los_mean.iter().any(|z| *z != C64::new(0.0, 0.0)))
            .map(|i| (i / self.num_ues, i % self.num_ues))
    }

    /// Copy with every LoS component removed (NLoS statistics unchanged).
    pub fn without_los(&self) -> Self {
        let mut out = self.clone();
        for link in &mut out.links {
            link.los_mean.fill(C64::new(0.0, 0.0));
            link.rician_factor = 0.0;
        }
        out
    }

    /// Checks Hermitian PSD correlation and `tr(Ř) + ‖ḡ‖² = N·β` on every
    /// link.
    pub fn validate(&self) -> Result<()> {
        for (i, link) in self.links.iter().enumerate() {
            let (m, k) = (i / self.num_ues, i % self.num_ues);
            let r = &link.nlos_corr;
            if hermitian_asymmetry(r) > 1e-12 {
                return Err(Error::Config(format!("correlation of link ({m},{k}) is not Hermitian")));
            }
            let tr = r.trace().re;
            let min_eig = min_eigenvalue(r);
            if min_eig < -1e-9 * tr.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Indefinite { min_eigenvalue: min_eig, trace: tr });
            }
            let energy = tr + link.los_mean.norm_squared();
            let expected = self.antennas as f64 * link.beta;
            if (energy - expected).abs() > 1e-9 * expected {
                return Err(Error::Config(format!(
                    "link ({m},{k}) energy {energy:e} differs from N·beta {expected:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StatisticsDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StatisticsDocument = serde_json::from_str(text)?;
        doc.into_statistics()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Uniform-linear-array response with half-wavelength spacing.
pub fn ula_response(antennas: usize, angle: f64) -> CVector {
    CVector::from_fn(antennas, |n, _| C64::from_polar(1.0, PI * n as f64 * angle.sin()))
}

/// Gaussian local-scattering correlation (unit diagonal) for a ULA with
/// half-wavelength spacing, nominal angle `angle` and angular standard
/// deviation `spread` (both radians).
pub fn local_scattering_correlation(antennas: usize, angle: f64, spread: f64) -> CMatrix {
    CMatrix::from_fn(antennas, antennas, |i, j| {
        let d = i as f64 - j as f64;
        let phase = C64::from_polar(1.0, PI * d * angle.sin());
        let decay = (-0.5 * spread * spread * (PI * d * angle.cos()).powi(2)).exp();
        phase * decay
    })
}

/// Large-scale gain, Rician factor, LoS mean and NLoS correlation for
/// every link.
pub fn build_statistics(geom: &Geometry, cfg: &ScenarioConfig) -> Result<ChannelStatistics> {
    cfg.validate()?;
    if geom.ap_positions.len() != cfg.num_aps || geom.ue_positions.len() != cfg.num_ues {
        return Err(Error::Dimension("geometry does not match configuration".into()));
    }
    let prop = &cfg.propagation;
    let n = cfg.antennas;
    let spread = prop.angular_spread_deg.to_radians();
    let mut rng = RngStream::new(cfg.seed, STREAM_LINKS);
    let mut links = Vec::with_capacity(cfg.num_aps * cfg.num_ues);
    for m in 0..cfg.num_aps {
        for k in 0..cfg.num_ues {
            // both draws happen in every mode so Rician and Rayleigh runs share β
            let shadow = prop.shadow_std_db * rng.standard_normal();
            let los_phase = 2.0 * PI * rng.uniform();

            let d = geom.distance(m, k).max(prop.min_distance);
            let gain_db = prop.pathloss_ref_db - 10.0 * prop.pathloss_exponent * d.log10() + shadow;
            let beta = 10f64.powf(gain_db / 10.0);
            let kappa = match prop.fading {
                FadingModel::Rayleigh => 0.0,
                FadingModel::Rician { k0_db, slope_db_per_m } => {
                    10f64.powf((k0_db - slope_db_per_m * d) / 10.0)
                }
            };
            let angle = geom.angle(m, k);
            let los_mean = if kappa > 0.0 {
                let amp = (kappa / (1.0 + kappa) * beta).sqrt();
                let rot = C64::from_polar(amp, los_phase);
                ula_response(n, angle).map(|z| z * rot)
            } else {
                CVector::zeros(n)
            };
            let nlos_corr =
                local_scattering_correlation(n, angle, spread).scale(beta / (1.0 + kappa));
            links.push(LinkStatistics { los_mean, nlos_corr, beta, rician_factor: kappa });
        }
    }
    ChannelStatistics::from_links(cfg.num_aps, cfg.num_ues, n, links)
}

/// Pilot indices and the cosets of UEs sharing each pilot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotSetup {
    tau_p: usize,
    pilot_of: Vec<usize>,
    cosets: Vec<Vec<usize>>,
}

impl PilotSetup {
    /// Builds a setup from explicit zero-based pilot indices.
    pub fn from_assignment(tau_p: usize, pilot_of: Vec<usize>) -> Result<Self> {
        if tau_p == 0 {
            return Err(Error::Config("tau_p must be at least 1".into()));
        }
        if let Some(&bad) = pilot_of.iter().find(|&&t| t >= tau_p) {
            return Err(Error::Config(format!("pilot index {bad} out of range for tau_p {tau_p}")));
        }
        let mut cosets = vec![Vec::new(); tau_p];
        for (k, &t) in pilot_of.iter().enumerate() {
            cosets[t].push(k);
        }
        Ok(Self { tau_p, pilot_of, cosets })
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn num_ues(&self) -> usize {
        self.pilot_of.len()
    }

    /// Zero-based pilot index of UE `k`.
    pub fn pilot_of(&self, k: usize) -> usize {
        self.pilot_of[k]
    }

    /// UEs sharing UE `k`'s pilot, including `k`, in ascending order.
    pub fn coset(&self, k: usize) -> &[usize] {
        &self.cosets[self.pilot_of[k]]
    }

    /// UEs using pilot `t`.
    pub fn users_of_pilot(&self, t: usize) -> &[usize] {
        &self.cosets[t]
    }

    pub fn shares_pilot(&self, k: usize, l: usize) -> bool {
        self.pilot_of[k] == self.pilot_of[l]
    }
}

/// Round-robin pilot assignment by UE index.
pub fn assign_pilots(cfg: &ScenarioConfig) -> PilotSetup {
    let pilot_of = (0..cfg.num_ues).map(|k| k % cfg.tau_p).collect();
    PilotSetup::from_assignment(cfg.tau_p, pilot_of).expect("round-robin indices are in range")
}

#[derive(Serialize, Deserialize)]
struct LinkDocument {
    ap: usize,
    ue: usize,
    beta: f64,
    rician_factor: f64,
    los_mean: Vec<[f64; 2]>,
    /// Row-major rows of `[re, im]` pairs.
    nlos_corr: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct StatisticsDocument {
    num_aps: usize,
    num_ues: usize,
    antennas: usize,
    links: Vec<LinkDocument>,
}

impl From<&ChannelStatistics> for StatisticsDocument {
    fn from(stats: &ChannelStatistics) -> Self {
        let pair = |z: &C64| [z.re, z.im];
        let links = stats
            .links
            .iter()
            .enumerate()
            .map(|(i, link)| LinkDocument {
                ap: i / stats.num_ues,
                ue: i % stats.num_ues,
                beta: link.beta,
                rician_factor: link.rician_factor,
                los_mean: link.los_mean.iter().map(pair).collect(),
                nlos_corr: link
                    .nlos_corr
                    .row_iter()
                    .map(|row| row.iter().map(pair).collect())
                    .collect(),
            })
            .collect();
        Self {
            num_aps: stats.num_aps,
            num_ues: stats.num_ues,
            antennas: stats.antennas,
            links,
        }
    }
}

impl StatisticsDocument {
    fn into_statistics(self) -> Result<ChannelStatistics> {
        let n = self.antennas;
        let mut slots: Vec<Option<LinkStatistics>> = vec![None; self.num_aps * self.num_ues];
        for link in self.links {
            if link.ap >= self.num_aps || link.ue >= self.num_ues {
                return Err(Error::Dimension(format!("link ({}, {}) out of range", link.ap, link.ue)));
            }
            if link.los_mean.len() != n
                || link.nlos_corr.len() != n
                || link.nlos_corr.iter().any(|row| row.len() != n)
            {
                return Err(Error::Dimension("link entry does not match antenna count".into()));
            }
            let los_mean = CVector::from_iterator(n, link.los_mean.iter().map(|p| C64::new(p[0], p[1])));
            let nlos_corr = CMatrix::from_fn(n, n, |i, j| {
                let p = link.nlos_corr[i][j];
                C64::new(p[0], p[1])
            });
            slots[link.ap * self.num_ues + link.ue] = Some(LinkStatistics {
                los_mean,
                nlos_corr,
                beta: link.beta,
                rician_factor: link.rician_factor,
            });
        }
        let links = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::Dimension(format!("missing link index {i}"))))
            .collect::<Result<Vec<_>>>()?;
        ChannelStatistics::from_links(self.num_aps, self.num_ues, n, links)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> ScenarioConfig {
        ScenarioConfig { seed, ..ScenarioConfig::default() }
    }

    #[test]
    fn geometry_is_deterministic() {
        assert_eq!(generate_geometry(&cfg(5)), generate_geometry(&cfg(5)));
        assert_ne!(generate_geometry(&cfg(5)), generate_geometry(&cfg(6)));
    }

    #[test]
    fn positions_stay_inside_area() {
        let c = ScenarioConfig { num_aps: 40, num_ues: 40, ..cfg(9) };
        let g = generate_geometry(&c);
        for p in g.ap_positions.iter().chain(&g.ue_positions) {
            assert!((0.0..=1000.0).contains(&p[0]) && (0.0..=1000.0).contains(&p[1]));
        }
    }

    #[test]
    fn statistics_satisfy_normalization_and_psd() {
        let c = ScenarioConfig { antennas: 4, ..cfg(3) };
        let stats = build_statistics(&generate_geometry(&c), &c).unwrap();
        stats.validate().unwrap();
        assert!(!stats.is_rayleigh());
    }

    #[test]
    fn rayleigh_mode_zeroes_los() {
        let mut c = cfg(3);
        c.propagation.fading = FadingModel::Rayleigh;
        let stats = build_statistics(&generate_geometry(&c), &c).unwrap();
        assert!(stats.is_rayleigh());
        assert!(stats.links().iter().all(|l| l.rician_factor == 0.0));
        stats.validate().unwrap();
    }

    #[test]
    fn rayleigh_and_rician_share_large_scale_gains() {
        let rician = cfg(12);
        let mut rayleigh = rician.clone();
        rayleigh.propagation.fading = FadingModel::Rayleigh;
        let g = generate_geometry(&rician);
        let a = build_statistics(&g, &rician).unwrap();
        let b = build_statistics(&g, &rayleigh).unwrap();
        for (x, y) in a.links().iter().zip(b.links()) {
            assert_eq!(x.beta, y.beta);
        }
    }

    #[test]
    fn zero_angular_spread_gives_rank_one() {
        let mut c = ScenarioConfig { antennas: 4, ..cfg(4) };
        c.propagation.angular_spread_deg = 0.0;
        let stats = build_statistics(&generate_geometry(&c), &c).unwrap();
        for link in stats.links() {
            let sv = link.nlos_corr.clone().singular_values();
            assert!(sv[1] <= 1e-12 * sv[0]);
        }
    }

    #[test]
    fn distance_is_clamped() {
        let c = ScenarioConfig { num_aps: 1, num_ues: 1, ..cfg(0) };
        let g = Geometry { ap_positions: vec![[5.0, 5.0]], ue_positions: vec![[5.0, 5.0]] };
        let mut c2 = c.clone();
        c2.propagation.shadow_std_db = 0.0;
        let stats = build_statistics(&g, &c2).unwrap();
        let expected = 10f64.powf((-30.5 - 36.7) / 10.0);
        assert!((stats.beta(0, 0) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn pilot_cosets() {
        let c = ScenarioConfig { num_ues: 10, tau_p: 1, ..cfg(0) };
        let p = assign_pilots(&c);
        assert_eq!(p.coset(3), &(0..10).collect::<Vec<_>>()[..]);

        let c = ScenarioConfig { num_ues: 3, tau_p: 4, tau_c: 10, ..cfg(0) };
        let p = assign_pilots(&c);
        for k in 0..3 {
            assert_eq!(p.coset(k), &[k]);
        }

        let c = ScenarioConfig { num_ues: 5, tau_p: 2, ..cfg(0) };
        let p = assign_pilots(&c);
        assert_eq!(p.coset(0), &[0, 2, 4]);
        assert_eq!(p.coset(1), &[1, 3]);
        assert!(p.shares_pilot(2, 4) && !p.shares_pilot(1, 2));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig { tau_p: 0, ..cfg(0) }.validate().is_err());
        assert!(ScenarioConfig { tau_c: 1, tau_p: 1, ..cfg(0) }.validate().is_err());
        assert!(ScenarioConfig { num_ues: 0, ..cfg(0) }.validate().is_err());
        assert!(ScenarioConfig { noise_power: 0.0, ..cfg(0) }.validate().is_err());
        assert!(cfg(0).validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let c = ScenarioConfig { num_aps: 3, num_ues: 2, ..cfg(21) };
        let stats = build_statistics(&generate_geometry(&c), &c).unwrap();
        let back = ChannelStatistics::from_json(&stats.to_json().unwrap()).unwrap();
        assert_eq!(back, stats);
    }
}
