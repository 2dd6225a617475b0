#![allow(dead_code)]

use cfmimo::estimation::{EstimatorBank, EstimatorSpec};
use cfmimo::scenario::{assign_pilots, build_statistics, generate_geometry, FadingModel};
use cfmimo::{ChannelStatistics, PilotSetup, ScenarioConfig};

pub struct Fixture {
    pub cfg: ScenarioConfig,
    pub stats: ChannelStatistics,
    pub pilots: PilotSetup,
}

impl Fixture {
    pub fn new(m: usize, n: usize, k: usize, tau_p: usize, rayleigh: bool, seed: u64) -> Self {
        let mut cfg = ScenarioConfig {
            num_aps: m,
            antennas: n,
            num_ues: k,
            tau_p,
            area_side: 400.0,
            seed,
            ..ScenarioConfig::default()
        };
        if rayleigh {
            cfg.propagation.fading = FadingModel::Rayleigh;
        }
        let stats = build_statistics(&generate_geometry(&cfg), &cfg).unwrap();
        let pilots = assign_pilots(&cfg);
        Self { cfg, stats, pilots }
    }

    pub fn bank(&self, spec: &EstimatorSpec) -> EstimatorBank {
        EstimatorBank::build(spec, &self.stats, &self.pilots, &self.cfg).unwrap()
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
