//! Shared fixtures for the benchmarks.

use cfmimo::estimation::{EstimatorBank, EstimatorSpec};
use cfmimo::scenario::{assign_pilots, build_statistics, generate_geometry};
use cfmimo::{CMatrix, CVector, ChannelStatistics, PilotSetup, RngStream, ScenarioConfig, C64};

pub struct Fixture {
    pub cfg: ScenarioConfig,
    pub stats: ChannelStatistics,
    pub pilots: PilotSetup,
    pub est: EstimatorBank,
}

impl Fixture {
    /// Default propagation, MMSE estimation, pilots from the default `τ_p`.
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Self {
        let cfg = ScenarioConfig { num_aps: m, antennas: n, num_ues: k, seed, ..ScenarioConfig::default() };
        let stats = build_statistics(&generate_geometry(&cfg), &cfg).expect("valid fixture");
        let pilots = assign_pilots(&cfg);
        let est = EstimatorBank::build(&EstimatorSpec::Mmse, &stats, &pilots, &cfg).expect("valid fixture");
        Self { cfg, stats, pilots, est }
    }
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    RngStream::new(seed, 0).complex_matrix(rows, cols)
}

/// Well-conditioned Hermitian positive definite `n × n` matrix.
pub fn hpd_matrix(n: usize, seed: u64) -> CMatrix {
    let a = random_matrix(n, n, seed);
    &a * a.adjoint() + CMatrix::identity(n, n) * C64::new(n as f64, 0.0)
}

pub fn random_vector(n: usize, seed: u64) -> CVector {
    RngStream::new(seed, 1).complex_vector(n)
}
