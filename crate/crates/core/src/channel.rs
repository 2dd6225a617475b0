//! Small-scale fading realizations drawn from [`ChannelStatistics`].

use crate::error::Result;
use crate::linalg::{CVector, CscgSampler, RngStream};
use crate::scenario::ChannelStatistics;

/// One `N`-vector per AP–UE link, stored `m`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkVectors {
    num_ues: usize,
    channels: Vec<CVector>,
}

impl LinkVectors {
    pub fn zeros(num_aps: usize, num_ues: usize, antennas: usize) -> Self {
        Self {
            num_ues,
            channels: vec![CVector::zeros(antennas); num_aps * num_ues],
        }
    }

    pub fn from_channels(num_ues: usize, channels: Vec<CVector>) -> Self {
        Self { num_ues, channels }
    }

    pub fn get(&self, m: usize, k: usize) -> &CVector {
        &self.channels[m * self.num_ues + k]
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn get_mut(&mut self, m: usize, k: usize) -> &mut CVector {
        &mut self.channels[m * self.num_ues + k]
    }
}

/// A realization of every channel `g_mk`.
pub type ChannelRealization = LinkVectors;

/// Channel estimates `ĝ_mk` for every link.
pub type ChannelEstimates = LinkVectors;

/// Draws `g_mk ~ CN(ḡ_mk, Ř_mk)` independently across links.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    num_aps: usize,
    num_ues: usize,
    antennas: usize,
    links: Vec<CscgSampler>,
}

impl ChannelSampler {
    pub fn new(stats: &ChannelStatistics) -> Result<Self> {
        let links = stats
            .links()
            .iter()
            .map(|l| CscgSampler::new(l.los_mean.clone(), &l.nlos_corr))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_aps: stats.num_aps(),
            num_ues: stats.num_ues(),
            antennas: stats.antennas(),
            links,
        })
    }

    pub fn blank(&self) -> ChannelRealization {
        ChannelRealization::zeros(self.num_aps, self.num_ues, self.antennas)
    }

    pub fn draw_into(&self, rng: &mut RngStream, out: &mut ChannelRealization) {
        for (sampler, g) in self.links.iter().zip(out.channels.iter_mut()) {
            sampler.sample_into(rng, g);
        }
    }

    pub fn draw(&self, rng: &mut RngStream) -> ChannelRealization {
        let mut out = self.blank();
        self.draw_into(rng, &mut out);
        out
    }
}
