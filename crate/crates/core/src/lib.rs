//! Cell-free massive MIMO with bilinear equalizers: channel estimation,
//! optimal BE combining and precoding, and UatF spectral efficiency by
//! Monte-Carlo and in closed form.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::type_complexity)]

pub mod channel;
pub mod downlink;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod montecarlo;
pub mod report;
pub mod scenario;
pub mod uplink;

pub use channel::{ChannelEstimates, ChannelRealization, ChannelSampler, LinkVectors};
pub use error::{Error, Result};
pub use estimation::{EstimatorBank, EstimatorSpec, PilotObservation};
pub use linalg::{CMatrix, CVector, RngStream, C64};
pub use montecarlo::{McEstimate, McSettings};
pub use report::{Direction, SeReport, UeSe};
pub use scenario::{ChannelStatistics, Geometry, PilotSetup, ScenarioConfig};
pub use uplink::CombinerBank;
