//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::EstimatorSpec;
use crate::scenario::{dbm_to_watts, FadingModel, ScenarioConfig};

/// Evaluated scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Mr,
    Lmmse,
    Lrzf,
    LmmseLsfd,
    LrzfLsfd,
    /// Closed-form OBE.
    Obe,
    /// OBE from sampled moments.
    ObeMc,
}

impl Scheme {
    pub const ALL: [Scheme; 7] =
        [Self::Mr, Self::Lmmse, Self::Lrzf, Self::LmmseLsfd, Self::LrzfLsfd, Self::Obe, Self::ObeMc];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mr => "mr",
            Self::Lmmse => "lmmse",
            Self::Lrzf => "lrzf",
            Self::LmmseLsfd => "lmmse+lsfd",
            Self::LrzfLsfd => "lrzf+lsfd",
            Self::Obe => "obe",
            Self::ObeMc => "obe-mc",
        }
    }

    /// LSFD is a UL-only receiver structure.
    pub fn supports_dl(&self) -> bool {
        !matches!(self, Self::LmmseLsfd | Self::LrzfLsfd)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or(Error::UnknownScheme(s))
    }
}

/// Swept scenario dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    None,
    Ues,
    Antennas,
    Aps,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" | "none" => Ok(Self::None),
            "K" | "k" => Ok(Self::Ues),
            "N" | "n" => Ok(Self::Antennas),
            "M" | "m" => Ok(Self::Aps),
            other => Err(Error::Config(format!("unknown sweep axis `{other}` (expected K, N or M)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionSelect {
    Ul,
    Dl,
    Both,
}

impl DirectionSelect {
    pub fn ul(&self) -> bool {
        matches!(self, Self::Ul | Self::Both)
    }

    pub fn dl(&self) -> bool {
        matches!(self, Self::Dl | Self::Both)
    }
}

impl FromStr for DirectionSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ul" => Ok(Self::Ul),
            "dl" => Ok(Self::Dl),
            "both" => Ok(Self::Both),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepAxis,
    /// Values of the swept dimension; ignored when `sweep` is `None`.
    pub sweep_values: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub estimators: Vec<EstimatorSpec>,
    pub direction: DirectionSelect,
    pub mc_samples: usize,
    pub obe_samples: usize,
    pub batches: usize,
    /// Independent geometry draws.
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Record wall-clock time per cell; off by default so reports are
    /// byte-identical across runs.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            sweep: SweepAxis::None,
            sweep_values: Vec::new(),
            schemes: vec![Scheme::Obe, Scheme::LrzfLsfd],
            estimators: vec![EstimatorSpec::Mmse, EstimatorSpec::Gls],
            direction: DirectionSelect::Ul,
            mc_samples: 2000,
            obe_samples: 20_000,
            batches: 20,
            trials: 1,
            seed: 0,
            output: None,
            format: OutputFormat::Csv,
            timing: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse { line, msg: format!("invalid value `{value}` for `{key}`") })
}

fn parse_list<T, F>(value: &str, f: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut k0_db = 13.0;
        let mut slope = 0.03;
        let mut rician = true;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let sc = &mut cfg.scenario;
            let p = &mut sc.propagation;
            match key {
                "num_aps" | "M" => sc.num_aps = parse_num(key, value, line_no)?,
                "antennas" | "N" => sc.antennas = parse_num(key, value, line_no)?,
                "num_ues" | "K" => sc.num_ues = parse_num(key, value, line_no)?,
                "area_side" => sc.area_side = parse_num(key, value, line_no)?,
                "tau_c" => sc.tau_c = parse_num(key, value, line_no)?,
                "tau_p" => sc.tau_p = parse_num(key, value, line_no)?,
                "ul_power" => sc.ul_power = parse_num(key, value, line_no)?,
                "dl_power_per_ue" => sc.dl_power_per_ue = parse_num(key, value, line_no)?,
                "ap_power_budget" => sc.ap_power_budget = Some(parse_num(key, value, line_no)?),
                "noise_power" => sc.noise_power = parse_num(key, value, line_no)?,
                "noise_dbm" => sc.noise_power = dbm_to_watts(parse_num(key, value, line_no)?),
                "pathloss_ref_db" => p.pathloss_ref_db = parse_num(key, value, line_no)?,
                "pathloss_exponent" => p.pathloss_exponent = parse_num(key, value, line_no)?,
                "min_distance" => p.min_distance = parse_num(key, value, line_no)?,
                "shadow_std_db" => p.shadow_std_db = parse_num(key, value, line_no)?,
                "angular_spread_deg" => p.angular_spread_deg = parse_num(key, value, line_no)?,
                "fading" => {
                    rician = match value {
                        "rician" => true,
                        "rayleigh" => false,
                        _ => return Err(Error::Parse { line: line_no, msg: format!("unknown fading `{value}`") }),
                    }
                }
                "rician_k0_db" => k0_db = parse_num(key, value, line_no)?,
                "rician_slope_db_per_m" => slope = parse_num(key, value, line_no)?,
                "sweep" => cfg.sweep = value.parse()?,
                "sweep_values" => cfg.sweep_values = parse_list(value, |s| parse_num(key, s, line_no))?,
                "schemes" => cfg.schemes = parse_list(value, str::parse)?,
                "estimators" => cfg.estimators = parse_list(value, EstimatorSpec::parse)?,
                "direction" => cfg.direction = value.parse()?,
                "mc_samples" => cfg.mc_samples = parse_num(key, value, line_no)?,
                "obe_samples" => cfg.obe_samples = parse_num(key, value, line_no)?,
                "batches" => cfg.batches = parse_num(key, value, line_no)?,
                "trials" => cfg.trials = parse_num(key, value, line_no)?,
                "seed" => cfg.seed = parse_num(key, value, line_no)?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "format" => cfg.format = value.parse()?,
                "timing" => cfg.timing = parse_num(key, value, line_no)?,
                _ => return Err(Error::Parse { line: line_no, msg: format!("unknown key `{key}`") }),
            }
        }
        cfg.scenario.propagation.fading = if rician {
            FadingModel::Rician { k0_db, slope_db_per_m: slope }
        } else {
            FadingModel::Rayleigh
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.sweep != SweepAxis::None && self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values must not be empty".into()));
        }
        if self.sweep_values.contains(&0) {
            return Err(Error::Config("sweep values must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("scheme and estimator lists must not be empty".into()));
        }
        Ok(())
    }

    /// Sweep values to iterate over (`[current]` without a sweep).
    pub fn sweep_points(&self) -> Vec<usize> {
        match self.sweep {
            SweepAxis::None => vec![0],
            _ => self.sweep_values.clone(),
        }
    }

    /// Scenario for one trial and sweep value.
    pub fn scenario_for(&self, trial: usize, value: usize) -> ScenarioConfig {
        let mut sc = self.scenario.clone();
        match self.sweep {
            SweepAxis::None => {}
            SweepAxis::Ues => sc.num_ues = value,
            SweepAxis::Antennas => sc.antennas = value,
            SweepAxis::Aps => sc.num_aps = value,
        }
        sc.seed = self.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
        sc
    }
}
