//! Discrete-time simulation kernel.
//!
//! Each one-second tick runs in a fixed order: move peers, collect the
//! broadcasts due, deliver them by range (or trace adjacency) with
//! per-receiver fault injection, deliver sample replies and evaluate
//! thresholds, expire killed messages, then snapshot statistics. A
//! broadcast never outlives its tick.

mod spatial;
mod world;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use crate::mobility::SeedPosition;
use crate::geo::WayPoint;
use crate::mobility::{FieldSpec, IrregularModel, MobilityError, PathSpec};
use crate::protocol::{BroadcastMode, HopBudget};
use crate::rng::replication_seed;
use crate::stats::{Aggregate, RunResult};
use crate::traces::ContactTrace;
pub use world::World;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("duration must be at least one second")]
    Duration,
    #[error("range must be positive, got {0}")]
    Range(f64),
    #[error("period must be at least one second")]
    Period,
    #[error("{name} probability {value} outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("maximum speed must be positive, got {0}")]
    Speed(f64),
    #[error("interval must be positive, got {0}")]
    Interval(f64),
    #[error("extended mode needs a threshold")]
    MissingThreshold,
    #[error("at least one replication is required")]
    Replications,
    #[error("irregular model: {0}")]
    Irregular(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error("scenario has no peers")]
    EmptyScenario,
    #[error("seed peer {0} is not in the trace roster")]
    SeedPeer(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityMode {
    Off,
    /// Neighbour count of the first seller only.
    #[default]
    SeedPeer,
    AllPeers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub duration_s: u64,
    pub range_m: f64,
    pub period_s: u64,
    pub share_probability: f64,
    pub max_speed_mps: f64,
    pub interval_m: f64,
    pub mode: BroadcastMode,
    pub threshold: Option<u32>,
    pub drop_probability: f64,
    pub kill_hops: HopBudget,
    /// Message lifetime in seconds from creation.
    pub kill_ttl_s: Option<u64>,
    pub seed: u64,
    pub replications: u32,
    pub seed_position: SeedPosition,
    /// Peers that reach the end of their path stay there as static peers.
    pub hold_at_end: bool,
    pub irregular: IrregularModel,
    /// Peers other than the addressee count overheard sample replies.
    pub bystander_replies: bool,
    /// Peers on crossing grid lines hear each other only near the junction.
    pub junction_attenuation: bool,
    pub reply_to_samples: bool,
    pub broadcast_budget: Option<u32>,
    pub density: DensityMode,
    pub record_tracks: bool,
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 3600,
            range_m: 10.0,
            period_s: 60,
            share_probability: 1.0,
            max_speed_mps: 1.0,
            interval_m: 8.0,
            mode: BroadcastMode::Simple,
            threshold: None,
            drop_probability: 0.0,
            kill_hops: HopBudget::Unlimited,
            kill_ttl_s: None,
            seed: 42,
            replications: 5,
            seed_position: SeedPosition::First,
            hold_at_end: false,
            irregular: IrregularModel::default(),
            bystander_replies: false,
            junction_attenuation: false,
            reply_to_samples: true,
            broadcast_budget: None,
            density: DensityMode::SeedPeer,
            record_tracks: false,
            audit: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let prob = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::Probability { name, value })
            }
        };
        if self.duration_s < 1 {
            return Err(ConfigError::Duration);
        }
        if !(self.range_m > 0.0) || !self.range_m.is_finite() {
            return Err(ConfigError::Range(self.range_m));
        }
        if self.period_s < 1 {
            return Err(ConfigError::Period);
        }
        prob("share", self.share_probability)?;
        prob("drop", self.drop_probability)?;
        prob("pause", self.irregular.pause_probability)?;
        if !(self.max_speed_mps > 0.0) {
            return Err(ConfigError::Speed(self.max_speed_mps));
        }
        if !(self.interval_m > 0.0) {
            return Err(ConfigError::Interval(self.interval_m));
        }
        if self.mode == BroadcastMode::Extended && self.threshold.is_none() {
            return Err(ConfigError::MissingThreshold);
        }
        if self.replications < 1 {
            return Err(ConfigError::Replications);
        }
        let m = &self.irregular;
        if m.pause_min_s > m.pause_max_s {
            return Err(ConfigError::Irregular(alloc::format!(
                "pause range {}..{} is empty",
                m.pause_min_s, m.pause_max_s
            )));
        }
        if !(0.0..=1.0).contains(&m.min_speed_fraction) {
            return Err(ConfigError::Irregular(alloc::format!(
                "speed fraction {} outside [0, 1]",
                m.min_speed_fraction
            )));
        }
        Ok(())
    }
}

/// Geographic peers plus any replayed contact trace.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Geographic {
        paths: Vec<PathSpec>,
        fields: Vec<FieldSpec>,
        /// Static altruistic peers.
        beacons: Vec<WayPoint>,
    },
    Trace(ContactTrace),
}

impl Scenario {
    pub fn paths(paths: Vec<PathSpec>) -> Self {
        Scenario::Geographic {
            paths,
            fields: Vec::new(),
            beacons: Vec::new(),
        }
    }

    pub fn field(field: FieldSpec) -> Self {
        Scenario::Geographic {
            paths: Vec::new(),
            fields: alloc::vec![field],
            beacons: Vec::new(),
        }
    }
}

/// Runs one simulation for `config.duration_s` ticks (`t = 0..=duration`)
/// with `config.seed`.
pub fn run(config: &SimConfig, scenario: &Scenario) -> Result<RunResult, EngineError> {
    run_with_seed(config, scenario, config.seed)
}

pub fn run_with_seed(config: &SimConfig, scenario: &Scenario, seed: u64) -> Result<RunResult, EngineError> {
    let mut world = World::new(config, scenario, seed)?;
    while !world.is_done() {
        world.step();
    }
    Ok(world.finish())
}

/// Seed of each replication of `config`.
pub fn replication_seeds(config: &SimConfig) -> Vec<u64> {
    (0..config.replications)
        .map(|k| replication_seed(config.seed, k))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicated {
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

/// Runs `config.replications` independent worlds, one after another.
pub fn run_replicated(config: &SimConfig, scenario: &Scenario) -> Result<Replicated, EngineError> {
    let runs = replication_seeds(config)
        .into_iter()
        .map(|seed| run_with_seed(config, scenario, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = Aggregate::new(&runs);
    Ok(Replicated { runs, aggregate })
}
