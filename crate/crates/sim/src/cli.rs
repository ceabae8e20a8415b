//! Command-line experiment runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use mcp_core::engine::{DensityMode, EngineError};
use mcp_core::geo::WayPoint;
use mcp_core::mobility::{build_grid, FieldSpec, MobilityMode};
use mcp_core::protocol::{BroadcastMode, HopBudget};
use mcp_core::{Scenario, SeedPosition, SimConfig};

use crate::{csv, kml, map, runner, summary, trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simple,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mobility {
    Uniform,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub rows: u32,
    pub cols: u32,
    pub spacing_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldArg {
    pub side_m: f64,
    pub n_peers: u32,
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let bad = || format!("expected ROWSxCOLS:SPACING, got `{s}`");
    let (dims, spacing) = s.split_once(':').ok_or_else(bad)?;
    let (rows, cols) = dims.split_once(['x', 'X', '×']).ok_or_else(bad)?;
    Ok(GridArg {
        rows: rows.trim().parse().map_err(|_| bad())?,
        cols: cols.trim().parse().map_err(|_| bad())?,
        spacing_m: spacing.trim().parse().map_err(|_| bad())?,
    })
}

fn parse_field(s: &str) -> Result<FieldArg, String> {
    let bad = || format!("expected SIDE:N, got `{s}`");
    let (side, n) = s.split_once(':').ok_or_else(bad)?;
    Ok(FieldArg {
        side_m: side.trim().parse().map_err(|_| bad())?,
        n_peers: n.trim().parse().map_err(|_| bad())?,
    })
}

/// A count, or `None` for `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limit(pub Option<u64>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    match s {
        "inf" | "unlimited" => Ok(Limit(None)),
        _ => s.parse().map(|n| Limit(Some(n))).map_err(|_| format!("expected a count or `inf`, got `{s}`")),
    }
}

fn parse_seed_peer(s: &str) -> Result<SeedPosition, String> {
    match s {
        "first" => Ok(SeedPosition::First),
        "middle" => Ok(SeedPosition::Middle),
        "last" => Ok(SeedPosition::Last),
        _ => s
            .parse()
            .map(SeedPosition::Index)
            .map_err(|_| format!("expected first, middle, last or an index, got `{s}`")),
    }
}

fn parse_anchor(s: &str) -> Result<WayPoint, String> {
    let (lat, lon) = s.split_once(',').ok_or_else(|| format!("expected LAT,LON, got `{s}`"))?;
    let lat = lat.trim().parse().map_err(|_| format!("bad latitude `{lat}`"))?;
    let lon = lon.trim().parse().map_err(|_| format!("bad longitude `{lon}`"))?;
    WayPoint::new(lat, lon).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "mcp-sim", version, about = "Market Contact Protocol simulator")]
#[command(group(ArgGroup::new("source").required(true).args(["map", "trace", "grid", "field"])))]
pub struct Args {
    /// Map file of paths, beacons and fields
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    /// Contact trace file (`a b start end [flags]` per line)
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Bidirectional street grid, e.g. 2x2:340 (spacing in meters)
    #[arg(long, value_name = "ROWSxCOLS:M", value_parser = parse_grid)]
    pub grid: Option<GridArg>,
    /// Bounded random-walk field, side in meters and peer count, e.g. 300:101
    #[arg(long, value_name = "M:N", value_parser = parse_field)]
    pub field: Option<FieldArg>,

    /// Simulated time in seconds (trace units in trace mode)
    #[arg(long, value_name = "S", default_value_t = 3600)]
    pub duration: u64,
    /// Radio range in meters
    #[arg(long, value_name = "M", default_value_t = 10.0)]
    pub range: f64,
    /// Seconds between broadcasts
    #[arg(long, value_name = "S", default_value_t = 60)]
    pub period: u64,
    /// Probability in [0, 1] that a buyer forwards what it receives
    #[arg(long, value_name = "P", default_value_t = 1.0)]
    pub share: f64,
    /// Maximum peer speed in m/s
    #[arg(long, value_name = "M/S", default_value_t = 1.0)]
    pub speed: f64,
    /// Spacing between peers entering a path, in meters
    #[arg(long, value_name = "M", default_value_t = 8.0)]
    pub interval: f64,
    /// Broadcast mode
    #[arg(long, value_enum, default_value_t = Mode::Simple)]
    pub mode: Mode,
    /// Sample replies needed before an extended-mode broadcast
    #[arg(long, value_name = "N")]
    pub threshold: Option<u32>,
    /// Per-receiver probability in [0, 1] that a delivery is lost
    #[arg(long, value_name = "P", default_value_t = 0.0)]
    pub drop: f64,
    /// Forward budget per message, in hops, or `inf`
    #[arg(long, value_name = "N|inf", default_value = "inf", value_parser = parse_limit)]
    pub kill_hops: Limit,
    /// Message lifetime in seconds, or `inf`
    #[arg(long, value_name = "S|inf", default_value = "inf", value_parser = parse_limit)]
    pub kill_ttl: Limit,
    /// Which peer of each path (or field, or trace id) seeds the content
    #[arg(long, value_name = "first|middle|last|INDEX", default_value = "first", value_parser = parse_seed_peer)]
    pub seed_peer: SeedPosition,
    /// Extra static beacons, one `BEACON (lat, lon)` per line
    #[arg(long, value_name = "FILE")]
    pub beacons: Option<PathBuf>,
    /// Number of replications
    #[arg(long, value_name = "N", default_value_t = 5)]
    pub reps: u32,
    /// Base seed; replication seeds derive from it
    #[arg(long, value_name = "U64", default_value_t = 42)]
    pub seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Write tracks_<k>.kml per replication
    #[arg(long)]
    pub kml: bool,
    /// Write density_<k>.csv per replication (seed peer's neighbour count)
    #[arg(long)]
    pub density: bool,
    /// With --density, record every peer's neighbour count
    #[arg(long, requires = "density")]
    pub density_all: bool,

    /// Sellers on the first grid path
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub sellers: u32,
    /// Buyers on each grid path
    #[arg(long, value_name = "N", default_value_t = 30)]
    pub buyers: u32,
    /// Mobility model for grid paths
    #[arg(long, value_enum, default_value_t = Mobility::Uniform)]
    pub mobility: Mobility,
    /// Southwest corner of a grid or field, in decimal degrees
    #[arg(long, value_name = "LAT,LON", default_value = "51.4900,-0.1900", value_parser = parse_anchor)]
    pub anchor: WayPoint,
    /// Peers stay at the end of their path instead of leaving
    #[arg(long)]
    pub hold_at_end: bool,
    /// Peers on crossing grid lines hear each other only near the junction
    #[arg(long)]
    pub junction_attenuation: bool,
    /// Peers count sample replies addressed to someone else
    #[arg(long)]
    pub bystander_replies: bool,
    /// Worker threads for replications (default: available cores)
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })
}

impl Args {
    pub fn config(&self) -> Result<SimConfig, CliError> {
        if self.kml && self.trace.is_some() {
            return Err(CliError::Config("--kml needs geographic peers, not a trace".into()));
        }
        let config = SimConfig {
            duration_s: self.duration,
            range_m: self.range,
            period_s: self.period,
            share_probability: self.share,
            max_speed_mps: self.speed,
            interval_m: self.interval,
            mode: match self.mode {
                Mode::Simple => BroadcastMode::Simple,
                Mode::Extended => BroadcastMode::Extended,
            },
            threshold: self.threshold,
            drop_probability: self.drop,
            kill_hops: match self.kill_hops.0 {
                Some(h) => HopBudget::Limited(u32::try_from(h).map_err(|_| CliError::Config(format!("hop budget {h} too large")))?),
                None => HopBudget::Unlimited,
            },
            kill_ttl_s: self.kill_ttl.0,
            seed: self.seed,
            replications: self.reps,
            seed_position: self.seed_peer,
            hold_at_end: self.hold_at_end,
            bystander_replies: self.bystander_replies,
            junction_attenuation: self.junction_attenuation,
            density: match (self.density, self.density_all) {
                (false, _) => DensityMode::Off,
                (true, false) => DensityMode::SeedPeer,
                (true, true) => DensityMode::AllPeers,
            },
            record_tracks: self.kml,
            ..SimConfig::default()
        };
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let mode = match self.mobility {
            Mobility::Uniform => MobilityMode::Uniform,
            Mobility::Irregular => MobilityMode::Irregular,
        };
        let mut scenario = if let Some(path) = &self.map {
            map::parse_map(&read(path)?)
                .map_err(|e| CliError::Input { path: path.clone(), message: e.to_string() })?
                .into_scenario()
        } else if let Some(path) = &self.trace {
            let t = trace::parse_contacts(&read(path)?)
                .map_err(|e| CliError::Input { path: path.clone(), message: e.to_string() })?;
            Scenario::Trace(t)
        } else if let Some(g) = self.grid {
            let paths = build_grid(self.anchor, g.rows, g.cols, g.spacing_m, self.sellers, self.buyers, mode, 0)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Scenario::paths(paths)
        } else if let Some(f) = self.field {
            Scenario::field(FieldSpec::new(self.anchor, f.side_m, f.n_peers).map_err(|e| CliError::Config(e.to_string()))?)
        } else {
            return Err(CliError::Config("no scenario source given".into()));
        };
        if let Some(path) = &self.beacons {
            let extra = map::parse_map(&read(path)?).map_err(|e| CliError::Input { path: path.clone(), message: e.to_string() })?;
            if !extra.paths.is_empty() || !extra.fields.is_empty() {
                return Err(CliError::Input { path: path.clone(), message: "beacon file may only contain BEACON lines".into() });
            }
            match &mut scenario {
                Scenario::Geographic { beacons, .. } => beacons.extend(extra.beacons),
                Scenario::Trace(_) => return Err(CliError::Config("--beacons cannot be combined with --trace".into())),
            }
        }
        Ok(scenario)
    }
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|source| CliError::Output { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

/// Runs the experiment described by `args`; returns the files written.
pub fn run_experiment(args: &Args) -> Result<(Vec<PathBuf>, String), CliError> {
    let config = args.config()?;
    let scenario = args.scenario()?;
    let workers = args.threads.unwrap_or_else(runner::default_workers);
    let rep = runner::run_parallel(&config, &scenario, workers)?;
    fs::create_dir_all(&args.out).map_err(|source| CliError::Output { path: args.out.clone(), source })?;
    let mut written = Vec::new();
    let mut report = String::new();
    for (i, r) in rep.runs.iter().enumerate() {
        let k = i + 1;
        write(args.out.join(format!("run_{k}.csv")), &csv::run_csv(r), &mut written)?;
        if args.kml {
            let text = kml::emit_kml(r, 0).map_err(|e| CliError::Config(e.to_string()))?;
            write(args.out.join(format!("tracks_{k}.kml")), &text, &mut written)?;
        }
        if args.density {
            write(args.out.join(format!("density_{k}.csv")), &csv::density_csv(r), &mut written)?;
        }
        report.push_str(&summary::run_block(k, r));
        report.push('\n');
    }
    write(args.out.join("aggregate.csv"), &csv::aggregate_csv(&rep.aggregate), &mut written)?;
    report.push_str(&summary::aggregate_block(&rep.aggregate));
    Ok((written, report))
}

pub fn main_with(args: Args) -> ExitCode {
    match run_experiment(&args) {
        Ok((written, report)) => {
            print!("{report}");
            println!("wrote {} files to {}", written.len(), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mcp-sim: {e}");
            e.exit_code()
        }
    }
}
