use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::engine::SimConfig;
use crate::geo::WayPoint;
use crate::protocol::{MessageId, PeerId};

/// Cumulative message counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageCounters {
    pub content_sent: u64,
    pub sample_sent: u64,
    pub reply_sent: u64,
    pub delivered: u64,
    pub dropped_by_fault: u64,
    pub redundant_receipts: u64,
    /// First receipts of a content message at a peer.
    pub content_received: u64,
    pub expired_killed: u64,
    pub reply_intents: u64,
    pub proxy_notices: u64,
}

impl MessageCounters {
    /// Broadcasts of every kind.
    pub fn total_sent(&self) -> u64 {
        self.content_sent + self.sample_sent + self.reply_sent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickRecord {
    pub time: u64,
    pub infected: u32,
    pub counters: MessageCounters,
}

/// Neighbour counts of one peer, one entry per tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensitySeries {
    pub peer: PeerId,
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub peer: PeerId,
    pub points: Vec<(u64, WayPoint)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryKind {
    Content,
    Sample,
    Reply,
}

/// One reception opportunity, kept when auditing is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryRecord {
    pub tick: u64,
    pub from: PeerId,
    pub to: PeerId,
    pub kind: DeliveryKind,
    pub msg: MessageId,
    /// Great-circle separation at the broadcasting tick; `None` on traces.
    pub distance_m: Option<f64>,
    /// Length of the forwarding chain this delivery completes.
    pub depth: u32,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: SimConfig,
    pub seed: u64,
    pub total_peers: u32,
    /// One record per tick, `t = 0..=duration`.
    pub ticks: Vec<TickRecord>,
    pub counters: MessageCounters,
    pub infection_times: Vec<Option<u64>>,
    /// Sum of contact-database counts per peer.
    pub contact_totals: Vec<u64>,
    pub density: Vec<DensitySeries>,
    pub tracks: Vec<Track>,
    pub audit: Vec<DeliveryRecord>,
    pub seed_peer: Option<PeerId>,
    /// External name of each peer (trace id, or the peer index).
    pub labels: Vec<u32>,
    pub last_content_sent: Option<u64>,
    pub last_content_received: Option<u64>,
}

impl RunResult {
    pub fn final_infected(&self) -> u32 {
        self.ticks.last().map_or(0, |t| t.infected)
    }

    pub fn fraction(&self, infected: u32) -> f64 {
        if self.total_peers == 0 {
            0.0
        } else {
            f64::from(infected) / f64::from(self.total_peers)
        }
    }

    pub fn final_fraction(&self) -> f64 {
        self.fraction(self.final_infected())
    }

    pub fn infected_set(&self) -> BTreeSet<PeerId> {
        self.infection_times
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_some())
            .map(|(i, _)| PeerId(i as u32))
            .collect()
    }

    /// `(time, infected count)` pairs for curve fitting.
    pub fn infection_curve(&self) -> Vec<(f64, f64)> {
        self.ticks
            .iter()
            .map(|t| (t.time as f64, f64::from(t.infected)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for v in values {
            n += 1;
            sum += v;
            sq += v * v;
        }
        if n == 0 {
            return Stat::default();
        }
        let mean = sum / n as f64;
        let var = (sq / n as f64 - mean * mean).max(0.0);
        let std = if n == 1 { 0.0 } else { libm::sqrt(var) };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateTick {
    pub time: u64,
    pub infected: Stat,
    pub fraction: Stat,
    pub content_sent: Stat,
    pub sample_sent: Stat,
    pub reply_sent: Stat,
    pub delivered: Stat,
    pub dropped: Stat,
    pub redundant: Stat,
}

/// Names of the per-run totals summarised in [`Aggregate::totals`].
pub const TOTAL_METRICS: [&str; 10] = [
    "percent_infected",
    "content_sent",
    "sample_sent",
    "reply_sent",
    "total_sent",
    "delivered",
    "dropped_by_fault",
    "redundant_receipts",
    "expired_killed",
    "final_infected",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub ticks: Vec<AggregateTick>,
    /// Mean and deviation per entry of [`TOTAL_METRICS`].
    pub totals: Vec<(&'static str, Stat)>,
}

impl Aggregate {
    pub fn new(results: &[RunResult]) -> Self {
        let len = results.iter().map(|r| r.ticks.len()).min().unwrap_or(0);
        let ticks = (0..len)
            .map(|i| {
                let col = |f: &dyn Fn(&RunResult) -> f64| Stat::of(results.iter().map(f));
                let c = |r: &RunResult| r.ticks[i].counters;
                AggregateTick {
                    time: results[0].ticks[i].time,
                    infected: col(&|r| f64::from(r.ticks[i].infected)),
                    fraction: col(&|r| r.fraction(r.ticks[i].infected)),
                    content_sent: col(&|r| c(r).content_sent as f64),
                    sample_sent: col(&|r| c(r).sample_sent as f64),
                    reply_sent: col(&|r| c(r).reply_sent as f64),
                    delivered: col(&|r| c(r).delivered as f64),
                    dropped: col(&|r| c(r).dropped_by_fault as f64),
                    redundant: col(&|r| c(r).redundant_receipts as f64),
                }
            })
            .collect();
        let metric = |name: &str, r: &RunResult| -> f64 {
            let c = &r.counters;
            match name {
                "percent_infected" => 100.0 * r.final_fraction(),
                "content_sent" => c.content_sent as f64,
                "sample_sent" => c.sample_sent as f64,
                "reply_sent" => c.reply_sent as f64,
                "total_sent" => c.total_sent() as f64,
                "delivered" => c.delivered as f64,
                "dropped_by_fault" => c.dropped_by_fault as f64,
                "redundant_receipts" => c.redundant_receipts as f64,
                "expired_killed" => c.expired_killed as f64,
                _ => f64::from(r.final_infected()),
            }
        };
        let totals = TOTAL_METRICS
            .iter()
            .map(|&name| (name, Stat::of(results.iter().map(|r| metric(name, r)))))
            .collect();
        Self {
            runs: results.len(),
            ticks,
            totals,
        }
    }

    pub fn total(&self, name: &str) -> Option<Stat> {
        self.totals.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
    }

    /// Mean infected count per tick.
    pub fn mean_curve(&self) -> Vec<(f64, f64)> {
        self.ticks
            .iter()
            .map(|t| (t.time as f64, t.infected.mean))
            .collect()
    }
}
