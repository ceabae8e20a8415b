//! Contact-trace replay and a temporal-reachability oracle.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::engine::{run, EngineError, Scenario, SimConfig};
use crate::protocol::PeerId;
use crate::stats::RunResult;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("peer {0} is in contact with itself")]
    SelfContact(u32),
    #[error("contact ends at {t_end} before it starts at {t_start}")]
    Interval { t_start: u64, t_end: u64 },
}

/// Kind of device carried by a trace participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceClass {
    Internal,
    External,
}

/// Two peers in contact over the closed interval `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactEvent {
    pub a: u32,
    pub b: u32,
    pub t_start: u64,
    pub t_end: u64,
    pub class: Option<DeviceClass>,
}

impl ContactEvent {
    pub fn new(a: u32, b: u32, t_start: u64, t_end: u64) -> Result<Self, TraceError> {
        if a == b {
            return Err(TraceError::SelfContact(a));
        }
        if t_start > t_end {
            return Err(TraceError::Interval { t_start, t_end });
        }
        Ok(Self { a, b, t_start, t_end, class: None })
    }

    pub fn with_class(mut self, class: DeviceClass) -> Self {
        self.class = Some(class);
        self
    }

    pub fn is_active(&self, t: u64) -> bool {
        self.t_start <= t && t <= self.t_end
    }

    pub fn involves(&self, peer: u32) -> bool {
        self.a == peer || self.b == peer
    }
}

/// Events sorted by start time plus the sorted roster of every id seen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContactTrace {
    events: Vec<ContactEvent>,
    roster: Vec<u32>,
}

impl ContactTrace {
    pub fn new(mut events: Vec<ContactEvent>) -> Self {
        events.sort_by_key(|e| (e.t_start, e.t_end, e.a, e.b));
        let roster: BTreeSet<u32> = events.iter().flat_map(|e| [e.a, e.b]).collect();
        Self {
            events,
            roster: roster.into_iter().collect(),
        }
    }

    /// Adds peers that never appear in any contact.
    pub fn with_peers(mut self, peers: impl IntoIterator<Item = u32>) -> Self {
        let mut all: BTreeSet<u32> = self.roster.iter().copied().collect();
        all.extend(peers);
        self.roster = all.into_iter().collect();
        self
    }

    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    pub fn roster(&self) -> &[u32] {
        &self.roster
    }

    /// Dense engine id of trace id `id`.
    pub fn index_of(&self, id: u32) -> Option<PeerId> {
        self.roster.binary_search(&id).ok().map(|i| PeerId(i as u32))
    }

    pub fn last_end(&self) -> Option<u64> {
        self.events.iter().map(|e| e.t_end).max()
    }
}

/// Replays `trace` through the engine. Peers are numbered by their rank in
/// the roster; `RunResult::labels` maps them back to trace ids.
pub fn run_trace(config: &SimConfig, trace: &ContactTrace) -> Result<RunResult, EngineError> {
    run(config, &Scenario::Trace(trace.clone()))
}

/// Active edge set of a trace, advanced one time unit at a time.
#[derive(Debug, Clone)]
pub(crate) struct TraceTopology {
    /// `(start, end, a, b)` in dense ids, sorted by start.
    events: Vec<(u64, u64, u32, u32)>,
    cursor: usize,
    live: Vec<(u64, u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl TraceTopology {
    pub(crate) fn new(trace: &ContactTrace) -> Self {
        let dense = |id| trace.index_of(id).map_or(0, |p| p.0);
        Self {
            events: trace
                .events()
                .iter()
                .map(|e| (e.t_start, e.t_end, dense(e.a), dense(e.b)))
                .collect(),
            cursor: 0,
            live: Vec::new(),
            adjacency: alloc::vec![Vec::new(); trace.roster().len()],
        }
    }

    pub(crate) fn advance(&mut self, t: u64) {
        let before = self.live.len();
        self.live.retain(|&(end, _, _)| end >= t);
        let mut changed = self.live.len() != before;
        while let Some(&(start, end, a, b)) = self.events.get(self.cursor) {
            if start > t {
                break;
            }
            self.cursor += 1;
            if end >= t {
                self.live.push((end, a, b));
                changed = true;
            }
        }
        if changed {
            self.adjacency.iter_mut().for_each(Vec::clear);
            for &(_, a, b) in &self.live {
                self.adjacency[a as usize].push(b);
                self.adjacency[b as usize].push(a);
            }
            for list in &mut self.adjacency {
                list.sort_unstable();
                list.dedup();
            }
        }
    }

    pub(crate) fn neighbors(&self, peer: u32) -> &[u32] {
        &self.adjacency[peer as usize]
    }
}

/// Peers reachable from `seed` by time-respecting contact chains up to
/// `t_end`, by a forward sweep over every time unit.
///
/// The seed can pass content on at any time; any other peer first at the
/// unit after it was reached. Infections found in a unit take effect only
/// once the whole unit is processed.
pub fn reachable_set(events: &[ContactEvent], seed: u32, t_end: u64) -> BTreeSet<u32> {
    let mut reached: BTreeMap<u32, u64> = BTreeMap::new();
    reached.insert(seed, 0);
    let Some(first) = events.iter().map(|e| e.t_start).min() else {
        return reached.into_keys().collect();
    };
    let last = events.iter().map(|e| e.t_end).max().unwrap_or(0).min(t_end);
    let can_send = |reached: &BTreeMap<u32, u64>, x: u32, t: u64| match reached.get(&x) {
        Some(&tau) => x == seed || t > tau,
        None => false,
    };
    let mut fresh = Vec::new();
    for t in first..=last {
        for e in events.iter().filter(|e| e.is_active(t)) {
            for (x, y) in [(e.a, e.b), (e.b, e.a)] {
                if can_send(&reached, x, t) && !reached.contains_key(&y) {
                    fresh.push(y);
                }
            }
        }
        for y in fresh.drain(..) {
            reached.entry(y).or_insert(t);
        }
    }
    reached.into_keys().collect()
}
