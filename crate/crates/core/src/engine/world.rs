use alloc::vec::Vec;
use core::mem;

use rand::Rng;

use super::spatial::SpatialIndex;
use super::{DensityMode, EngineError, Scenario, SimConfig};
use crate::geo::{great_circle_distance, Prepared, WayPoint};
use crate::mobility::{
    junction, spawn_field_peer, spawn_peers, step_irregular, step_random_walk, step_uniform,
    FieldSpec, MobilityMode, MotionState, PathSpec, Role, SeedPosition,
};
use crate::protocol::{
    make_message, BuyerPolicy, Expiry, Incentive, KillPolicy, Message, MessageIds, MessageKind,
    Originator, Payload, Peer, PeerId, SellerPolicy,
};
use crate::rng::{peer_rng, world_rng, SimRng};
use crate::stats::{
    DeliveryKind, DeliveryRecord, DensitySeries, MessageCounters, RunResult, TickRecord, Track,
};
use crate::traces::{ContactTrace, TraceTopology};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Place {
    Path { path: u32, entry_delay_s: f64 },
    Field { field: u32 },
    Beacon(WayPoint),
    /// Trace peer without a position.
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Waiting(u64),
    Active,
    Gone,
}

#[derive(Debug, Clone)]
struct SimPeer {
    proto: Peer,
    place: Place,
    motion: MotionState,
    status: Status,
    position: Option<WayPoint>,
    prepared: Option<Prepared>,
    rng: SimRng,
    originator: bool,
}

impl SimPeer {
    fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    fn set_position(&mut self, p: Option<WayPoint>) {
        self.position = p;
        self.prepared = p.as_ref().map(Prepared::new);
    }
}

#[derive(Debug, Clone)]
enum Topology {
    Geographic {
        index: SpatialIndex,
        fresh: bool,
        /// Junction of each pair of grid paths, row-major by path index;
        /// empty unless junction attenuation is on.
        junctions: Vec<Option<Prepared>>,
    },
    Trace(TraceTopology),
}

/// A single simulated world.
#[derive(Debug, Clone)]
pub struct World {
    config: SimConfig,
    seed: u64,
    clock: u64,
    last_tick: u64,
    peers: Vec<SimPeer>,
    paths: Vec<PathSpec>,
    fields: Vec<FieldSpec>,
    topology: Topology,
    ids: MessageIds,
    rng: SimRng,
    counters: MessageCounters,
    infected: u32,
    ticks: Vec<TickRecord>,
    density: Vec<DensitySeries>,
    tracks: Vec<Track>,
    audit: Vec<DeliveryRecord>,
    seed_peer: Option<PeerId>,
    labels: Vec<u32>,
    last_content_sent: Option<u64>,
    last_content_received: Option<u64>,
    pending_replies: Vec<(u32, Message)>,
    scratch: Vec<u32>,
    candidates: Vec<u32>,
}

impl World {
    pub fn new(config: &SimConfig, scenario: &Scenario, seed: u64) -> Result<Self, EngineError> {
        config.validate()?;
        match scenario {
            Scenario::Geographic {
                paths,
                fields,
                beacons,
            } => Self::geographic(config, paths, fields, beacons, seed),
            Scenario::Trace(trace) => Self::trace(config, trace, seed),
        }
    }

    fn policies(config: &SimConfig) -> (SellerPolicy, BuyerPolicy) {
        (
            SellerPolicy {
                period_s: config.period_s,
                mode: config.mode,
                threshold: config.threshold.unwrap_or(0),
                broadcast_budget: config.broadcast_budget,
            },
            BuyerPolicy {
                share_probability: config.share_probability,
                reply_to_samples: config.reply_to_samples,
                ..BuyerPolicy::default()
            },
        )
    }

    fn blank(config: &SimConfig, seed: u64, topology: Topology, last_tick: u64) -> Self {
        Self {
            config: *config,
            seed,
            clock: 0,
            last_tick,
            peers: Vec::new(),
            paths: Vec::new(),
            fields: Vec::new(),
            topology,
            ids: MessageIds::new(),
            rng: world_rng(seed),
            counters: MessageCounters::default(),
            infected: 0,
            ticks: Vec::with_capacity(last_tick as usize + 1),
            density: Vec::new(),
            tracks: Vec::new(),
            audit: Vec::new(),
            seed_peer: None,
            labels: Vec::new(),
            last_content_sent: None,
            last_content_received: None,
            pending_replies: Vec::new(),
            scratch: Vec::new(),
            candidates: Vec::new(),
        }
    }

    fn push_peer(&mut self, place: Place, motion: MotionState, entry: u64, originator: bool, rng: SimRng) {
        let id = PeerId(self.peers.len() as u32);
        let (seller, mut buyer) = Self::policies(&self.config);
        if matches!(place, Place::Beacon(_)) {
            buyer.share_probability = 1.0;
        }
        if originator && self.seed_peer.is_none() {
            self.seed_peer = Some(id);
        }
        self.labels.push(id.0);
        self.peers.push(SimPeer {
            proto: Peer::new(id, seller, buyer),
            place,
            motion,
            status: Status::Waiting(entry),
            position: None,
            prepared: None,
            rng,
            originator,
        });
    }

    fn geographic(
        config: &SimConfig,
        paths: &[PathSpec],
        fields: &[FieldSpec],
        beacons: &[WayPoint],
        seed: u64,
    ) -> Result<Self, EngineError> {
        let topology = Topology::Geographic {
            index: SpatialIndex::default(),
            fresh: false,
            junctions: Vec::new(),
        };
        let mut w = Self::blank(config, seed, topology, config.duration_s);
        w.paths = paths.to_vec();
        w.fields = fields.to_vec();
        for (pi, path) in paths.iter().enumerate() {
            for s in spawn_peers(path, config.interval_m, config.max_speed_mps, config.seed_position)? {
                let rng = peer_rng(seed, w.peers.len() as u32);
                let entry = libm::ceil(s.entry_delay_s) as u64;
                let place = Place::Path {
                    path: pi as u32,
                    entry_delay_s: s.entry_delay_s,
                };
                w.push_peer(place, s.motion, entry, s.role == Role::Seller, rng);
            }
        }
        for (fi, field) in fields.iter().enumerate() {
            let seller = config.seed_position.slot(field.n_peers as usize)?;
            for k in 0..field.n_peers as usize {
                let mut rng = peer_rng(seed, w.peers.len() as u32);
                let motion = spawn_field_peer(field, config.max_speed_mps, &config.irregular, &mut rng);
                w.push_peer(Place::Field { field: fi as u32 }, motion, 0, k == seller, rng);
            }
        }
        for &b in beacons {
            let rng = peer_rng(seed, w.peers.len() as u32);
            w.push_peer(Place::Beacon(b), MotionState::Static, 0, false, rng);
        }
        if w.peers.is_empty() {
            return Err(EngineError::EmptyScenario);
        }
        if config.junction_attenuation {
            let n = paths.len();
            let table = (0..n * n)
                .map(|k| junction(&paths[k / n], &paths[k % n]).map(|p| Prepared::new(&p)))
                .collect();
            if let Topology::Geographic { junctions, .. } = &mut w.topology {
                *junctions = table;
            }
        }
        w.init_series();
        Ok(w)
    }

    fn trace(config: &SimConfig, trace: &ContactTrace, seed: u64) -> Result<Self, EngineError> {
        let roster = trace.roster();
        if roster.is_empty() {
            return Err(EngineError::EmptyScenario);
        }
        let seed_slot = match config.seed_position {
            SeedPosition::Index(id) => u32::try_from(id)
                .ok()
                .and_then(|id| trace.index_of(id))
                .ok_or(EngineError::SeedPeer(id))?
                .index(),
            pos => pos.slot(roster.len())?,
        };
        let last = trace
            .last_end()
            .map_or(0, |e| e.saturating_add(config.period_s))
            .min(config.duration_s);
        let topology = Topology::Trace(TraceTopology::new(trace));
        let mut w = Self::blank(config, seed, topology, last);
        for k in 0..roster.len() {
            let rng = peer_rng(seed, k as u32);
            w.push_peer(Place::Node, MotionState::Static, 0, k == seed_slot, rng);
        }
        w.labels = roster.to_vec();
        w.init_series();
        Ok(w)
    }

    fn init_series(&mut self) {
        let n = self.peers.len();
        self.density = match self.config.density {
            DensityMode::Off => Vec::new(),
            DensityMode::SeedPeer => self
                .seed_peer
                .map(|p| DensitySeries { peer: p, counts: Vec::new() })
                .into_iter()
                .collect(),
            DensityMode::AllPeers => (0..n)
                .map(|i| DensitySeries { peer: PeerId(i as u32), counts: Vec::new() })
                .collect(),
        };
        if self.config.record_tracks {
            self.tracks = (0..n)
                .map(|i| Track { peer: PeerId(i as u32), points: Vec::new() })
                .collect();
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Last tick that will be simulated.
    pub fn last_tick(&self) -> u64 {
        self.last_tick
    }

    pub fn is_done(&self) -> bool {
        self.clock > self.last_tick
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn active_count(&self) -> usize {
        self.peers.iter().filter(|p| p.is_active()).count()
    }

    pub fn position(&self, peer: PeerId) -> Option<WayPoint> {
        self.peers.get(peer.index()).and_then(|p| p.position)
    }

    pub fn peer(&self, peer: PeerId) -> Option<&Peer> {
        self.peers.get(peer.index()).map(|p| &p.proto)
    }

    pub fn infected(&self) -> u32 {
        self.infected
    }

    pub fn counters(&self) -> MessageCounters {
        self.counters
    }

    /// Advances the world by one tick.
    pub fn step(&mut self) {
        let t = self.clock;
        self.move_peers(t);
        match &mut self.topology {
            Topology::Geographic { fresh, .. } => *fresh = false,
            Topology::Trace(tt) => tt.advance(t),
        }

        let mut outgoing = Vec::new();
        for i in 0..self.peers.len() {
            if !self.peers[i].is_active() {
                continue;
            }
            for m in self.peers[i].proto.seller_tick(t, &mut self.ids) {
                match m.kind {
                    MessageKind::Content => {
                        self.counters.content_sent += 1;
                        self.last_content_sent = Some(t);
                    }
                    MessageKind::Sample => self.counters.sample_sent += 1,
                    MessageKind::SampleReply { .. } => self.counters.reply_sent += 1,
                }
                outgoing.push((i as u32, m));
            }
        }
        for (sender, m) in &outgoing {
            self.deliver(*sender, m, t);
        }

        let replies = mem::take(&mut self.pending_replies);
        self.counters.reply_sent += replies.len() as u64;
        for (sender, m) in &replies {
            self.deliver(*sender, m, t);
        }
        for p in self.peers.iter_mut().filter(|p| p.is_active()) {
            p.proto.close_round(t);
        }

        for p in self.peers.iter_mut().filter(|p| p.is_active()) {
            self.counters.expired_killed += p.proto.purge_expired(t) as u64;
        }

        self.snapshot(t);
        self.retire_finished();
        self.clock += 1;
    }

    fn move_peers(&mut self, t: u64) {
        let config = &self.config;
        for p in &mut self.peers {
            match p.status {
                Status::Waiting(entry) if entry <= t => {
                    p.status = Status::Active;
                    p.proto.entry_time = t;
                    let pos = match p.place {
                        Place::Path { path, entry_delay_s } => {
                            let offset_m = ((t as f64 - entry_delay_s) * config.max_speed_mps).max(0.0);
                            p.motion = MotionState::on_path(offset_m, config.max_speed_mps);
                            Some(self.paths[path as usize].line.point_at(offset_m))
                        }
                        Place::Field { field } => random_walk_position(&self.fields[field as usize], &p.motion),
                        Place::Beacon(b) => Some(b),
                        Place::Node => None,
                    };
                    p.set_position(pos);
                    if p.originator {
                        let kill = KillPolicy {
                            hops: config.kill_hops,
                            expires: config.kill_ttl_s.map_or(Expiry::Never, |ttl| Expiry::At(t.saturating_add(ttl))),
                        };
                        let id = p.proto.id;
                        let msg = make_message(
                            &mut self.ids,
                            Originator::anonymous(id),
                            Payload::text(&alloc::format!("content from peer {}", id.0)),
                            Incentive::altruistic(),
                            kill,
                            t,
                        )
                        .expect("altruistic message is valid");
                        p.proto.originate(msg, t);
                        self.infected += 1;
                    }
                }
                Status::Active if t > p.proto.entry_time => {
                    let (motion, moved, pos) = match p.place {
                        Place::Path { path, .. } => {
                            let spec = &self.paths[path as usize];
                            let before = path_offset(&p.motion);
                            let next = match spec.mode {
                                MobilityMode::Uniform => step_uniform(p.motion, &spec.line, 1.0, config.max_speed_mps),
                                MobilityMode::Irregular => step_irregular(
                                    p.motion,
                                    &spec.line,
                                    1.0,
                                    config.max_speed_mps,
                                    &config.irregular,
                                    &mut p.rng,
                                ),
                            };
                            match next {
                                MotionState::OnPath { offset_m, .. } => {
                                    (next, offset_m - before, Some(spec.line.point_at(offset_m)))
                                }
                                _ => (next, 0.0, p.position),
                            }
                        }
                        Place::Field { field } => {
                            let f = &self.fields[field as usize];
                            let next = step_random_walk(p.motion, f, 1.0);
                            let moved = match next {
                                MotionState::RandomWalk { speed_mps, .. } => speed_mps,
                                _ => 0.0,
                            };
                            (next, moved, random_walk_position(f, &next))
                        }
                        Place::Beacon(_) | Place::Node => continue,
                    };
                    if moved != 0.0 {
                        p.motion = motion;
                        p.proto.distance_traveled_m += moved;
                        p.set_position(pos);
                    } else {
                        p.motion = motion;
                    }
                }
                _ => {}
            }
        }
    }

    fn retire_finished(&mut self) {
        let hold = self.config.hold_at_end;
        for p in &mut self.peers {
            if p.is_active() && p.motion.is_finished() {
                if hold {
                    p.motion = MotionState::Static;
                } else {
                    p.status = Status::Gone;
                    p.set_position(None);
                }
            }
        }
    }

    fn ensure_index(&mut self) {
        if let Topology::Geographic { index, fresh, .. } = &mut self.topology {
            if !*fresh {
                index.rebuild(
                    self.config.range_m,
                    self.peers
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.is_active())
                        .filter_map(|(i, p)| p.position.map(|pos| (i as u32, pos))),
                );
                *fresh = true;
            }
        }
    }

    /// Active peers that can hear `sender` this tick, ascending by id.
    fn neighbors(&mut self, sender: u32, out: &mut Vec<u32>) {
        out.clear();
        self.ensure_index();
        match &self.topology {
            Topology::Trace(tt) => {
                out.extend(
                    tt.neighbors(sender)
                        .iter()
                        .copied()
                        .filter(|&j| self.peers[j as usize].is_active()),
                );
            }
            Topology::Geographic { index, junctions, .. } => {
                let s = &self.peers[sender as usize];
                let (Some(pos), Some(prep)) = (s.position, s.prepared) else {
                    return;
                };
                let range = self.config.range_m;
                let mut cands = mem::take(&mut self.candidates);
                index.candidates(&pos, &mut cands);
                for &j in &cands {
                    if j == sender {
                        continue;
                    }
                    let r = &self.peers[j as usize];
                    let Some(rp) = r.prepared else { continue };
                    if !r.is_active() || prep.distance(&rp) > range {
                        continue;
                    }
                    if !junctions.is_empty() && !self.junction_allows(s, r, &prep, &rp, junctions) {
                        continue;
                    }
                    out.push(j);
                }
                self.candidates = cands;
                out.sort_unstable();
            }
        }
    }

    fn junction_allows(&self, a: &SimPeer, b: &SimPeer, pa: &Prepared, pb: &Prepared, junctions: &[Option<Prepared>]) -> bool {
        let (Place::Path { path: i, .. }, Place::Path { path: j, .. }) = (a.place, b.place) else {
            return true;
        };
        let (Some(la), Some(lb)) = (self.paths[i as usize].grid_line, self.paths[j as usize].grid_line) else {
            return true;
        };
        if la.grid != lb.grid || (la.axis == lb.axis && la.index == lb.index) {
            return true;
        }
        let n = self.paths.len();
        match junctions[i as usize * n + j as usize] {
            Some(jn) => pa.distance(&jn) <= self.config.range_m && pb.distance(&jn) <= self.config.range_m,
            None => false,
        }
    }

    fn deliver(&mut self, sender: u32, msg: &Message, t: u64) {
        let mut receivers = mem::take(&mut self.scratch);
        self.neighbors(sender, &mut receivers);
        if let MessageKind::SampleReply { to, .. } = msg.kind {
            if !self.config.bystander_replies {
                receivers.retain(|&r| r == to.0);
            }
        }
        let sender_pos = self.peers[sender as usize].position;
        let kind = match msg.kind {
            MessageKind::Content => DeliveryKind::Content,
            MessageKind::Sample => DeliveryKind::Sample,
            MessageKind::SampleReply { .. } => DeliveryKind::Reply,
        };
        let drop_p = self.config.drop_probability;
        for &r in &receivers {
            let dropped = drop_p > 0.0 && self.rng.random_bool(drop_p);
            if self.config.audit {
                let distance_m = match (sender_pos, self.peers[r as usize].position) {
                    (Some(a), Some(b)) => Some(great_circle_distance(&a, &b)),
                    _ => None,
                };
                self.audit.push(DeliveryRecord {
                    tick: t,
                    from: PeerId(sender),
                    to: PeerId(r),
                    kind,
                    msg: msg.id,
                    distance_m,
                    depth: msg.hops_travelled + 1,
                    dropped,
                });
            }
            if dropped {
                self.counters.dropped_by_fault += 1;
                continue;
            }
            self.counters.delivered += 1;
            let peer = &mut self.peers[r as usize];
            let rec = peer.proto.on_receive(msg, t, sender_pos, &mut self.ids, &mut peer.rng);
            if rec.newly_infected {
                self.infected += 1;
            }
            if rec.redundant {
                self.counters.redundant_receipts += 1;
            } else if kind == DeliveryKind::Content {
                self.counters.content_received += 1;
                self.last_content_received = Some(t);
            }
            if rec.reply_intent {
                self.counters.reply_intents += 1;
            }
            if rec.proxy_notice {
                self.counters.proxy_notices += 1;
            }
            if let Some(reply) = rec.reply {
                self.pending_replies.push((r, reply));
            }
        }
        self.scratch = receivers;
    }

    fn snapshot(&mut self, t: u64) {
        if !self.density.is_empty() {
            let mut buf = Vec::new();
            for k in 0..self.density.len() {
                let peer = self.density[k].peer.0;
                let count = if self.peers[peer as usize].is_active() {
                    self.neighbors(peer, &mut buf);
                    buf.len() as u32
                } else {
                    0
                };
                self.density[k].counts.push(count);
            }
        }
        if self.config.record_tracks {
            for (p, track) in self.peers.iter().zip(self.tracks.iter_mut()) {
                if let (true, Some(pos)) = (p.is_active(), p.position) {
                    track.points.push((t, pos));
                }
            }
        }
        self.ticks.push(TickRecord {
            time: t,
            infected: self.infected,
            counters: self.counters,
        });
    }

    /// Consumes the world into its statistics.
    pub fn finish(self) -> RunResult {
        RunResult {
            infection_times: self.peers.iter().map(|p| p.proto.infected_at()).collect(),
            contact_totals: self.peers.iter().map(|p| p.proto.contacts.total()).collect(),
            total_peers: self.peers.len() as u32,
            config: self.config,
            seed: self.seed,
            ticks: self.ticks,
            counters: self.counters,
            density: self.density,
            tracks: self.tracks,
            audit: self.audit,
            seed_peer: self.seed_peer,
            labels: self.labels,
            last_content_sent: self.last_content_sent,
            last_content_received: self.last_content_received,
        }
    }
}

fn path_offset(m: &MotionState) -> f64 {
    match m {
        MotionState::OnPath { offset_m, .. } => *offset_m,
        _ => 0.0,
    }
}

fn random_walk_position(field: &FieldSpec, m: &MotionState) -> Option<WayPoint> {
    match m {
        MotionState::RandomWalk { x_m, y_m, .. } => Some(field.to_waypoint(*x_m, *y_m)),
        _ => None,
    }
}
