use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use super::message::*;
use crate::geo::WayPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BroadcastMode {
    /// Broadcast content every period.
    #[default]
    Simple,
    /// Sample the neighbourhood every period; broadcast content on the next
    /// tick only if enough peers replied.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SellerPolicy {
    pub period_s: u64,
    pub mode: BroadcastMode,
    pub threshold: u32,
    /// Upper bound on content broadcasts per stored message.
    pub broadcast_budget: Option<u32>,
}

impl Default for SellerPolicy {
    fn default() -> Self {
        Self {
            period_s: 60,
            mode: BroadcastMode::Simple,
            threshold: 0,
            broadcast_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuyerPolicy {
    pub share_probability: f64,
    pub reply_to_samples: bool,
    pub accept_filter: AcceptFilter,
}

impl Default for BuyerPolicy {
    fn default() -> Self {
        Self {
            share_probability: 1.0,
            reply_to_samples: true,
            accept_filter: AcceptFilter::default(),
        }
    }
}

/// Whether a buyer will act as a proxy for `msg`.
pub fn decide_share<R: Rng + ?Sized>(policy: &BuyerPolicy, msg: &Message, rng: &mut R) -> bool {
    policy.accept_filter.accepts(&msg.envelope) && rng.random_bool(policy.share_probability)
}

/// Extended-mode gate on the sample reply tally of one round.
pub fn threshold_gate(reply_count: u32, policy: &SellerPolicy) -> bool {
    reply_count >= policy.threshold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactRecord {
    pub count: u64,
    pub last_seen: u64,
    pub last_coords: Option<WayPoint>,
}

/// Who this peer has heard, and how often.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactDatabase {
    records: BTreeMap<PeerId, ContactRecord>,
    pub ratings: u32,
    pub transactions: u32,
}

impl ContactDatabase {
    pub fn record(&mut self, peer: PeerId, clock: u64, coords: Option<WayPoint>) {
        let rec = self.records.entry(peer).or_insert(ContactRecord {
            count: 0,
            last_seen: clock,
            last_coords: None,
        });
        rec.count += 1;
        rec.last_seen = clock;
        if coords.is_some() {
            rec.last_coords = coords;
        }
    }

    pub fn get(&self, peer: PeerId) -> Option<&ContactRecord> {
        self.records.get(&peer)
    }

    pub fn distinct_peers(&self) -> usize {
        self.records.len()
    }

    pub fn total(&self) -> u64 {
        self.records.values().map(|r| r.count).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PeerId, &ContactRecord)> {
        self.records.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Stored {
    msg: Message,
    broadcasts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Sampling {
    round_open: bool,
    replies: u32,
    content_due: Option<u64>,
}

/// Outcome of a single reception.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reception {
    /// First content this peer ever received.
    pub newly_infected: bool,
    /// Content whose id had already been seen.
    pub redundant: bool,
    pub stored: bool,
    /// First receipt of a message that passed the accept filter; stands in
    /// for a purchase reply over an out-of-band channel.
    pub reply_intent: bool,
    /// The peer chose to act as a proxy for this message.
    pub proxy_notice: bool,
    pub reply: Option<Message>,
    /// A reply addressed to this peer was added to its open round.
    pub counted_reply: bool,
}

/// Protocol state of one peer.
#[derive(Debug, Clone)]
pub struct Peer {
    pub id: PeerId,
    /// Tick at which the peer joined; anchors its broadcast schedule.
    pub entry_time: u64,
    pub seller: SellerPolicy,
    pub buyer: BuyerPolicy,
    pub contacts: ContactDatabase,
    pub distance_traveled_m: f64,
    identity: Arc<Envelope>,
    stored: BTreeMap<MessageId, Stored>,
    decisions: BTreeMap<MessageId, bool>,
    infected_at: Option<u64>,
    sampling: Sampling,
}

impl Peer {
    pub fn new(id: PeerId, seller: SellerPolicy, buyer: BuyerPolicy) -> Self {
        Self {
            id,
            entry_time: 0,
            seller,
            buyer,
            contacts: ContactDatabase::default(),
            distance_traveled_m: 0.0,
            identity: Arc::new(Envelope {
                originator: Originator::anonymous(id),
                payload: Payload::default(),
                incentive: Incentive::altruistic(),
            }),
            stored: BTreeMap::new(),
            decisions: BTreeMap::new(),
            infected_at: None,
            sampling: Sampling::default(),
        }
    }

    pub fn infected_at(&self) -> Option<u64> {
        self.infected_at
    }

    pub fn is_infected(&self) -> bool {
        self.infected_at.is_some()
    }

    pub fn stored_len(&self) -> usize {
        self.stored.len()
    }

    pub fn stored_messages(&self) -> impl Iterator<Item = &Message> {
        self.stored.values().map(|s| &s.msg)
    }

    pub fn has_seen(&self, id: MessageId) -> bool {
        self.decisions.contains_key(&id)
    }

    /// Takes ownership of a message this peer created.
    pub fn originate(&mut self, msg: Message, clock: u64) {
        self.decisions.insert(msg.id, true);
        self.infected_at.get_or_insert(clock);
        self.stored.insert(msg.id, Stored { msg, broadcasts: 0 });
    }

    pub fn value_factors(&self) -> PeerValueFactors {
        PeerValueFactors {
            contacts_seen: self.contacts.distinct_peers() as u32,
            distance_traveled_m: self.distance_traveled_m,
            ratings_received: self.contacts.ratings,
            transactions_done: self.contacts.transactions,
        }
    }

    pub fn value(&self, weights: [f64; 4]) -> f64 {
        peer_value(&self.value_factors(), weights)
    }

    /// Cached share decision; drawn once per message id.
    pub fn share_decision<R: Rng + ?Sized>(&mut self, msg: &Message, rng: &mut R) -> bool {
        if let Some(&d) = self.decisions.get(&msg.id) {
            return d;
        }
        let d = decide_share(&self.buyer, msg, rng);
        self.decisions.insert(msg.id, d);
        d
    }

    fn on_schedule(&self, clock: u64) -> bool {
        clock >= self.entry_time && (clock - self.entry_time).is_multiple_of(self.seller.period_s)
    }

    fn announceable(&self, clock: u64) -> bool {
        self.stored
            .values()
            .any(|s| apply_kill(&s.msg, clock) && self.within_budget(s))
    }

    fn within_budget(&self, s: &Stored) -> bool {
        self.seller.broadcast_budget.is_none_or(|b| s.broadcasts < b)
    }

    fn content_broadcasts(&mut self, clock: u64, out: &mut Vec<Message>) {
        let budget = self.seller.broadcast_budget;
        for s in self.stored.values_mut() {
            if !apply_kill(&s.msg, clock) || budget.is_some_and(|b| s.broadcasts >= b) {
                continue;
            }
            s.broadcasts += 1;
            let mut m = s.msg.clone();
            m.sender = self.id;
            out.push(m);
        }
    }

    /// Broadcasts due at `clock`.
    ///
    /// Simple mode sends every live message on each period boundary.
    /// Extended mode sends a sample on the boundary instead and, when the
    /// previous round passed its gate, the content one tick later.
    pub fn seller_tick(&mut self, clock: u64, ids: &mut MessageIds) -> Vec<Message> {
        let mut out = Vec::new();
        match self.seller.mode {
            BroadcastMode::Simple => {
                if self.on_schedule(clock) {
                    self.content_broadcasts(clock, &mut out);
                }
            }
            BroadcastMode::Extended => {
                if self.sampling.content_due == Some(clock) {
                    self.sampling.content_due = None;
                    self.content_broadcasts(clock, &mut out);
                }
                if self.on_schedule(clock) && self.announceable(clock) {
                    self.sampling.round_open = true;
                    self.sampling.replies = 0;
                    out.push(Message {
                        id: ids.fresh(),
                        envelope: Arc::clone(&self.identity),
                        kill: KillPolicy::NEVER,
                        kind: MessageKind::Sample,
                        sender: self.id,
                        hops_travelled: 0,
                        created_at: clock,
                    });
                }
            }
        }
        out
    }

    /// Closes an open sampling round; on success content goes out at
    /// `clock + 1`. Returns `None` when no round was open.
    pub fn close_round(&mut self, clock: u64) -> Option<bool> {
        if !self.sampling.round_open {
            return None;
        }
        self.sampling.round_open = false;
        let pass = threshold_gate(self.sampling.replies, &self.seller);
        if pass {
            self.sampling.content_due = Some(clock + 1);
        }
        Some(pass)
    }

    pub fn pending_replies(&self) -> u32 {
        self.sampling.replies
    }

    /// Handles one delivered message.
    pub fn on_receive<R: Rng + ?Sized>(
        &mut self,
        msg: &Message,
        clock: u64,
        sender_coords: Option<WayPoint>,
        ids: &mut MessageIds,
        rng: &mut R,
    ) -> Reception {
        self.contacts.record(msg.sender, clock, sender_coords);
        let mut r = Reception::default();
        match &msg.kind {
            MessageKind::Content => {
                if self.has_seen(msg.id) {
                    r.redundant = true;
                    return r;
                }
                if self.infected_at.is_none() {
                    self.infected_at = Some(clock);
                    r.newly_infected = true;
                }
                r.reply_intent = self.buyer.accept_filter.accepts(&msg.envelope);
                if self.share_decision(msg, rng) {
                    r.proxy_notice = true;
                    let mut copy = msg.clone();
                    copy.hops_travelled += 1;
                    if let HopBudget::Limited(h) = copy.kill.hops {
                        copy.kill.hops = HopBudget::Limited(h.saturating_sub(1));
                    }
                    if apply_kill(&copy, clock) {
                        self.stored.insert(copy.id, Stored { msg: copy, broadcasts: 0 });
                        r.stored = true;
                    }
                }
            }
            MessageKind::Sample => {
                if self.buyer.reply_to_samples {
                    r.reply = Some(Message {
                        id: ids.fresh(),
                        envelope: Arc::clone(&self.identity),
                        kill: KillPolicy::NEVER,
                        kind: MessageKind::SampleReply {
                            to: msg.sender,
                            factors: self.value_factors(),
                        },
                        sender: self.id,
                        hops_travelled: 0,
                        created_at: clock,
                    });
                }
            }
            MessageKind::SampleReply { to, .. } => {
                if *to == self.id && self.sampling.round_open {
                    self.sampling.replies += 1;
                    r.counted_reply = true;
                }
            }
        }
        r
    }

    /// Drops stored messages whose kill policy has run out. Returns how many.
    pub fn purge_expired(&mut self, clock: u64) -> usize {
        let before = self.stored.len();
        self.stored.retain(|_, s| apply_kill(&s.msg, clock));
        before - self.stored.len()
    }
}
