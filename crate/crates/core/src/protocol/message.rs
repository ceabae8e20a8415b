use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("negative {0} amount")]
    NegativeAmount(&'static str),
    #[error("invalid decimal amount {0:?}")]
    BadAmount(String),
    #[error("period must be at least one second")]
    Period,
    #[error("probability {0} outside [0, 1]")]
    Probability(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PeerId(pub u32);

impl PeerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u64);

/// Hands out fresh message ids.
#[derive(Debug, Clone, Default)]
pub struct MessageIds {
    next: u64,
}

impl MessageIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> MessageId {
        let id = MessageId(self.next);
        self.next += 1;
        id
    }
}

/// Fixed-point decimal, `units / 10^scale`, kept exactly as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Amount {
    pub units: i64,
    pub scale: u8,
}

impl Amount {
    pub const ZERO: Amount = Amount { units: 0, scale: 0 };

    pub fn new(units: i64, scale: u8) -> Self {
        Self { units, scale }
    }

    pub fn is_negative(&self) -> bool {
        self.units < 0
    }

    fn scaled(&self, scale: u8) -> i128 {
        i128::from(self.units) * 10i128.pow(u32::from(scale - self.scale))
    }
}

impl PartialOrd for Amount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Amount {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        self.scaled(scale).cmp(&other.scaled(scale))
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.units < 0 { "-" } else { "" };
        let abs = self.units.unsigned_abs();
        if self.scale == 0 {
            return write!(f, "{sign}{abs}");
        }
        let div = 10u64.pow(u32::from(self.scale));
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / div,
            abs % div,
            width = usize::from(self.scale)
        )
    }
}

impl FromStr for Amount {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProtocolError::BadAmount(String::from(s));
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let mut units: i64 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add(i64::from(b - b'0')))
                .ok_or_else(bad)?;
        }
        Ok(Amount {
            units: if neg { -units } else { units },
            scale: frac.len() as u8,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncentiveKind {
    Altruistic,
    Payment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incentive {
    pub kind: IncentiveKind,
    pub amount: Amount,
    pub currency: String,
}

impl Incentive {
    pub fn altruistic() -> Self {
        Self {
            kind: IncentiveKind::Altruistic,
            amount: Amount::ZERO,
            currency: String::new(),
        }
    }

    pub fn payment(amount: Amount, currency: &str) -> Self {
        Self {
            kind: IncentiveKind::Payment,
            amount,
            currency: String::from(currency),
        }
    }
}

/// Contact details of the peer that created a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Originator {
    pub peer: PeerId,
    /// Device identifier (IMEI or another unique id).
    pub imei: String,
    pub phone: Option<String>,
    pub email: Option<String>,
}

impl Originator {
    pub fn anonymous(peer: PeerId) -> Self {
        Self {
            peer,
            imei: alloc::format!("peer-{}", peer.0),
            phone: None,
            email: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaleItem {
    pub descript: String,
    pub price: Amount,
    pub expires: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    pub content: String,
    pub declared_size: u32,
    pub item: Option<SaleItem>,
}

impl Payload {
    pub fn text(content: &str) -> Self {
        Self {
            content: String::from(content),
            declared_size: content.len() as u32,
            item: None,
        }
    }
}

/// The parts of a message that never change as it is forwarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub originator: Originator,
    pub payload: Payload,
    pub incentive: Incentive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopBudget {
    Limited(u32),
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expiry {
    At(u64),
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KillPolicy {
    pub hops: HopBudget,
    pub expires: Expiry,
}

impl KillPolicy {
    pub const NEVER: KillPolicy = KillPolicy {
        hops: HopBudget::Unlimited,
        expires: Expiry::Never,
    };
}

/// What a sample reply reports about the replying peer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PeerValueFactors {
    pub contacts_seen: u32,
    pub distance_traveled_m: f64,
    pub ratings_received: u32,
    pub transactions_done: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    Content,
    /// Density probe sent before content in extended mode.
    Sample,
    SampleReply {
        to: PeerId,
        factors: PeerValueFactors,
    },
}

impl MessageKind {
    pub fn is_content(&self) -> bool {
        matches!(self, MessageKind::Content)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub envelope: Arc<Envelope>,
    pub kill: KillPolicy,
    pub kind: MessageKind,
    /// Immediate broadcaster; rewritten at every hop.
    pub sender: PeerId,
    /// Stores by proxies so far; 0 on the originator's own broadcasts.
    pub hops_travelled: u32,
    pub created_at: u64,
}

impl Message {
    pub fn originator(&self) -> PeerId {
        self.envelope.originator.peer
    }
}

/// Builds a fresh content message whose first sender is its originator.
pub fn make_message(
    ids: &mut MessageIds,
    originator: Originator,
    payload: Payload,
    incentive: Incentive,
    kill: KillPolicy,
    created_at: u64,
) -> Result<Message, ProtocolError> {
    if incentive.amount.is_negative() {
        return Err(ProtocolError::NegativeAmount("payment"));
    }
    if payload.item.as_ref().is_some_and(|item| item.price.is_negative()) {
        return Err(ProtocolError::NegativeAmount("price"));
    }
    let sender = originator.peer;
    Ok(Message {
        id: ids.fresh(),
        envelope: Arc::new(Envelope {
            originator,
            payload,
            incentive,
        }),
        kill,
        kind: MessageKind::Content,
        sender,
        hops_travelled: 0,
        created_at,
    })
}

/// Whether the kill policy still allows the message to be broadcast.
pub fn apply_kill(msg: &Message, clock: u64) -> bool {
    let hops_ok = match msg.kill.hops {
        HopBudget::Limited(h) => h > 0,
        HopBudget::Unlimited => true,
    };
    let time_ok = match msg.kill.expires {
        Expiry::At(t) => clock < t,
        Expiry::Never => true,
    };
    hops_ok && time_ok
}

/// Weighted sum of the value factors. Weights are
/// `[contacts, distance, ratings, transactions]`.
pub fn peer_value(f: &PeerValueFactors, weights: [f64; 4]) -> f64 {
    weights[0] * f64::from(f.contacts_seen)
        + weights[1] * f.distance_traveled_m
        + weights[2] * f64::from(f.ratings_received)
        + weights[3] * f64::from(f.transactions_done)
}

pub const DEFAULT_VALUE_WEIGHTS: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Restricts which content a buyer is willing to carry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AcceptFilter {
    pub originators: Option<Vec<PeerId>>,
    pub min_payment: Option<Amount>,
    pub item_tag: Option<String>,
}

impl AcceptFilter {
    pub fn accepts(&self, envelope: &Envelope) -> bool {
        if let Some(origins) = &self.originators {
            if !origins.contains(&envelope.originator.peer) {
                return false;
            }
        }
        if let Some(min) = self.min_payment {
            if envelope.incentive.kind != IncentiveKind::Payment || envelope.incentive.amount < min {
                return false;
            }
        }
        if let Some(tag) = &self.item_tag {
            match &envelope.payload.item {
                Some(item) if item.descript == *tag => {}
                _ => return false,
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    pub(crate) fn figure_sixteen(ids: &mut MessageIds) -> Result<Message, ProtocolError> {
        make_message(
            ids,
            Originator {
                peer: PeerId(0),
                imei: "ABCDEF123456789".into(),
                phone: Some("+440123456789".into()),
                email: Some("student@doc.ic.ac.uk".into()),
            },
            Payload {
                content: String::new(),
                declared_size: 0,
                item: Some(SaleItem {
                    descript: "ifony".into(),
                    price: "300.00".parse().unwrap(),
                    expires: "14/06/07".into(),
                }),
            },
            Incentive::payment("0.10".parse().unwrap(), "GBP"),
            KillPolicy {
                hops: HopBudget::Limited(2),
                expires: Expiry::Never,
            },
            0,
        )
    }

    #[test]
    fn sale_message_fields() {
        let mut ids = MessageIds::new();
        let m = figure_sixteen(&mut ids).unwrap();
        assert_eq!(m.kill.hops, HopBudget::Limited(2));
        assert_eq!(m.envelope.incentive.kind, IncentiveKind::Payment);
        assert_eq!(m.envelope.incentive.amount, Amount::new(10, 2));
        assert_eq!(m.envelope.incentive.currency, "GBP");
        assert_eq!(m.sender, PeerId(0));
        assert_eq!(m.kind, MessageKind::Content);
        let again = figure_sixteen(&mut ids).unwrap();
        assert_ne!(m.id, again.id);
    }

    #[test]
    fn negative_payment_rejected() {
        let mut ids = MessageIds::new();
        let err = make_message(
            &mut ids,
            Originator::anonymous(PeerId(1)),
            Payload::default(),
            Incentive::payment("-1.00".parse().unwrap(), "GBP"),
            KillPolicy::NEVER,
            0,
        );
        assert_eq!(err, Err(ProtocolError::NegativeAmount("payment")));
    }

    #[test]
    fn empty_payload_is_valid_and_immortal() {
        let mut ids = MessageIds::new();
        let m = make_message(
            &mut ids,
            Originator::anonymous(PeerId(1)),
            Payload::default(),
            Incentive::altruistic(),
            KillPolicy::NEVER,
            0,
        )
        .unwrap();
        assert_eq!(m.envelope.payload.declared_size, 0);
        assert!(apply_kill(&m, 0));
        assert!(apply_kill(&m, u64::MAX));
    }

    #[test]
    fn kill_rules() {
        let mut ids = MessageIds::new();
        let mut m = figure_sixteen(&mut ids).unwrap();
        m.kill.hops = HopBudget::Limited(0);
        assert!(!apply_kill(&m, 0));
        m.kill = KillPolicy { hops: HopBudget::Limited(1), expires: Expiry::At(600) };
        assert!(apply_kill(&m, 599));
        assert!(!apply_kill(&m, 600));
    }

    #[test]
    fn value_weights() {
        let zero = PeerValueFactors::default();
        assert_eq!(peer_value(&zero, [1.0, 2.0, 3.0, 4.0]), 0.0);
        let seven = PeerValueFactors { contacts_seen: 7, ..zero };
        assert_eq!(peer_value(&seven, DEFAULT_VALUE_WEIGHTS), 7.0);
        let f = PeerValueFactors {
            contacts_seen: 3,
            distance_traveled_m: 1000.0,
            ratings_received: 2,
            transactions_done: 1,
        };
        assert_eq!(peer_value(&f, [1.0, 0.001, 2.0, 5.0]), 13.0);
    }

    #[test]
    fn amounts() {
        let a: Amount = "0.10".parse().unwrap();
        assert_eq!(a.to_string(), "0.10");
        assert_eq!("300.00".parse::<Amount>().unwrap().to_string(), "300.00");
        assert_eq!("-2.5".parse::<Amount>().unwrap().to_string(), "-2.5");
        assert_eq!("7".parse::<Amount>().unwrap().to_string(), "7");
        assert!("0.1".parse::<Amount>().unwrap() == "0.10".parse::<Amount>().unwrap().max(Amount::new(1, 1)));
        assert!("0.09".parse::<Amount>().unwrap() < a);
        assert!("abc".parse::<Amount>().is_err());
        assert!(".5".parse::<Amount>().is_err());
    }

    #[test]
    fn accept_filter() {
        let mut ids = MessageIds::new();
        let m = figure_sixteen(&mut ids).unwrap();
        assert!(AcceptFilter::default().accepts(&m.envelope));
        let only_other = AcceptFilter { originators: Some(alloc::vec![PeerId(9)]), ..Default::default() };
        assert!(!only_other.accepts(&m.envelope));
        let cheap = AcceptFilter { min_payment: Some("0.05".parse().unwrap()), ..Default::default() };
        assert!(cheap.accepts(&m.envelope));
        let costly = AcceptFilter { min_payment: Some("1".parse().unwrap()), ..Default::default() };
        assert!(!costly.accepts(&m.envelope));
        let tagged = AcceptFilter { item_tag: Some("ifony".to_string()), ..Default::default() };
        assert!(tagged.accepts(&m.envelope));
    }
}
