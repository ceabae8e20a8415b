//! Compact flat binary form of [`Message`], little-endian throughout.
//!
//! Layout: kind tag, id, sender, hops travelled, created-at, kill policy,
//! originator, payload, incentive, then the reply fields for sample
//! replies. Strings are `u32` length-prefixed UTF-8; optional fields carry
//! a presence byte.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use super::message::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated message at byte {0}")]
    Truncated(usize),
    #[error("unknown tag {tag} at byte {at}")]
    Tag { tag: u8, at: usize },
    #[error("string is not UTF-8")]
    Utf8,
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

const KIND_CONTENT: u8 = 0;
const KIND_SAMPLE: u8 = 1;
const KIND_REPLY: u8 = 2;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn opt_str(&mut self, s: &Option<String>) {
        match s {
            Some(s) => {
                self.u8(1);
                self.str(s);
            }
            None => self.u8(0),
        }
    }
    fn amount(&mut self, a: Amount) {
        self.i64(a.units);
        self.u8(a.scale);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(WireError::Truncated(self.pos))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64, WireError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn flag(&mut self) -> Result<bool, WireError> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(WireError::Tag { tag, at }),
        }
    }
    fn str(&mut self) -> Result<String, WireError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        core::str::from_utf8(bytes)
            .map(String::from)
            .map_err(|_| WireError::Utf8)
    }
    fn opt_str(&mut self) -> Result<Option<String>, WireError> {
        if self.flag()? {
            Ok(Some(self.str()?))
        } else {
            Ok(None)
        }
    }
    fn amount(&mut self) -> Result<Amount, WireError> {
        let units = self.i64()?;
        Ok(Amount::new(units, self.u8()?))
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(64));
    w.u8(match msg.kind {
        MessageKind::Content => KIND_CONTENT,
        MessageKind::Sample => KIND_SAMPLE,
        MessageKind::SampleReply { .. } => KIND_REPLY,
    });
    w.u64(msg.id.0);
    w.u32(msg.sender.0);
    w.u32(msg.hops_travelled);
    w.u64(msg.created_at);
    match msg.kill.hops {
        HopBudget::Limited(h) => {
            w.u8(1);
            w.u32(h);
        }
        HopBudget::Unlimited => w.u8(0),
    }
    match msg.kill.expires {
        Expiry::At(t) => {
            w.u8(1);
            w.u64(t);
        }
        Expiry::Never => w.u8(0),
    }
    let env = &msg.envelope;
    w.u32(env.originator.peer.0);
    w.str(&env.originator.imei);
    w.opt_str(&env.originator.phone);
    w.opt_str(&env.originator.email);
    w.str(&env.payload.content);
    w.u32(env.payload.declared_size);
    match &env.payload.item {
        Some(item) => {
            w.u8(1);
            w.str(&item.descript);
            w.amount(item.price);
            w.str(&item.expires);
        }
        None => w.u8(0),
    }
    w.u8(match env.incentive.kind {
        IncentiveKind::Altruistic => 0,
        IncentiveKind::Payment => 1,
    });
    w.amount(env.incentive.amount);
    w.str(&env.incentive.currency);
    if let MessageKind::SampleReply { to, factors } = &msg.kind {
        w.u32(to.0);
        w.u32(factors.contacts_seen);
        w.f64(factors.distance_traveled_m);
        w.u32(factors.ratings_received);
        w.u32(factors.transactions_done);
    }
    w.0
}

pub fn decode(buf: &[u8]) -> Result<Message, WireError> {
    let mut r = Reader { buf, pos: 0 };
    let kind_tag = r.u8()?;
    if kind_tag > KIND_REPLY {
        return Err(WireError::Tag { tag: kind_tag, at: 0 });
    }
    let id = MessageId(r.u64()?);
    let sender = PeerId(r.u32()?);
    let hops_travelled = r.u32()?;
    let created_at = r.u64()?;
    let hops = if r.flag()? {
        HopBudget::Limited(r.u32()?)
    } else {
        HopBudget::Unlimited
    };
    let expires = if r.flag()? {
        Expiry::At(r.u64()?)
    } else {
        Expiry::Never
    };
    let originator = Originator {
        peer: PeerId(r.u32()?),
        imei: r.str()?,
        phone: r.opt_str()?,
        email: r.opt_str()?,
    };
    let content = r.str()?;
    let declared_size = r.u32()?;
    let item = if r.flag()? {
        Some(SaleItem {
            descript: r.str()?,
            price: r.amount()?,
            expires: r.str()?,
        })
    } else {
        None
    };
    let at = r.pos;
    let incentive_kind = match r.u8()? {
        0 => IncentiveKind::Altruistic,
        1 => IncentiveKind::Payment,
        tag => return Err(WireError::Tag { tag, at }),
    };
    let amount = r.amount()?;
    let currency = r.str()?;
    let kind = match kind_tag {
        KIND_CONTENT => MessageKind::Content,
        KIND_SAMPLE => MessageKind::Sample,
        _ => MessageKind::SampleReply {
            to: PeerId(r.u32()?),
            factors: PeerValueFactors {
                contacts_seen: r.u32()?,
                distance_traveled_m: r.f64()?,
                ratings_received: r.u32()?,
                transactions_done: r.u32()?,
            },
        },
    };
    if r.pos != buf.len() {
        return Err(WireError::Trailing(buf.len() - r.pos));
    }
    Ok(Message {
        id,
        envelope: Arc::new(Envelope {
            originator,
            payload: Payload {
                content,
                declared_size,
                item,
            },
            incentive: Incentive {
                kind: incentive_kind,
                amount,
                currency,
            },
        }),
        kill: KillPolicy { hops, expires },
        kind,
        sender,
        hops_travelled,
        created_at,
    })
}
