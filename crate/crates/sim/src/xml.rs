//! Human-readable XML form of a message, for debugging.
//!
//! Element names follow the four-tag message layout (originator, payload,
//! incentive, kill); names that would need spaces use hyphens instead
//! (`IMEI-number`, `phone-number`). The mapping is lossless.

use std::fmt::Write;
use std::sync::Arc;

use mcp_core::protocol::{
    Amount, Envelope, Expiry, HopBudget, Incentive, IncentiveKind, KillPolicy, Message, MessageId, MessageKind, Originator,
    Payload, PeerId, PeerValueFactors, SaleItem,
};
use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;

#[derive(Debug, thiserror::Error)]
pub enum XmlError {
    #[error(transparent)]
    Syntax(#[from] quick_xml::Error),
    #[error("missing <{0}>")]
    Missing(String),
    #[error("bad value {value:?} in <{element}>")]
    Value { element: String, value: String },
}

fn leaf(out: &mut String, name: &str, value: &str) {
    write!(out, "<{name}>{}</{name}>", escape(value)).unwrap();
}

pub fn to_xml(m: &Message) -> String {
    let e = &m.envelope;
    let mut out = String::new();
    let kind = match m.kind {
        MessageKind::Content => "content",
        MessageKind::Sample => "sample",
        MessageKind::SampleReply { .. } => "reply",
    };
    writeln!(
        out,
        "<message id=\"{}\" kind=\"{kind}\" sender=\"{}\" hops-travelled=\"{}\" created=\"{}\">",
        m.id.0, m.sender.0, m.hops_travelled, m.created_at
    )
    .unwrap();
    write!(out, "  <originator peer=\"{}\">", e.originator.peer.0).unwrap();
    leaf(&mut out, "IMEI-number", &e.originator.imei);
    if let Some(p) = &e.originator.phone {
        leaf(&mut out, "phone-number", p);
    }
    if let Some(p) = &e.originator.email {
        leaf(&mut out, "email", p);
    }
    out.push_str("</originator>\n");
    write!(out, "  <payload size=\"{}\">", e.payload.declared_size).unwrap();
    leaf(&mut out, "content", &e.payload.content);
    if let Some(item) = &e.payload.item {
        out.push_str("<selling><item>");
        leaf(&mut out, "descript", &item.descript);
        leaf(&mut out, "price", &item.price.to_string());
        leaf(&mut out, "expires", &item.expires);
        out.push_str("</item></selling>");
    }
    out.push_str("</payload>\n");
    let kind = match e.incentive.kind {
        IncentiveKind::Altruistic => "altruistic",
        IncentiveKind::Payment => "payment",
    };
    write!(out, "  <incentive kind=\"{kind}\">").unwrap();
    leaf(&mut out, "payment", &e.incentive.amount.to_string());
    leaf(&mut out, "currency", &e.incentive.currency);
    out.push_str("</incentive>\n  <kill>");
    let hops = match m.kill.hops {
        HopBudget::Limited(h) => h.to_string(),
        HopBudget::Unlimited => "inf".to_string(),
    };
    leaf(&mut out, "hopcount", &hops);
    leaf(&mut out, "hopsexpire", "");
    let date = match m.kill.expires {
        Expiry::At(t) => t.to_string(),
        Expiry::Never => String::new(),
    };
    leaf(&mut out, "date", &date);
    out.push_str("</kill>\n");
    if let MessageKind::SampleReply { to, factors } = &m.kind {
        writeln!(
            out,
            "  <reply to=\"{}\" contacts=\"{}\" distance=\"{}\" ratings=\"{}\" transactions=\"{}\"/>",
            to.0, factors.contacts_seen, factors.distance_traveled_m, factors.ratings_received, factors.transactions_done
        )
        .unwrap();
    }
    out.push_str("</message>\n");
    out
}

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    text: String,
    children: Vec<Element>,
}

impl Element {
    fn child(&self, name: &str) -> Result<&Element, XmlError> {
        self.find(name).ok_or_else(|| XmlError::Missing(name.to_string()))
    }

    fn find(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }

    fn attr(&self, name: &str) -> Result<&str, XmlError> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| XmlError::Missing(format!("{} {name}=", self.name)))
    }

    fn parse<T: std::str::FromStr>(&self, element: &str, value: &str) -> Result<T, XmlError> {
        value.parse().map_err(|_| XmlError::Value { element: element.to_string(), value: value.to_string() })
    }

    fn num<T: std::str::FromStr>(&self, attr: &str) -> Result<T, XmlError> {
        self.parse(&self.name, self.attr(attr)?)
    }

    fn text_of(&self, name: &str) -> Result<&str, XmlError> {
        Ok(self.child(name)?.text.as_str())
    }
}

fn open(e: &quick_xml::events::BytesStart) -> Result<Element, XmlError> {
    let mut el = Element {
        name: String::from_utf8_lossy(e.name().as_ref()).into_owned(),
        ..Element::default()
    };
    for a in e.attributes() {
        let a = a.map_err(quick_xml::Error::from)?;
        el.attrs.push((String::from_utf8_lossy(a.key.as_ref()).into_owned(), a.unescape_value()?.into_owned()));
    }
    Ok(el)
}

fn parse_tree(text: &str) -> Result<Element, XmlError> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = vec![Element::default()];
    loop {
        match reader.read_event()? {
            Event::Start(e) => stack.push(open(&e)?),
            Event::Empty(e) => {
                let el = open(&e)?;
                stack.last_mut().expect("root").children.push(el);
            }
            Event::Text(t) => stack.last_mut().expect("root").text.push_str(&t.unescape()?),
            Event::End(_) => {
                let el = stack.pop().expect("balanced by reader");
                stack.last_mut().ok_or_else(|| XmlError::Missing("message".into()))?.children.push(el);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    let mut root = stack.pop().expect("root");
    root.children.pop().ok_or_else(|| XmlError::Missing("message".into()))
}

pub fn from_xml(text: &str) -> Result<Message, XmlError> {
    let m = parse_tree(text)?;
    if m.name != "message" {
        return Err(XmlError::Missing("message".into()));
    }
    let o = m.child("originator")?;
    let originator = Originator {
        peer: PeerId(o.num("peer")?),
        imei: o.text_of("IMEI-number")?.to_string(),
        phone: o.find("phone-number").map(|e| e.text.clone()),
        email: o.find("email").map(|e| e.text.clone()),
    };
    let p = m.child("payload")?;
    let item = match p.find("selling") {
        Some(s) => {
            let i = s.child("item")?;
            Some(SaleItem {
                descript: i.text_of("descript")?.to_string(),
                price: i.parse("price", i.text_of("price")?)?,
                expires: i.text_of("expires")?.to_string(),
            })
        }
        None => None,
    };
    let payload = Payload {
        content: p.text_of("content")?.to_string(),
        declared_size: p.num("size")?,
        item,
    };
    let inc = m.child("incentive")?;
    let kind = match inc.attr("kind")? {
        "altruistic" => IncentiveKind::Altruistic,
        "payment" => IncentiveKind::Payment,
        v => return Err(XmlError::Value { element: "incentive".into(), value: v.into() }),
    };
    let amount: Amount = inc.parse("payment", inc.text_of("payment")?)?;
    let incentive = Incentive { kind, amount, currency: inc.text_of("currency")?.to_string() };
    let k = m.child("kill")?;
    let hops = match k.text_of("hopcount")? {
        "inf" => HopBudget::Unlimited,
        v => HopBudget::Limited(k.parse("hopcount", v)?),
    };
    let expires = match k.text_of("date")? {
        "" => Expiry::Never,
        v => Expiry::At(k.parse("date", v)?),
    };
    let kind = match m.attr("kind")? {
        "content" => MessageKind::Content,
        "sample" => MessageKind::Sample,
        "reply" => {
            let r = m.child("reply")?;
            MessageKind::SampleReply {
                to: PeerId(r.num("to")?),
                factors: PeerValueFactors {
                    contacts_seen: r.num("contacts")?,
                    distance_traveled_m: r.num("distance")?,
                    ratings_received: r.num("ratings")?,
                    transactions_done: r.num("transactions")?,
                },
            }
        }
        v => return Err(XmlError::Value { element: "message".into(), value: v.into() }),
    };
    Ok(Message {
        id: MessageId(m.num("id")?),
        envelope: Arc::new(Envelope { originator, payload, incentive }),
        kill: KillPolicy { hops, expires },
        kind,
        sender: PeerId(m.num("sender")?),
        hops_travelled: m.num("hops-travelled")?,
        created_at: m.num("created")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mcp_core::protocol::{make_message, MessageIds};
    use proptest::prelude::*;

    fn sale() -> Message {
        let mut ids = MessageIds::new();
        let originator = Originator {
            peer: PeerId(0),
            imei: "ABCDEF123456789".into(),
            phone: Some("+440123456789".into()),
            email: Some("student@doc.ic.ac.uk".into()),
        };
        let payload = Payload {
            content: "ifony for sale".into(),
            declared_size: 14,
            item: Some(SaleItem { descript: "ifony".into(), price: "300.00".parse().unwrap(), expires: "14/06/07".into() }),
        };
        let kill = KillPolicy { hops: HopBudget::Limited(2), expires: Expiry::Never };
        make_message(&mut ids, originator, payload, Incentive::payment("0.10".parse().unwrap(), "GBP"), kill, 0).unwrap()
    }

    #[test]
    fn sale_message_round_trip() {
        let m = sale();
        let xml = to_xml(&m);
        assert!(xml.contains("<IMEI-number>ABCDEF123456789</IMEI-number>"));
        assert!(xml.contains("<payment>0.10</payment><currency>GBP</currency>"));
        assert!(xml.contains("<hopcount>2</hopcount>"));
        assert!(xml.contains("<price>300.00</price>"));
        assert_eq!(from_xml(&xml).unwrap(), m);
    }

    #[test]
    fn rejects_malformed() {
        assert!(from_xml("<message>").is_err());
        assert!(from_xml("<other/>").is_err());
        let xml = to_xml(&sale()).replace("<hopcount>2</hopcount>", "<hopcount>two</hopcount>");
        assert!(matches!(from_xml(&xml), Err(XmlError::Value { .. })));
    }

    fn text() -> impl Strategy<Value = String> {
        "[ -~éü<>&\"']{0,24}"
    }

    proptest! {
        #[test]
        fn round_trip(
            id in any::<u64>(), sender in any::<u32>(), hops in any::<u32>(), created in any::<u64>(),
            imei in text(), phone in proptest::option::of(text()), content in text(), size in any::<u32>(),
            units in -1_000_000i64..1_000_000, scale in 0u8..4, budget in proptest::option::of(any::<u32>()),
            expiry in proptest::option::of(any::<u64>()), reply in proptest::option::of((any::<u32>(), any::<u32>(), 0.0f64..1e6)),
        ) {
            let kind = match reply {
                Some((to, contacts, distance)) => MessageKind::SampleReply {
                    to: PeerId(to),
                    factors: PeerValueFactors { contacts_seen: contacts, distance_traveled_m: distance, ratings_received: 1, transactions_done: 2 },
                },
                None => MessageKind::Content,
            };
            let m = Message {
                id: MessageId(id),
                envelope: Arc::new(Envelope {
                    originator: Originator { peer: PeerId(sender / 2), imei, phone, email: None },
                    payload: Payload { content, declared_size: size, item: None },
                    incentive: Incentive { kind: IncentiveKind::Payment, amount: Amount::new(units, scale), currency: "EUR".into() },
                }),
                kill: KillPolicy {
                    hops: budget.map_or(HopBudget::Unlimited, HopBudget::Limited),
                    expires: expiry.map_or(Expiry::Never, Expiry::At),
                },
                kind,
                sender: PeerId(sender),
                hops_travelled: hops,
                created_at: created,
            };
            prop_assert_eq!(from_xml(&to_xml(&m)).unwrap(), m);
        }
    }
}
