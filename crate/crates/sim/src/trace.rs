//! Contact traces: `id_a id_b t_start t_end [flags]` per line, `#` comments.
//!
//! The optional flags column marks the device class, `I`/`internal` or
//! `E`/`external`.

use mcp_core::traces::{ContactEvent, ContactTrace, DeviceClass, TraceError};

use crate::ParseError;

pub fn parse_contacts(text: &str) -> Result<ContactTrace, ParseError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if !(4..=5).contains(&cols.len()) {
            return Err(ParseError::new(n, content.trim(), format!("expected 4 or 5 columns, found {}", cols.len())));
        }
        let id = |t: &str| t.parse::<u32>().map_err(|_| ParseError::new(n, t, "expected a peer id"));
        let time = |t: &str| t.parse::<u64>().map_err(|_| ParseError::new(n, t, "expected an integer time"));
        let mut e = ContactEvent::new(id(cols[0])?, id(cols[1])?, time(cols[2])?, time(cols[3])?).map_err(|err| {
            let token = match err {
                TraceError::SelfContact(_) => cols[1],
                TraceError::Interval { .. } => cols[3],
            };
            ParseError::new(n, token, err.to_string())
        })?;
        if let Some(&flag) = cols.get(4) {
            let class = match flag.to_ascii_lowercase().as_str() {
                "i" | "internal" => DeviceClass::Internal,
                "e" | "external" => DeviceClass::External,
                _ => return Err(ParseError::new(n, flag, "expected device class `I` or `E`")),
            };
            e = e.with_class(class);
        }
        events.push(e);
    }
    Ok(ContactTrace::new(events))
}
