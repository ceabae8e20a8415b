//! Map files: one path, beacon or field per line.
//!
//! ```text
//! # index, mode, start | end, sellers, buyers
//! 1 U (51.501427,-0.180414) | (51.492243,-0.178214) S 1 C 80 |
//! I (51.5, -0.18) | (51.5, -0.17) | (51.49, -0.17) S 0 B 20
//! BEACON (51.4960, -0.1790)
//! FIELD (51.4900, -0.1900) 300 101
//! ```
//!
//! `B` and `C` both introduce the buyer count. A path may list more than two
//! points to form a polyline.

use mcp_core::geo::WayPoint;
use mcp_core::mobility::{FieldSpec, MobilityMode, PathSpec};
use mcp_core::Scenario;

use crate::ParseError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapFile {
    pub paths: Vec<PathSpec>,
    pub beacons: Vec<WayPoint>,
    pub fields: Vec<FieldSpec>,
}

impl MapFile {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty() && self.beacons.is_empty() && self.fields.is_empty()
    }

    pub fn into_scenario(self) -> Scenario {
        Scenario::Geographic {
            paths: self.paths,
            fields: self.fields,
            beacons: self.beacons,
        }
    }
}

fn tokenize(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = line.trim_start();
    while let Some(c) = rest.chars().next() {
        let end = match c {
            '(' => rest.find(')').map_or(rest.len(), |i| i + 1),
            '|' => 1,
            _ => rest
                .find(|c: char| c.is_whitespace() || c == '(' || c == '|')
                .unwrap_or(rest.len()),
        };
        out.push(&rest[..end]);
        rest = rest[end..].trim_start();
    }
    out
}

struct Line<'a> {
    number: usize,
    tokens: Vec<&'a str>,
    pos: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Result<&'a str, ParseError> {
        let t = self
            .peek()
            .ok_or_else(|| ParseError::new(self.number, self.text.trim(), format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn error(&self, token: &str, message: impl Into<String>) -> ParseError {
        ParseError::new(self.number, token, message)
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        let t = self.next(&format!("`{word}`"))?;
        if t == word {
            Ok(())
        } else {
            Err(self.error(t, format!("expected `{word}`")))
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let t = self.next(what)?;
        t.parse().map_err(|_| self.error(t, format!("expected {what}")))
    }

    fn point(&mut self) -> Result<WayPoint, ParseError> {
        let t = self.next("a point `(lat, lon)`")?;
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| self.error(t, "expected a point `(lat, lon)`"))?;
        let (lat, lon) = inner
            .split_once(',')
            .ok_or_else(|| self.error(t, "expected `lat, lon`"))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| self.error(t, "bad coordinate"));
        WayPoint::new(parse(lat)?, parse(lon)?).map_err(|e| self.error(t, e.to_string()))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(t, "unexpected token")),
        }
    }
}

pub fn parse_map(text: &str) -> Result<MapFile, ParseError> {
    let mut map = MapFile::default();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut line = Line {
            number: i + 1,
            tokens: tokenize(content),
            pos: 0,
            text: content,
        };
        match line.peek() {
            Some("BEACON") => {
                line.pos += 1;
                map.beacons.push(line.point()?);
                line.finish()?;
            }
            Some("FIELD") => {
                line.pos += 1;
                let anchor = line.point()?;
                let side: f64 = line.number("a side length in meters")?;
                let n: u32 = line.number("a peer count")?;
                let field = FieldSpec::new(anchor, side, n).map_err(|e| line.error(line.text.trim(), e.to_string()))?;
                line.finish()?;
                map.fields.push(field);
            }
            _ => map.paths.push(parse_path(&mut line)?),
        }
    }
    if map.is_empty() {
        return Err(ParseError::new(0, "", "map defines no paths, beacons or fields"));
    }
    Ok(map)
}

fn parse_path(line: &mut Line) -> Result<PathSpec, ParseError> {
    if line.peek().is_some_and(|t| t.parse::<u64>().is_ok()) {
        line.pos += 1;
    }
    let mode = match line.next("a mobility mode")? {
        "U" => MobilityMode::Uniform,
        "I" => MobilityMode::Irregular,
        t => return Err(line.error(t, "expected mobility mode `U` or `I`")),
    };
    let first = line.pos;
    let mut points = vec![line.point()?];
    while line.peek() == Some("|") {
        line.pos += 1;
        points.push(line.point()?);
    }
    if points.len() < 2 {
        let t = line.peek().unwrap_or("");
        return Err(line.error(t, "expected `|` and an end point"));
    }
    let span = line.tokens[first..line.pos].join(" ");
    line.keyword("S")?;
    let sellers: u32 = line.number("a seller count")?;
    match line.next("`B` or `C`")? {
        "B" | "C" => {}
        t => return Err(line.error(t, "expected `B` or `C`")),
    }
    let buyers: u32 = line.number("a buyer count")?;
    if line.peek() == Some("|") {
        line.pos += 1;
    }
    line.finish()?;
    PathSpec::new(mode, points, sellers, buyers).map_err(|e| line.error(&span, e.to_string()))
}
