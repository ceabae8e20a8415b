//! KML 2.2 track documents.
//!
//! Each peer gets a track Placemark styled by whether it ended up infected,
//! and each infection gets a Point Placemark stamped with its time.
//! Coordinates are written `lon,lat`.

use std::fmt::Write;

use chrono::{DateTime, SecondsFormat};
use mcp_core::geo::WayPoint;
use mcp_core::stats::Track;
use mcp_core::RunResult;
use quick_xml::escape::escape;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KmlError {
    #[error("empty track log")]
    EmptyTrackLog,
    #[error("time {0} is outside the representable range")]
    Time(i64),
}

fn coord(out: &mut String, p: &WayPoint) {
    write!(out, "{},{}", p.lon(), p.lat()).unwrap();
}

/// RFC 3339 time of tick `t` for a run that started at `start_epoch_s`.
pub fn timestamp(start_epoch_s: i64, t: u64) -> Result<String, KmlError> {
    let s = i64::try_from(t).ok().and_then(|t| start_epoch_s.checked_add(t)).ok_or(KmlError::Time(start_epoch_s))?;
    DateTime::from_timestamp(s, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .ok_or(KmlError::Time(s))
}

fn position_at(track: &Track, t: u64) -> Option<WayPoint> {
    let i = track.points.partition_point(|&(time, _)| time <= t);
    i.checked_sub(1).map(|i| track.points[i].1)
}

/// KML for the recorded tracks of `r`; tick `t` maps to `start_epoch_s + t`.
pub fn emit_kml(r: &RunResult, start_epoch_s: i64) -> Result<String, KmlError> {
    if r.tracks.iter().all(|t| t.points.is_empty()) {
        return Err(KmlError::EmptyTrackLog);
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n<Document>\n");
    writeln!(out, "<name>mcp run seed {}</name>", r.seed).unwrap();
    for (id, color) in [("infected", "ff0000ff"), ("clean", "ffff0000")] {
        writeln!(
            out,
            "<Style id=\"{id}\"><LineStyle><color>{color}</color><width>2</width></LineStyle>\
             <IconStyle><color>{color}</color></IconStyle></Style>"
        )
        .unwrap();
    }
    out.push_str("<Folder>\n<name>tracks</name>\n");
    for track in r.tracks.iter().filter(|t| !t.points.is_empty()) {
        let label = r.labels[track.peer.index()];
        let style = if r.infection_times[track.peer.index()].is_some() { "infected" } else { "clean" };
        write!(out, "<Placemark><name>{}</name><styleUrl>#{style}</styleUrl>", escape(format!("peer {label}"))).unwrap();
        if let [(_, p)] = track.points.as_slice() {
            out.push_str("<Point><coordinates>");
            coord(&mut out, p);
            out.push_str("</coordinates></Point>");
        } else {
            out.push_str("<LineString><tessellate>1</tessellate><coordinates>");
            for (i, (_, p)) in track.points.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                coord(&mut out, p);
            }
            out.push_str("</coordinates></LineString>");
        }
        out.push_str("</Placemark>\n");
    }
    out.push_str("</Folder>\n<Folder>\n<name>infections</name>\n");
    for track in &r.tracks {
        let Some(t) = r.infection_times[track.peer.index()] else { continue };
        let Some(p) = position_at(track, t) else { continue };
        let label = r.labels[track.peer.index()];
        write!(
            out,
            "<Placemark><name>peer {label} infected</name><TimeStamp><when>{}</when></TimeStamp>\
             <styleUrl>#infected</styleUrl><Point><coordinates>",
            timestamp(start_epoch_s, t)?
        )
        .unwrap();
        coord(&mut out, &p);
        out.push_str("</coordinates></Point></Placemark>\n");
    }
    out.push_str("</Folder>\n</Document>\n</kml>\n");
    Ok(out)
}
