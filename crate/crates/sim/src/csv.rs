//! CSV reports.
//!
//! Run files hold one row per tick followed, after a blank line, by a
//! `metric,value` table. Floats use the shortest representation that parses
//! back to the same value; absent values are empty fields.

use mcp_core::stats::{Aggregate, AggregateTick, Stat};
use mcp_core::RunResult;

pub const RUN_HEADER: [&str; 11] = [
    "time",
    "infected",
    "fraction",
    "content_sent",
    "sample_sent",
    "reply_sent",
    "delivered",
    "dropped",
    "redundant",
    "received",
    "expired",
];

/// One tick of a run file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    pub time: u64,
    pub infected: u32,
    pub fraction: f64,
    pub content_sent: u64,
    pub sample_sent: u64,
    pub reply_sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub redundant: u64,
    pub received: u64,
    pub expired: u64,
}

impl RunRow {
    fn fields(&self) -> [String; 11] {
        [
            self.time.to_string(),
            self.infected.to_string(),
            self.fraction.to_string(),
            self.content_sent.to_string(),
            self.sample_sent.to_string(),
            self.reply_sent.to_string(),
            self.delivered.to_string(),
            self.dropped.to_string(),
            self.redundant.to_string(),
            self.received.to_string(),
            self.expired.to_string(),
        ]
    }
}

pub fn run_rows(r: &RunResult) -> Vec<RunRow> {
    r.ticks
        .iter()
        .map(|t| RunRow {
            time: t.time,
            infected: t.infected,
            fraction: r.fraction(t.infected),
            content_sent: t.counters.content_sent,
            sample_sent: t.counters.sample_sent,
            reply_sent: t.counters.reply_sent,
            delivered: t.counters.delivered,
            dropped: t.counters.dropped_by_fault,
            redundant: t.counters.redundant_receipts,
            received: t.counters.content_received,
            expired: t.counters.expired_killed,
        })
        .collect()
}

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-run summary metrics, named after the simulator's stats block.
pub fn summary_metrics(r: &RunResult) -> Vec<(&'static str, String)> {
    let c = &r.counters;
    let cfg = &r.config;
    vec![
        ("nodes", r.total_peers.to_string()),
        ("range_m", cfg.range_m.to_string()),
        ("period_s", cfg.period_s.to_string()),
        ("sharing_probability", cfg.share_probability.to_string()),
        ("seed", r.seed.to_string()),
        ("percent_infected", (100.0 * r.final_fraction()).to_string()),
        ("last_message_sent", opt(r.last_content_sent)),
        ("last_message_received", opt(r.last_content_received)),
        ("total_messages_sent", c.total_sent().to_string()),
        ("total_messages_received", c.content_received.to_string()),
        ("content_sent", c.content_sent.to_string()),
        ("sample_sent", c.sample_sent.to_string()),
        ("reply_sent", c.reply_sent.to_string()),
        ("delivered", c.delivered.to_string()),
        ("dropped_by_fault", c.dropped_by_fault.to_string()),
        ("redundant_receipts", c.redundant_receipts.to_string()),
        ("expired_killed", c.expired_killed.to_string()),
        ("reply_intents", c.reply_intents.to_string()),
        ("proxy_notices", c.proxy_notices.to_string()),
    ]
}

fn table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Tick table plus summary table; a run without ticks yields the header only.
pub fn run_csv(r: &RunResult) -> String {
    let rows = run_rows(r);
    let mut out = table(&RUN_HEADER, rows.iter().map(RunRow::fields));
    if !rows.is_empty() {
        out.push('\n');
        out.push_str(&table(&["metric", "value"], summary_metrics(r).into_iter().map(|(k, v)| [k.to_string(), v])));
    }
    out
}

const AGGREGATE_COLUMNS: [&str; 8] = [
    "infected",
    "fraction",
    "content_sent",
    "sample_sent",
    "reply_sent",
    "delivered",
    "dropped",
    "redundant",
];

fn tick_stats(t: &AggregateTick) -> [Stat; 8] {
    [
        t.infected,
        t.fraction,
        t.content_sent,
        t.sample_sent,
        t.reply_sent,
        t.delivered,
        t.dropped,
        t.redundant,
    ]
}

/// Mean and standard deviation of every tick column and every total.
pub fn aggregate_csv(a: &Aggregate) -> String {
    let mut header = vec!["time".to_string()];
    for c in AGGREGATE_COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = a.ticks.iter().map(|t| {
        let mut row = vec![t.time.to_string()];
        for s in tick_stats(t) {
            row.push(s.mean.to_string());
            row.push(s.std.to_string());
        }
        row
    });
    let mut out = table(&header, rows);
    out.push('\n');
    let runs = ("runs".to_string(), a.runs.to_string(), "0".to_string());
    let totals = a
        .totals
        .iter()
        .map(|(name, s)| (name.to_string(), s.mean.to_string(), s.std.to_string()));
    out.push_str(&table(
        &["metric", "mean", "std"],
        std::iter::once(runs).chain(totals).map(|(a, b, c)| [a, b, c]),
    ));
    out
}

/// One column of neighbour counts per density series, labelled by peer.
pub fn density_csv(r: &RunResult) -> String {
    let mut header = vec!["time".to_string()];
    header.extend(r.density.iter().map(|s| format!("peer_{}", r.labels[s.peer.index()])));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = r.ticks.iter().enumerate().map(|(i, t)| {
        let mut row = vec![t.time.to_string()];
        row.extend(r.density.iter().map(|s| s.counts[i].to_string()));
        row
    });
    table(&header, rows)
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: bad {column} value `{value}`")]
    Field { row: usize, column: &'static str, value: String },
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
}

/// Parses a run file back into its tick rows and summary metrics.
pub fn read_run_csv(text: &str) -> Result<(Vec<RunRow>, Vec<(String, String)>), ReadError> {
    let (ticks, summary) = text.split_once("\n\n").unwrap_or((text, ""));
    let mut rd = csv::Reader::from_reader(ticks.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RUN_HEADER {
        return Err(ReadError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| rec.get(k).unwrap_or("");
        fn num<T: std::str::FromStr>(row: usize, column: &'static str, v: &str) -> Result<T, ReadError> {
            v.parse().map_err(|_| ReadError::Field { row, column, value: v.to_string() })
        }
        rows.push(RunRow {
            time: num(i, RUN_HEADER[0], get(0))?,
            infected: num(i, RUN_HEADER[1], get(1))?,
            fraction: num(i, RUN_HEADER[2], get(2))?,
            content_sent: num(i, RUN_HEADER[3], get(3))?,
            sample_sent: num(i, RUN_HEADER[4], get(4))?,
            reply_sent: num(i, RUN_HEADER[5], get(5))?,
            delivered: num(i, RUN_HEADER[6], get(6))?,
            dropped: num(i, RUN_HEADER[7], get(7))?,
            redundant: num(i, RUN_HEADER[8], get(8))?,
            received: num(i, RUN_HEADER[9], get(9))?,
            expired: num(i, RUN_HEADER[10], get(10))?,
        });
    }
    let mut metrics = Vec::new();
    if !summary.is_empty() {
        let mut rd = csv::Reader::from_reader(summary.as_bytes());
        for rec in rd.records() {
            let rec = rec?;
            metrics.push((rec.get(0).unwrap_or("").to_string(), rec.get(1).unwrap_or("").to_string()));
        }
    }
    Ok((rows, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mcp_core::engine::{run_replicated, DensityMode};
    use mcp_core::geo::WayPoint;
    use mcp_core::mobility::{MobilityMode, PathSpec};
    use mcp_core::{run, Scenario, SimConfig};

    fn pipe() -> Scenario {
        let a = WayPoint::new(51.501427, -0.180414).unwrap();
        let b = WayPoint::new(51.492243, -0.178214).unwrap();
        Scenario::paths(vec![PathSpec::new(MobilityMode::Uniform, vec![a, b], 1, 20).unwrap()])
    }

    #[test]
    fn one_row_per_tick() {
        let r = run(&SimConfig::default(), &pipe()).unwrap();
        let text = run_csv(&r);
        let (rows, metrics) = read_run_csv(&text).unwrap();
        assert_eq!(rows.len(), 3601);
        assert_eq!(rows, run_rows(&r));
        assert_eq!(metrics[0], ("nodes".to_string(), "21".to_string()));
        assert!(text.starts_with("time,infected,fraction,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn empty_run_is_header_only() {
        let mut r = run(&SimConfig { duration_s: 1, ..SimConfig::default() }, &pipe()).unwrap();
        r.ticks.clear();
        assert_eq!(run_csv(&r), format!("{}\n", RUN_HEADER.join(",")));
    }

    #[test]
    fn aggregate_has_mean_and_std_columns() {
        let config = SimConfig { duration_s: 300, share_probability: 0.5, ..SimConfig::default() };
        let rep = run_replicated(&config, &pipe()).unwrap();
        let text = aggregate_csv(&rep.aggregate);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("time,infected_mean,infected_std,fraction_mean,fraction_std"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 17);
        assert!(text.contains("\nmetric,mean,std\nruns,5,0\npercent_infected,"));
    }

    #[test]
    fn density_columns() {
        let config = SimConfig { duration_s: 100, density: DensityMode::SeedPeer, ..SimConfig::default() };
        let r = run(&config, &pipe()).unwrap();
        let text = density_csv(&r);
        assert_eq!(text.lines().next(), Some("time,peer_0"));
        assert_eq!(text.lines().count(), 102);
    }

    proptest::proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let row = RunRow {
                time: 1, infected: 2, fraction: x, content_sent: 3, sample_sent: 4, reply_sent: 5,
                delivered: 6, dropped: 7, redundant: 8, received: 9, expired: 10,
            };
            let text = table(&RUN_HEADER, [row.fields()]);
            let (rows, _) = read_run_csv(&text).unwrap();
            proptest::prop_assert_eq!(rows[0].fraction.to_bits(), x.to_bits());
        }
    }
}
