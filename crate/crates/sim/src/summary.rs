//! Plain-text stats block printed after a run.

use std::fmt::Write;

use mcp_core::{Aggregate, RunResult};

fn time(t: Option<u64>) -> String {
    t.map_or_else(|| "never".to_string(), |t| t.to_string())
}

pub fn run_block(k: usize, r: &RunResult) -> String {
    let mut out = String::new();
    let c = &r.counters;
    let cfg = &r.config;
    writeln!(out, "STATS (run {k}, seed {})", r.seed).unwrap();
    writeln!(out, "Duration: {} seconds", r.ticks.last().map_or(0, |t| t.time)).unwrap();
    writeln!(out, "Number of Nodes: {}", r.total_peers).unwrap();
    writeln!(out, "Range: {} meters", cfg.range_m).unwrap();
    writeln!(out, "Period: {} seconds", cfg.period_s).unwrap();
    writeln!(out, "Sharing Probability {}", 100.0 * cfg.share_probability).unwrap();
    writeln!(out, "Nodes who got the content {}%", round2(100.0 * r.final_fraction())).unwrap();
    writeln!(out, "Last Message Sent {}", time(r.last_content_sent)).unwrap();
    writeln!(out, "Last Message Received {}", time(r.last_content_received)).unwrap();
    writeln!(out, "Total Messages Sent {}", c.total_sent()).unwrap();
    writeln!(out, "Total Messages Received {}", c.content_received).unwrap();
    out
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn aggregate_block(a: &Aggregate) -> String {
    let mut out = String::new();
    writeln!(out, "AGGREGATE ({} runs)", a.runs).unwrap();
    for (name, s) in &a.totals {
        writeln!(out, "{name}: mean {} std {}", round2(s.mean), round2(s.std)).unwrap();
    }
    out
}
