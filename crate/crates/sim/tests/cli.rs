use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mcp_sim::csv::read_run_csv;

const UNILINE: &str = "1 U (51.501427,-0.180414) | (51.492243,-0.178214) S 1 B 100 |\n";

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcp-sim")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn map_run_writes_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "uniline.map", UNILINE);
    let out = dir.path().join("out");
    let o = sim(&[
        "--map", &map, "--duration", "3600", "--range", "10", "--period", "60", "--share", "1.0", "--speed", "1.0",
        "--interval", "8", "--reps", "5", "--seed", "42", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.matches("Nodes who got the content 100%").count(), 5);
    assert!(stdout.contains("Number of Nodes: 101"));
    for k in 1..=5 {
        let text = fs::read_to_string(out.join(format!("run_{k}.csv"))).unwrap();
        let (rows, _) = read_run_csv(&text).unwrap();
        assert_eq!(rows.len(), 3601);
        assert_eq!(rows.last().unwrap().fraction, 1.0);
    }
    assert!(out.join("aggregate.csv").exists());
    assert!(!out.join("tracks_1.kml").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(sim(&["--map", "/nonexistent/uniline.map", "--out", out]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.map", "U (0,0) | (0,0) S 1 B 1\n");
    let o = sim(&["--map", &bad, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let map = write(dir.path(), "uniline.map", UNILINE);
    assert_eq!(sim(&["--map", &map, "--mode", "extended", "--out", out]).status.code(), Some(1));
    assert_eq!(sim(&["--map", &map, "--duration", "0", "--out", out]).status.code(), Some(1));
    assert_eq!(sim(&["--map", &map, "--share", "1.5", "--out", out]).status.code(), Some(1));
    assert_eq!(sim(&["--map", &map, "--seed-peer", "500", "--out", out]).status.code(), Some(1));
    assert_ne!(sim(&["--map", &map, "--no-such-flag", "--out", out]).status.code(), Some(0));
    assert_ne!(sim(&["--out", out]).status.code(), Some(0));
    assert_ne!(sim(&["--map", &map, "--grid", "2x2:340", "--out", out]).status.code(), Some(0));
}

#[test]
fn help_lists_flags_with_units() {
    let o = sim(&["--help"]);
    assert!(o.status.success());
    let help = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--map", "--trace", "--grid", "--field", "--duration", "--range", "--period", "--share", "--speed", "--interval",
        "--mode", "--threshold", "--drop", "--kill-hops", "--kill-ttl", "--seed-peer", "--beacons", "--reps", "--seed",
        "--out", "--kml", "--density",
    ] {
        assert!(help.contains(flag), "{flag} missing");
    }
    for unit in ["seconds", "meters", "m/s", "[0, 1]"] {
        assert!(help.contains(unit), "{unit} missing");
    }
}

#[test]
fn trace_mode() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write(dir.path(), "cam.txt", "# toy\n1 2 5 40\n2 3 50 90 E\n3 4 10 20\n");
    let out = dir.path().join("out");
    let o = sim(&[
        "--trace", &trace, "--period", "10", "--duration", "200000", "--seed-peer", "1", "--reps", "1", "--density",
        "--density-all", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (rows, _) = read_run_csv(&fs::read_to_string(out.join("run_1.csv")).unwrap()).unwrap();
    assert_eq!(rows.last().unwrap().time, 100);
    assert_eq!(rows.last().unwrap().infected, 3);
    let density = fs::read_to_string(out.join("density_1.csv")).unwrap();
    assert_eq!(density.lines().next(), Some("time,peer_1,peer_2,peer_3,peer_4"));
    assert_eq!(density.lines().nth(16), Some("15,1,1,1,1"));
    let o = sim(&["--trace", &trace, "--kml", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn grid_field_and_beacons() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let beacons = write(dir.path(), "b.map", "BEACON (51.4934, -0.1851)\nBEACON (51.4931, -0.1851)\n");
    let o = sim(&["--grid", "2x2:340", "--mobility", "irregular", "--buyers", "20", "--beacons", &beacons, "--reps", "2", "--duration", "900", "--kml", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("Number of Nodes: 163"));
    assert!(Path::new(out).join("tracks_2.kml").exists());
    let o = sim(&["--field", "300:101", "--period", "1", "--share", "0.5", "--reps", "1", "--duration", "600", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = write(dir.path(), "notbeacons.map", UNILINE);
    assert_eq!(sim(&["--grid", "2x2:340", "--beacons", &bad, "--out", out]).status.code(), Some(2));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "uniline.map", UNILINE);
    let runs: Vec<_> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("out{k}"));
            let o = sim(&["--map", &map, "--share", "0.6", "--drop", "0.1", "--mobility", "irregular", "--reps", "3", "--kml", "--out", out.to_str().unwrap()]);
            assert!(o.status.success());
            out
        })
        .collect();
    for name in ["run_1.csv", "run_2.csv", "run_3.csv", "aggregate.csv", "tracks_3.kml"] {
        assert_eq!(fs::read(runs[0].join(name)).unwrap(), fs::read(runs[1].join(name)).unwrap(), "{name}");
    }
}
