use std::collections::BTreeSet;

use mcp_core::engine::{run_with_seed, DensityMode};
use mcp_core::geo::{great_circle_distance, WayPoint};
use mcp_core::mobility::{FieldSpec, MobilityMode, PathSpec};
use mcp_core::protocol::{BroadcastMode, HopBudget};
use mcp_core::stats::DeliveryKind;
use mcp_core::{run, PeerId, Scenario, SimConfig, World};
use proptest::prelude::*;

fn path(mode: MobilityMode, sellers: u32, buyers: u32) -> PathSpec {
    let a = WayPoint::new(51.501427, -0.180414).unwrap();
    let b = WayPoint::new(51.492243, -0.178214).unwrap();
    PathSpec::new(mode, vec![a, b], sellers, buyers).unwrap()
}

#[derive(Debug, Clone)]
struct Case {
    config: SimConfig,
    scenario: Scenario,
    seed: u64,
    /// Creation time of the youngest seeded message.
    last_origin: u64,
}

fn arb_case() -> impl Strategy<Value = Case> {
    (
        (any::<bool>(), 1u32..3, 0u32..25, any::<bool>(), 0u32..20),
        (1u64..90, 0.0f64..=1.0, 0.0f64..0.5, 4.0f64..15.0, 5.0f64..20.0),
        (any::<bool>(), proptest::option::of(0u32..4), proptest::option::of(1u32..4), proptest::option::of(30u64..400)),
        any::<u64>(),
    )
        .prop_map(|(shape, rates, protocol, seed)| {
            let (irregular, sellers, buyers, with_field, field_peers) = shape;
            let (period_s, share, drop, interval_m, range_m) = rates;
            let (extended, threshold, hops, ttl) = protocol;
            let mode = if irregular { MobilityMode::Irregular } else { MobilityMode::Uniform };
            let fields = if with_field && field_peers > 0 {
                vec![FieldSpec::new(WayPoint::new(51.5, -0.179).unwrap(), 60.0, field_peers).unwrap()]
            } else {
                vec![]
            };
            let scenario = Scenario::Geographic {
                paths: vec![path(mode, sellers, buyers)],
                fields,
                beacons: vec![WayPoint::new(51.5, -0.1801).unwrap()],
            };
            let config = SimConfig {
                duration_s: 700,
                period_s,
                share_probability: share,
                drop_probability: drop,
                interval_m,
                range_m,
                mode: if extended { BroadcastMode::Extended } else { BroadcastMode::Simple },
                threshold: if extended { Some(threshold.unwrap_or(0)) } else { threshold },
                kill_hops: hops.map_or(HopBudget::Unlimited, HopBudget::Limited),
                kill_ttl_s: ttl,
                audit: true,
                density: DensityMode::AllPeers,
                ..SimConfig::default()
            };
            let last_origin = (interval_m * f64::from(sellers - 1)).ceil() as u64;
            Case { config, scenario, seed, last_origin }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants(case in arb_case()) {
        let r = run_with_seed(&case.config, &case.scenario, case.seed).unwrap();
        let again = run_with_seed(&case.config, &case.scenario, case.seed).unwrap();
        prop_assert_eq!(&r, &again);

        prop_assert_eq!(r.ticks.len() as u64, case.config.duration_s + 1);
        prop_assert!(r.ticks.windows(2).all(|w| w[0].infected <= w[1].infected && w[1].time == w[0].time + 1));

        let c = r.counters;
        prop_assert_eq!(c.delivered + c.dropped_by_fault, r.audit.len() as u64);
        prop_assert!(c.delivered <= c.total_sent() * u64::from(r.total_peers - 1));
        prop_assert_eq!(r.contact_totals.iter().sum::<u64>(), c.delivered);
        prop_assert!(r.audit.iter().all(|d| d.distance_m.unwrap() <= case.config.range_m && d.from != d.to));

        if let HopBudget::Limited(h) = case.config.kill_hops {
            let deepest = r.audit.iter().filter(|d| d.kind == DeliveryKind::Content).map(|d| d.depth).max();
            prop_assert!(deepest.is_none_or(|d| d <= h.max(1)));
        }
        if let Some(ttl) = case.config.kill_ttl_s {
            prop_assert!(r.last_content_sent.is_none_or(|t| t < case.last_origin + ttl));
        }

        let infected: BTreeSet<PeerId> = r.infected_set();
        prop_assert_eq!(infected.len() as u32, r.final_infected());
        for d in r.audit.iter().filter(|d| d.kind == DeliveryKind::Content && !d.dropped) {
            prop_assert!(infected.contains(&d.to));
            prop_assert!(r.infection_times[d.to.index()].unwrap() <= d.tick);
        }
    }
}

#[test]
fn stepping_by_hand_matches_run() {
    let config = SimConfig { duration_s: 500, share_probability: 0.5, ..SimConfig::default() };
    let scenario = Scenario::paths(vec![path(MobilityMode::Irregular, 1, 40)]);
    let mut w = World::new(&config, &scenario, config.seed).unwrap();
    let mut clock = 0;
    while !w.is_done() {
        assert_eq!(w.clock(), clock);
        w.step();
        clock += 1;
        assert!(w.active_count() <= w.peer_count());
    }
    assert_eq!(clock, 501);
    assert_eq!(w.finish(), run(&config, &scenario).unwrap());
}

#[test]
fn positions_stay_on_the_path() {
    let config = SimConfig { duration_s: 1200, record_tracks: true, ..SimConfig::default() };
    let p = path(MobilityMode::Irregular, 1, 20);
    let (a, b) = (p.line.start(), p.line.end());
    let len = great_circle_distance(&a, &b);
    let r = run(&config, &Scenario::paths(vec![p])).unwrap();
    for track in &r.tracks {
        for (_, q) in &track.points {
            let along = great_circle_distance(&a, q) + great_circle_distance(q, &b);
            assert!(along - len < 0.5, "{along} vs {len}");
        }
    }
}
