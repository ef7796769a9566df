use platoon_sim::engine::Simulation;
use platoon_sim::routing::Outcome;
use platoon_sim::{run_simulation, Error, IftKind, ScenarioConfig, SchedulerKind, VehicleId};

fn short(ift: IftKind, sched: SchedulerKind) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.ift.kind = ift;
    c.scheduler.kind = sched;
    c.run.duration_s = 5.0;
    c
}

/// Multiples of `period` in `[start, end)`, all in milliseconds.
fn grid_points(start: u64, end: u64, period: u64) -> u64 {
    (end - 1) / period - start.div_ceil(period) + 1
}

#[test]
fn same_seed_same_report() {
    for ift in IftKind::ALL {
        let c = short(ift, SchedulerKind::PF);
        assert_eq!(
            run_simulation(&c, 3).unwrap(),
            run_simulation(&c, 3).unwrap()
        );
    }
}

#[test]
fn different_seed_changes_lossy_run() {
    let c = short(IftKind::CarToServer, SchedulerKind::MaxCI);
    let a = run_simulation(&c, 1).unwrap();
    let b = run_simulation(&c, 2).unwrap();
    assert_ne!(a.links, b.links);
}

#[test]
fn window_counts_match_generation_grid() {
    let c = short(IftKind::OneHop, SchedulerKind::DRR);
    let r = run_simulation(&c, 4).unwrap();
    let per_source = grid_points(1000, 5000, 30);
    assert_eq!(per_source, 133);
    for l in &r.links {
        assert_eq!(l.transmitted, per_source, "{:?}", l);
        assert!(l.delivered <= l.transmitted);
    }
    assert_eq!(r.cams_generated, 5 * per_source);
}

#[test]
fn full_length_run_counts() {
    let c = ScenarioConfig::default();
    let r = run_simulation(&c, 8).unwrap();
    // 2000 CAMs per source over 60 s, 1966 of them after the warm-up.
    assert_eq!(grid_points(0, 60_000, 30), 2000);
    assert_eq!(r.cams_generated, 5 * grid_points(1000, 60_000, 30));
    assert_eq!(r.headline().transmitted, 1966);
    assert!((r.window_s - 59.0).abs() < 1e-12);
}

#[test]
fn every_platoon_member_is_a_receiver() {
    for ift in IftKind::ALL {
        let mut c = short(ift, SchedulerKind::MaxCI);
        c.platoon.count = 2;
        c.platoon.length = 4;
        let r = run_simulation(&c, 5).unwrap();
        // 4 sources x 3 receivers per platoon, never across platoons.
        assert_eq!(r.links.len(), 2 * 4 * 3, "{}", ift.as_str());
        assert!(r
            .links
            .iter()
            .all(|l| l.source.platoon == l.receiver.platoon));
    }
}

#[test]
fn trace_is_causal_and_conserves_cams() {
    for ift in IftKind::ALL {
        let c = short(ift, SchedulerKind::PF);
        let out = Simulation::new(&c, 6).unwrap().with_trace().run().unwrap();
        let mut keys = std::collections::HashSet::new();
        for rec in &out.trace {
            if let Outcome::Delivered(at) = rec.outcome {
                assert!(at > rec.generated_ns);
            }
            assert!(
                keys.insert((rec.source, rec.seq, rec.receiver)),
                "duplicate outcome"
            );
        }
        // Every CAM, warm-up included, has one outcome per other member.
        assert_eq!(out.trace.len() as u64, 5 * grid_points(0, 5000, 30) * 4);
    }
}

#[test]
fn multi_hop_hops_equal_index_distance() {
    let mut c = short(IftKind::MultiHop, SchedulerKind::DRR);
    c.channel.fading = false;
    c.radio.shadow_sigma_db = 0.0;
    let r = run_simulation(&c, 1).unwrap();
    for l in &r.links {
        assert_eq!(l.hops, u32::from(l.distance_index()));
    }
    let one = run_simulation(&short(IftKind::OneHop, SchedulerKind::DRR), 1).unwrap();
    assert!(one.links.iter().all(|l| l.hops == 1));
    let c2s = run_simulation(&short(IftKind::CarToServer, SchedulerKind::DRR), 1).unwrap();
    assert!(c2s.links.iter().all(|l| l.hops == 2));
}

#[test]
fn lossless_delays_are_slot_aligned_constants() {
    let mut c = short(IftKind::OneHop, SchedulerKind::MaxCI);
    c.channel.fading = false;
    c.radio.shadow_sigma_db = 0.0;
    let r = run_simulation(&c, 1).unwrap();
    // 1.5 ms access, then one 0.125 ms slot.
    let link = r.link(VehicleId::new(0, 0), VehicleId::new(0, 4)).unwrap();
    assert!((link.delay_ms.unwrap() - 1.625).abs() < 1e-9);
    assert_eq!(link.reception_prob, Some(1.0));
}

#[test]
fn event_cap_is_reported() {
    let mut c = short(IftKind::OneHop, SchedulerKind::MaxCI);
    c.run.max_events = 3;
    match run_simulation(&c, 1) {
        Err(Error::EventOverflow { cap, .. }) => assert_eq!(cap, 3),
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn warmup_longer_than_run_is_rejected() {
    let mut c = short(IftKind::OneHop, SchedulerKind::MaxCI);
    c.run.warmup_s = 6.0;
    assert!(matches!(run_simulation(&c, 1), Err(Error::Config(_))));
}

#[test]
fn plf_mobility_runs_and_keeps_order() {
    let mut c = short(IftKind::OneHop, SchedulerKind::PF);
    c.mobility.mode = platoon_sim::MobilityMode::Plf;
    let r = run_simulation(&c, 2).unwrap();
    assert!(r.headline().delivered > 0);
}

#[test]
fn largest_campaign_fits_time_budget() {
    // Heaviest topology at the largest size; the budget is 15 minutes.
    let mut base = ScenarioConfig::default();
    base.ift.kind = IftKind::CarToServer;
    base.platoon.length = 10;
    base.platoon.count = 3;
    let spec = platoon_sim::CampaignSpec::new(base)
        .replications(20)
        .seed(3);
    let start = std::time::Instant::now();
    let table = platoon_sim::run_campaign(&spec, platoon_sim::Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(table.failures(), 0);
    assert!(elapsed.as_secs() < 15 * 60, "took {elapsed:?}");
}
