use proptest::prelude::*;

use platoon_sim::config::PfParams;
use platoon_sim::metrics::AoiIntegrator;
use platoon_sim::scheduler::{allocate_tti, max_ci_select, DrrCursor, FlowRequest, PacketDemand};
use platoon_sim::{FlowId, IftKind, ScenarioConfig, SchedulerKind};

fn flows_strategy() -> impl Strategy<Value = (usize, Vec<FlowRequest>)> {
    (1usize..=16).prop_flat_map(|grid| {
        let flow = (
            prop::collection::vec((1u64..3000, 1u32..8), 0..4),
            prop::collection::vec(0.0f64..10.0, grid),
            0.01f64..5.0,
            1u64..3000,
        );
        (Just(grid), prop::collection::vec(flow, 1..=8)).prop_map(|(grid, specs)| {
            let flows = specs
                .into_iter()
                .enumerate()
                .map(|(i, (queue, rates, avg, quantum))| {
                    let queue = queue
                        .into_iter()
                        .map(|(bits, rbs)| PacketDemand { bits, rbs })
                        .collect();
                    let mut f = FlowRequest::new(FlowId(i as u32), queue, rates);
                    f.avg_throughput = avg;
                    f.quantum_bits = quantum;
                    f
                })
                .collect();
            (grid, flows)
        })
    })
}

fn kind_strategy() -> impl Strategy<Value = SchedulerKind> {
    prop::sample::select(SchedulerKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn allocation_is_consistent_and_conserves_bits(
        (grid, flows) in flows_strategy(),
        kind in kind_strategy(),
        cap in 1usize..10,
        ttis in 1u64..5,
    ) {
        let requested: u64 = flows.iter().map(|f| f.pending_bits()).sum();
        let mut pending = flows.clone();
        let mut cursor = DrrCursor::default();
        let mut granted = 0u64;
        for tti in 0..ttis {
            let map = allocate_tti(&mut pending, kind, grid, &PfParams::default(), cap, &mut cursor, tti).unwrap();
            prop_assert!(map.is_consistent());
            prop_assert!(map.granted_rbs() <= grid);
            prop_assert!(map.grants.len() <= cap);
            granted += map.grants.iter().map(|g| g.bits).sum::<u64>();
            let queued: u64 = pending.iter().map(|f| f.pending_bits()).sum();
            prop_assert_eq!(granted + queued, requested);
        }
    }

    #[test]
    fn max_ci_argmax_is_monotone_invariant(
        rates in prop::collection::vec(0.0f64..20.0, 1..8),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let make = |f: &dyn Fn(f64) -> f64| -> Vec<FlowRequest> {
            rates.iter().enumerate()
                .map(|(i, &r)| FlowRequest::new(FlowId(i as u32), Vec::new(), vec![f(r)]))
                .collect()
        };
        let plain = make(&|r| r);
        let mapped = make(&|r| (r * scale + shift).exp());
        let a = max_ci_select(&plain.iter().collect::<Vec<_>>(), 0).unwrap();
        let b = max_ci_select(&mapped.iter().collect::<Vec<_>>(), 0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn drr_deficit_never_exceeds_quantum_plus_packet(
        (grid, flows) in flows_strategy(),
        ttis in 1u64..20,
    ) {
        let max_bits = flows.iter().flat_map(|f| f.queue.iter().map(|p| p.bits)).max().unwrap_or(0);
        let mut pending = flows.clone();
        let mut cursor = DrrCursor::default();
        for tti in 0..ttis {
            allocate_tti(&mut pending, SchedulerKind::DRR, grid, &PfParams::default(), 8, &mut cursor, tti).unwrap();
            for f in &pending {
                prop_assert!(f.deficit_bits <= f.quantum_bits + max_bits);
                if f.queue.is_empty() {
                    prop_assert_eq!(f.deficit_bits, 0);
                }
            }
        }
    }

    #[test]
    fn aoi_matches_piecewise_oracle(
        gaps in prop::collection::vec((1u64..50, 1u64..40), 1..40),
        start in 0u64..100,
    ) {
        // Generation every gap.0, delivered gap.1 later, in order.
        let mut deliveries = Vec::new();
        let mut g = 0u64;
        let mut last_recv = 0u64;
        for (step, delay) in gaps {
            g += step;
            let r = (g + delay).max(last_recv);
            deliveries.push((g, r));
            last_recv = r;
        }
        let end = last_recv + 10;
        let mut aoi = AoiIntegrator::new(start);
        for &(g, r) in &deliveries {
            aoi.deliver(g, r);
        }
        // Unit-step sum of age over [covered_from, end).
        let mut area = 0u128;
        let mut span = 0u64;
        for t in start..end {
            let newest = deliveries.iter().filter(|&&(_, r)| r <= t).map(|&(g, _)| g).max();
            if let Some(gn) = newest {
                area += u128::from(t - gn) * 2 + 1;
                span += 1;
            }
        }
        match aoi.mean_ns(end) {
            Some(m) => prop_assert!((m - area as f64 / 2.0 / span as f64).abs() < 1e-9 * (1.0 + m)),
            None => prop_assert_eq!(span, 0),
        }
    }

    #[test]
    fn config_emit_parse_round_trip(
        count in 1usize..4,
        length in 2usize..12,
        cqi in prop::sample::select(vec![3u8, 5, 7, 9, 11]),
        ift in prop::sample::select(IftKind::ALL.to_vec()),
        sched in kind_strategy(),
        tx in -10.0f64..30.0,
        seed in any::<u64>(),
    ) {
        let mut c = ScenarioConfig::default();
        c.platoon.count = count;
        c.platoon.length = length;
        c.channel.cqi = cqi;
        c.ift.kind = ift;
        c.scheduler.kind = sched;
        c.radio.tx_power_dbm = tx;
        c.run.seed = seed;
        let back = ScenarioConfig::parse(&c.emit()).unwrap();
        prop_assert_eq!(back.emit(), c.emit());
        prop_assert_eq!(back, c);
    }
}
