//! Leader-to-tail delay, age of information and reception for the three
//! information flow topologies under each scheduler, five-vehicle platoon.
//!
//! ```text
//! cargo run --release --example ift_comparison -- [replications]
//! ```

use platoon_sim::campaign::{replication_seed, run_replications};
use platoon_sim::metrics::combine_reports;
use platoon_sim::{Execution, IftKind, ScenarioConfig, SchedulerKind};

fn main() -> platoon_sim::Result<()> {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let seeds: Vec<u64> = (0..reps).map(|r| replication_seed(1, 0, r)).collect();
    println!(
        "{:<14} {:<7} {:>9} {:>9} {:>10} {:>8}",
        "ift", "sched", "delay_ms", "aoi_ms", "thr_kBps", "recv"
    );
    for sched in SchedulerKind::ALL {
        for ift in IftKind::ALL {
            let mut cfg = ScenarioConfig::default();
            cfg.ift.kind = ift;
            cfg.scheduler.kind = sched;
            let reports = run_replications(&cfg, &seeds, Execution::Parallel)
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            let s = combine_reports(&reports)?.headline;
            let show = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.3}"));
            println!(
                "{:<14} {:<7} {:>9} {:>9} {:>10} {:>8}",
                ift.as_str(),
                sched.as_str(),
                show(s.delay_ms.mean),
                show(s.aoi_ms.mean),
                show(s.throughput_kbps.mean),
                show(s.reception_prob.mean),
            );
        }
    }
    Ok(())
}
