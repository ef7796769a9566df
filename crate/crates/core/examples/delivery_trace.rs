//! Per-CAM outcomes of a short multi-hop run, as a CSV on stdout.
//!
//! ```text
//! cargo run --example delivery_trace > trace.csv
//! ```

use platoon_sim::engine::Simulation;
use platoon_sim::routing::Outcome;
use platoon_sim::{IftKind, ScenarioConfig};

fn main() -> platoon_sim::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.ift.kind = IftKind::MultiHop;
    cfg.run.duration_s = 2.0;
    let out = Simulation::new(&cfg, 1)?.with_trace().run()?;
    println!("source_platoon,source_index,seq,receiver_index,generated_ms,received_ms,hops");
    for rec in &out.trace {
        let received = match rec.outcome {
            Outcome::Delivered(at) => format!("{:.3}", at as f64 / 1e6),
            Outcome::Lost => "lost".into(),
        };
        println!(
            "{},{},{},{},{:.3},{},{}",
            rec.source.platoon,
            rec.source.index,
            rec.seq,
            rec.receiver.index,
            rec.generated_ns as f64 / 1e6,
            received,
            rec.hops
        );
    }
    eprintln!("{} outcomes", out.trace.len());
    Ok(())
}
