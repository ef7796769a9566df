//! Sweeps platoon length for every topology and prints the campaign CSV.
//!
//! ```text
//! cargo run --release --example platoon_sweep -- [replications]
//! ```

use platoon_sim::campaign::csv_string;
use platoon_sim::{run_campaign, CampaignSpec, Execution, ScenarioConfig};

fn main() -> platoon_sim::Result<()> {
    let reps: u32 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(3);
    let mut base = ScenarioConfig::default();
    base.run.duration_s = 20.0;
    let spec = CampaignSpec::new(base)
        .axis("ift.kind", ["one_hop", "multi_hop", "car_to_server"])
        .axis("platoon.length", [3i64, 5, 7, 10])
        .replications(reps)
        .seed(5);
    eprintln!("{} runs", spec.run_count());
    let table = run_campaign(&spec, Execution::Parallel)?;
    print!("{}", csv_string(&table)?);
    Ok(())
}
