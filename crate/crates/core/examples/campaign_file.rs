//! Loads a campaign description from TOML, runs it and writes the CSV.
//!
//! ```text
//! cargo run --release --example campaign_file -- crates/core/examples/data/campaign.toml out.csv
//! ```

use std::path::PathBuf;

use platoon_sim::campaign::emit_csv;
use platoon_sim::{run_campaign, CampaignSpec, Execution};

fn main() -> platoon_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/data/campaign.toml"
        ))
    });
    let output = args
        .next()
        .map_or_else(|| PathBuf::from("campaign.csv"), PathBuf::from);
    let spec = CampaignSpec::from_file(&input)?;
    eprintln!("{}: {} runs", input.display(), spec.run_count());
    let table = run_campaign(&spec, Execution::Parallel)?;
    emit_csv(&table, &output)?;
    eprintln!(
        "wrote {} ({} failed rows)",
        output.display(),
        table.failures()
    );
    Ok(())
}
