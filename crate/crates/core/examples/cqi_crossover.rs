//! Throughput per leader-to-member link at low transmit power for each
//! fixed CQI. Robust CQIs win on the far links, efficient ones on near links.
//!
//! ```text
//! cargo run --release --example cqi_crossover
//! ```

use platoon_sim::{run_simulation, IftKind, ScenarioConfig};

fn main() -> platoon_sim::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.ift.kind = IftKind::OneHop;
    cfg.platoon.length = 8;
    cfg.radio.tx_power_dbm = -6.0;
    cfg.run.duration_s = 20.0;

    print!("{:>4}", "cqi");
    for hop in 1..cfg.platoon.length {
        print!(" {:>8}", format!("{}m", hop as f64 * cfg.platoon.spacing_m));
    }
    println!("   (kBps)");
    for cqi in [3u8, 5, 7, 9, 11] {
        cfg.channel.cqi = cqi;
        let report = run_simulation(&cfg, 3)?;
        print!("{cqi:>4}");
        for link in report.per_link() {
            print!(" {:>8.3}", link.throughput_kbps.unwrap_or(0.0));
        }
        println!();
    }
    Ok(())
}
