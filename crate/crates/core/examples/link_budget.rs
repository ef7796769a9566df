//! SINR, MCS choice and RB demand along a platoon, plus the error
//! probability a single RB sees at each CQI.
//!
//! ```text
//! cargo run --example link_budget
//! ```

use platoon_sim::channel::{
    link_sinr_db, path_loss_db, rb_error_probability, rbs_needed, LinkState, McsTable,
};
use platoon_sim::{ScenarioConfig, VehicleId};

fn main() -> platoon_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let table = McsTable::default();
    let cqis = [3u8, 5, 7, 9, 11];

    print!("{:>6} {:>8} {:>8}", "dist_m", "pl_db", "sinr_db");
    for q in cqis {
        print!(" {:>9}", format!("rb_err@{q}"));
    }
    println!();
    for hop in 1..=9u16 {
        let d = f64::from(hop) * cfg.platoon.spacing_m;
        let link = LinkState::new(
            VehicleId::new(0, 0).into(),
            VehicleId::new(0, hop).into(),
            d,
            0.0,
        );
        let sinr = link_sinr_db(&link, &cfg.radio, 0.0, f64::NEG_INFINITY)?;
        print!(
            "{d:>6.0} {:>8.2} {sinr:>8.2}",
            path_loss_db(d, cfg.radio.carrier_ghz)?
        );
        for q in cqis {
            print!(
                " {:>9.2e}",
                rb_error_probability(sinr, table.get(q).unwrap())
            );
        }
        println!();
    }

    println!();
    println!("{:>4} {:>10} {:>10} {:>6}", "cqi", "eff", "thr_db", "rbs");
    for e in table.entries() {
        println!(
            "{:>4} {:>10.4} {:>10.2} {:>6}",
            e.cqi,
            e.efficiency,
            e.sinr_threshold_db,
            rbs_needed(cfg.cam.air_bits(), e, cfg.channel.re_per_rb)
        );
    }
    Ok(())
}
