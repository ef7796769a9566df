//! One slot of allocation on a small grid under each scheduler, showing
//! which flow gets which RBs.
//!
//! ```text
//! cargo run --example scheduler_slot
//! ```

use platoon_sim::config::PfParams;
use platoon_sim::scheduler::{allocate_tti, DrrCursor, FlowRequest, PacketDemand};
use platoon_sim::{FlowId, SchedulerKind};

fn flows() -> Vec<FlowRequest> {
    // Four flows with two 5-RB messages each; flow 2 has the best channel,
    // flow 0 has been served least.
    let rates = [1.0, 2.5, 4.0, 3.0];
    let averages = [0.2, 1.5, 3.0, 2.0];
    (0..4)
        .map(|i| {
            let packet = PacketDemand { bits: 1040, rbs: 5 };
            let mut f = FlowRequest::new(FlowId(i), vec![packet, packet], vec![rates[i as usize]]);
            f.avg_throughput = averages[i as usize];
            f.quantum_bits = 1040;
            f
        })
        .collect()
}

fn main() -> platoon_sim::Result<()> {
    let grid = 16;
    for kind in SchedulerKind::ALL {
        let mut pending = flows();
        let mut cursor = DrrCursor::default();
        println!("{}:", kind.as_str());
        for tti in 0..3 {
            let map = allocate_tti(
                &mut pending,
                kind,
                grid,
                &PfParams::default(),
                8,
                &mut cursor,
                tti,
            )?;
            let row: String = map
                .rb_owner
                .iter()
                .map(|o| o.map_or('.', |f| char::from(b'0' + f.0 as u8)))
                .collect();
            println!("  slot {tti}: {row}");
        }
    }
    Ok(())
}
