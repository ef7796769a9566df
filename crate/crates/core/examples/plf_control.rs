//! PLF-CACC controller fed by the latest leader and predecessor CAMs: a
//! follower that starts too close backs off to the desired gap.
//!
//! ```text
//! cargo run --example plf_control
//! ```

use platoon_sim::config::PlfGains;
use platoon_sim::mobility::{plf_control_input, step_kinematics, VehicleState};
use platoon_sim::routing::{CamMessage, Kinematics};
use platoon_sim::VehicleId;

fn cam(source: &VehicleState, seq: u64, now: u64) -> CamMessage {
    CamMessage {
        seq,
        generated_ns: now,
        source: source.id,
        platoon: 0,
        lane: source.lane,
        app_bytes: 110,
        air_bytes: 130,
        kinematics: Kinematics {
            position_m: source.position_m,
            speed_mps: source.speed_mps,
            accel_mps2: source.accel_mps2,
        },
    }
}

fn main() {
    let gains = PlfGains::default();
    let period_ns = 100_000_000;
    let dt = 0.1;
    let leader = VehicleState::new(VehicleId::new(0, 0), 0, 100.0, 10.0);
    let mut follower = VehicleState::new(VehicleId::new(0, 1), 0, 92.0, 10.0);
    let mut leader = leader;

    println!("{:>6} {:>8} {:>8} {:>8}", "t_s", "gap_m", "v_mps", "a_mps2");
    for step in 0..=300u64 {
        let now = step * period_ns;
        let lead_cam = cam(&leader, step, now);
        let out = plf_control_input(
            &follower,
            Some(&lead_cam),
            Some(&lead_cam),
            &gains,
            now,
            period_ns,
        );
        follower.accel_mps2 = out.accel();
        if step % 20 == 0 {
            println!(
                "{:>6.1} {:>8.3} {:>8.3} {:>8.3}",
                step as f64 * dt,
                leader.position_m - follower.position_m,
                follower.speed_mps,
                follower.accel_mps2
            );
        }
        leader = step_kinematics(&leader, dt, 2.5);
        follower = step_kinematics(&follower, dt, 2.5);
    }
}
