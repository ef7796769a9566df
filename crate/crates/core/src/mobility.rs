//! Longitudinal vehicle kinematics and the predecessor-leader-following CACC
//! law.

use crate::config::PlfGains;
use crate::error::{Error, Result};
use crate::ids::VehicleId;
use crate::routing::CamMessage;
use crate::time::{self, Nanos};

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub lane: u16,
    /// Front-bumper-independent centre position along the road, metres.
    pub position_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub latest_leader_cam: Option<CamMessage>,
    pub latest_predecessor_cam: Option<CamMessage>,
}

impl VehicleState {
    pub fn new(id: VehicleId, lane: u16, position_m: f64, speed_mps: f64) -> Self {
        Self {
            id,
            lane,
            position_m,
            speed_mps,
            accel_mps2: 0.0,
            latest_leader_cam: None,
            latest_predecessor_cam: None,
        }
    }

    pub fn platoon(&self) -> u16 {
        self.id.platoon
    }
}

/// Advances `state` by `dt` seconds with its acceleration clamped to
/// `+-max_accel`. A braking vehicle stops rather than reversing.
pub fn step_kinematics(state: &VehicleState, dt: f64, max_accel: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    let a = state.accel_mps2.clamp(-max_accel, max_accel);
    let v0 = state.speed_mps;
    let mut next = state.clone();
    next.accel_mps2 = a;
    let v1 = v0 + a * dt;
    if v1 < 0.0 {
        let t_stop = -v0 / a;
        next.position_m += v0 * t_stop + 0.5 * a * t_stop * t_stop;
        next.speed_mps = 0.0;
    } else {
        next.position_m += v0 * dt + 0.5 * a * dt * dt;
        next.speed_mps = v1;
    }
    next
}

/// Result of one controller update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlOutcome {
    Applied(f64),
    /// A reference CAM was missing or older than twice the control period;
    /// the current acceleration is kept.
    Stale {
        held: f64,
    },
}

impl ControlOutcome {
    pub fn accel(self) -> f64 {
        match self {
            ControlOutcome::Applied(a) | ControlOutcome::Stale { held: a } => a,
        }
    }
}

/// Reference state carried by a CAM, extrapolated to `now`.
fn extrapolate(cam: &CamMessage, now: Nanos) -> (f64, f64, f64) {
    let age = time::to_secs(now.saturating_sub(cam.generated_ns));
    let k = &cam.kinematics;
    (
        k.position_m + k.speed_mps * age + 0.5 * k.accel_mps2 * age * age,
        k.speed_mps + k.accel_mps2 * age,
        k.accel_mps2,
    )
}

/// PLF-CACC acceleration for `me`:
///
/// ```text
/// u = (1 - C1) a_pred + C1 a_lead
///     - (2 xi - C1 (xi + sqrt(xi^2 - 1))) w_n (v - v_pred)
///     - C1 (xi + sqrt(xi^2 - 1)) w_n (v - v_lead)
///     - w_n^2 (gap_desired - gap)
/// ```
///
/// where `gap` is the centre-to-centre distance to the predecessor.
pub fn plf_accel(
    me: &VehicleState,
    lead: (f64, f64, f64),
    pred: (f64, f64, f64),
    gains: &PlfGains,
) -> f64 {
    let (_, v_lead, a_lead) = lead;
    let (x_pred, v_pred, a_pred) = pred;
    let c1 = gains.c1;
    let root = gains.xi + (gains.xi * gains.xi - 1.0).max(0.0).sqrt();
    let w = gains.omega_n;
    let spacing_error = gains.desired_gap_m - (x_pred - me.position_m);
    (1.0 - c1) * a_pred + c1 * a_lead
        - (2.0 * gains.xi - c1 * root) * w * (me.speed_mps - v_pred)
        - c1 * root * w * (me.speed_mps - v_lead)
        - w * w * spacing_error
}

/// Controller update from the latest leader and predecessor CAMs at `now`.
pub fn plf_control_input(
    me: &VehicleState,
    leader_cam: Option<&CamMessage>,
    pred_cam: Option<&CamMessage>,
    gains: &PlfGains,
    now: Nanos,
    control_period: Nanos,
) -> ControlOutcome {
    let fresh = |c: &&CamMessage| now.saturating_sub(c.generated_ns) <= 2 * control_period;
    match (leader_cam.filter(fresh), pred_cam.filter(fresh)) {
        (Some(l), Some(p)) => ControlOutcome::Applied(plf_accel(
            me,
            extrapolate(l, now),
            extrapolate(p, now),
            gains,
        )),
        _ => ControlOutcome::Stale {
            held: me.accel_mps2,
        },
    }
}

/// Distance between two vehicles of the same platoon at nominal spacing.
pub fn link_distance(a: VehicleId, b: VehicleId, spacing_m: f64) -> Result<f64> {
    if a.platoon != b.platoon {
        return Err(Error::CrossPlatoonLink(a, b));
    }
    Ok(f64::from(a.index.abs_diff(b.index)) * spacing_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::Kinematics;

    fn car(x: f64, v: f64) -> VehicleState {
        VehicleState::new(VehicleId::new(0, 1), 0, x, v)
    }

    fn cam(x: f64, v: f64, a: f64, at: Nanos) -> CamMessage {
        CamMessage {
            seq: 0,
            generated_ns: at,
            source: VehicleId::new(0, 0),
            platoon: 0,
            lane: 0,
            app_bytes: 110,
            air_bytes: 130,
            kinematics: Kinematics {
                position_m: x,
                speed_mps: v,
                accel_mps2: a,
            },
        }
    }

    #[test]
    fn uniform_motion() {
        let s = step_kinematics(&car(0.0, 10.0), 0.1, 2.5);
        assert!((s.position_m - 1.0).abs() < 1e-12);
        assert_eq!(s.speed_mps, 10.0);
    }

    #[test]
    fn acceleration_is_clamped() {
        let mut c = car(0.0, 10.0);
        c.accel_mps2 = 5.0;
        assert_eq!(step_kinematics(&c, 0.1, 2.5).accel_mps2, 2.5);
        c.accel_mps2 = -9.0;
        assert_eq!(step_kinematics(&c, 0.1, 2.5).accel_mps2, -2.5);
    }

    #[test]
    fn braking_stops_at_zero_speed() {
        let mut c = car(0.0, 1.0);
        c.accel_mps2 = -2.5;
        let s = step_kinematics(&c, 1.0, 2.5);
        assert_eq!(s.speed_mps, 0.0);
        // Stops after 0.4 s having covered 0.2 m.
        assert!((s.position_m - 0.2).abs() < 1e-12);
    }

    #[test]
    fn constant_speed_keeps_gaps() {
        let mut cars: Vec<VehicleState> = (0..5).map(|i| car(-11.0 * i as f64, 10.0)).collect();
        for _ in 0..600 {
            cars = cars.iter().map(|c| step_kinematics(c, 0.1, 2.5)).collect();
        }
        for w in cars.windows(2) {
            assert!((w[0].position_m - w[1].position_m - 11.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equilibrium_gives_zero() {
        let g = PlfGains::default();
        let me = car(-11.0, 10.0);
        let a = plf_accel(&me, (11.0, 10.0, 0.0), (0.0, 10.0, 0.0), &g);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn blend_of_reference_accelerations() {
        // Zero errors; the speed and spacing terms vanish and the blend
        // (1 - 0.5) * 1 + 0.5 * 1 remains.
        let g = PlfGains::default();
        let a = plf_accel(&car(-11.0, 10.0), (11.0, 10.0, 1.0), (0.0, 10.0, 1.0), &g);
        assert!((a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn short_gap_brakes() {
        let g = PlfGains::default();
        let a = plf_accel(&car(-10.0, 10.0), (11.0, 10.0, 0.0), (0.0, 10.0, 0.0), &g);
        assert!(a < 0.0);
        // Only the spacing term survives: -w_n^2 * 1 m.
        assert!((a + 0.04).abs() < 1e-12);
    }

    #[test]
    fn stale_reference_holds_acceleration() {
        let g = PlfGains::default();
        let mut me = car(-11.0, 10.0);
        me.accel_mps2 = 0.3;
        let period = time::from_secs(0.1);
        let now = time::from_secs(1.0);
        let old = cam(0.0, 10.0, 0.0, time::from_secs(0.7));
        let fresh = cam(0.0, 10.0, 0.0, time::from_secs(0.95));
        let out = plf_control_input(&me, Some(&old), Some(&fresh), &g, now, period);
        assert_eq!(out, ControlOutcome::Stale { held: 0.3 });
        let out = plf_control_input(&me, None, Some(&fresh), &g, now, period);
        assert_eq!(out, ControlOutcome::Stale { held: 0.3 });
        assert!(matches!(
            plf_control_input(&me, Some(&fresh), Some(&fresh), &g, now, period),
            ControlOutcome::Applied(_)
        ));
    }

    #[test]
    fn cam_positions_are_extrapolated() {
        // Predecessor reported 0 m at 10 m/s 50 ms ago, so it is now at 0.5 m;
        // we sit exactly 11 m behind it.
        let g = PlfGains::default();
        let now = time::from_secs(1.0);
        let c = cam(0.0, 10.0, 0.0, now - time::from_ms(50.0));
        let me = car(-10.5, 10.0);
        let out = plf_control_input(&me, Some(&c), Some(&c), &g, now, time::from_secs(0.1));
        assert!(out.accel().abs() < 1e-12);
    }

    #[test]
    fn link_distances() {
        let v = |i| VehicleId::new(0, i);
        assert_eq!(link_distance(v(0), v(4), 11.0).unwrap(), 44.0);
        assert_eq!(link_distance(v(3), v(3), 11.0).unwrap(), 0.0);
        assert_eq!(link_distance(v(2), v(7), 11.0).unwrap(), 55.0);
        assert!(matches!(
            link_distance(v(0), VehicleId::new(1, 0), 11.0),
            Err(Error::CrossPlatoonLink(..))
        ));
    }
}
