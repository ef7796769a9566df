//! Expansion of a CAM into transmission legs for each information flow
//! topology, and the latency bookkeeping of a single leg.

use crate::config::{IftKind, IftParams};
use crate::ids::{NodeId, VehicleId};
use crate::mobility::VehicleState;
use crate::time::{self, Nanos};
use crate::world::World;

/// Kinematic state reported in a CAM.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    pub position_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamMessage {
    /// Per-source sequence number, counting from 0.
    pub seq: u64,
    pub generated_ns: Nanos,
    pub source: VehicleId,
    pub platoon: u16,
    pub lane: u16,
    pub app_bytes: u32,
    /// Application bytes plus lower-layer overhead.
    pub air_bytes: u32,
    pub kinematics: Kinematics,
}

impl CamMessage {
    pub fn air_bits(&self) -> u64 {
        u64::from(self.air_bytes) * 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LegKind {
    /// Sidelink transmission by the CAM's source.
    V2V,
    /// Vehicle to gNB.
    UL,
    /// gNB to vehicle.
    DL,
    /// Sidelink re-transmission by a Multi-Hop relay.
    Relay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionLeg {
    pub kind: LegKind,
    pub tx: NodeId,
    pub rx: Vec<NodeId>,
    /// Index of the leg whose reception at `tx` triggers this one.
    pub depends_on: Option<usize>,
    /// Processing at `tx` after the triggering reception.
    pub processing_delay_ns: Nanos,
    /// Scheduling-request to grant latency; zero for gNB transmissions.
    pub access_delay_ns: Nanos,
    /// Hops from the source once this leg is received.
    pub hops: u32,
    /// One transmission addressed to every receiver in `rx`.
    pub broadcast: bool,
}

impl TransmissionLeg {
    /// Earliest time the message can be scheduled, given when `tx` had it.
    pub fn ready_at(&self, available_ns: Nanos) -> Nanos {
        available_ns + self.processing_delay_ns + self.access_delay_ns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Delivered(Nanos),
    Lost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub source: VehicleId,
    pub seq: u64,
    pub generated_ns: Nanos,
    pub receiver: VehicleId,
    pub outcome: Outcome,
    pub hops: u32,
}

/// Accept iff the candidate is in the CAM's platoon and is not its source.
pub fn subscriber_filter(cam: &CamMessage, candidate: &VehicleState) -> bool {
    candidate.id.platoon == cam.platoon && candidate.id != cam.source
}

/// Legs for one CAM, in dependency order: a leg only depends on legs listed
/// before it.
pub fn plan_legs(cam: &CamMessage, ift: &IftParams, world: &World) -> Vec<TransmissionLeg> {
    let platoon = world.platoon(cam.platoon);
    let access = time::from_ms(ift.access_delay_ms);
    let receivers: Vec<NodeId> = platoon
        .vehicles
        .iter()
        .filter(|v| subscriber_filter(cam, world.vehicle(**v)))
        .map(|v| NodeId::Vehicle(*v))
        .collect();
    match ift.kind {
        IftKind::OneHop => vec![TransmissionLeg {
            kind: LegKind::V2V,
            tx: cam.source.into(),
            rx: receivers,
            depends_on: None,
            processing_delay_ns: 0,
            access_delay_ns: access,
            hops: 1,
            broadcast: true,
        }],
        IftKind::CarToServer => {
            let mut legs = vec![TransmissionLeg {
                kind: LegKind::UL,
                tx: cam.source.into(),
                rx: vec![NodeId::Gnb],
                depends_on: None,
                processing_delay_ns: 0,
                access_delay_ns: access,
                hops: 1,
                broadcast: false,
            }];
            let core = time::from_ms(ift.core_proc_ms);
            legs.extend(receivers.into_iter().map(|r| TransmissionLeg {
                kind: LegKind::DL,
                tx: NodeId::Gnb,
                rx: vec![r],
                depends_on: Some(0),
                processing_delay_ns: core,
                access_delay_ns: 0,
                hops: 2,
                broadcast: false,
            }));
            legs
        }
        IftKind::MultiHop => {
            let relay = time::from_ms(ift.relay_proc_ms);
            let n = platoon.vehicles.len() as i32;
            let src = i32::from(cam.source.index);
            let mut legs = Vec::with_capacity(n as usize - 1);
            // Toward the tail, then toward the leader.
            for step in [1i32, -1] {
                let mut prev: Option<usize> = None;
                let mut from = src;
                while (0..n).contains(&(from + step)) {
                    let to = from + step;
                    let hops = (to - src).unsigned_abs();
                    legs.push(TransmissionLeg {
                        kind: if prev.is_none() {
                            LegKind::V2V
                        } else {
                            LegKind::Relay
                        },
                        tx: NodeId::Vehicle(VehicleId::new(cam.platoon, from as u16)),
                        rx: vec![NodeId::Vehicle(VehicleId::new(cam.platoon, to as u16))],
                        depends_on: prev,
                        processing_delay_ns: if prev.is_none() { 0 } else { relay },
                        access_delay_ns: access,
                        hops,
                        broadcast: false,
                    });
                    prev = Some(legs.len() - 1);
                    from = to;
                }
            }
            legs
        }
    }
}

/// When and for how long a leg held the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrantTimeline {
    /// When the transmitter had the message (generation or predecessor
    /// reception).
    pub available_ns: Nanos,
    /// Start of the slot carrying the grant.
    pub grant_slot_ns: Nanos,
    pub slot_ns: Nanos,
    pub slots_used: u32,
}

impl GrantTimeline {
    pub fn completion_ns(&self) -> Nanos {
        self.grant_slot_ns + u64::from(self.slots_used) * self.slot_ns
    }
}

/// Time from availability at the transmitter to reception, or `None` when
/// the receiver failed to decode. Covers processing, access latency, slot
/// alignment, queuing behind other flows and the air time itself, all of
/// which are captured by the grant slot.
pub fn leg_delay(leg: &TransmissionLeg, timeline: &GrantTimeline, decoded: bool) -> Option<Nanos> {
    debug_assert!(timeline.grant_slot_ns >= leg.ready_at(timeline.available_ns));
    decoded.then(|| timeline.completion_ns() - timeline.available_ns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::world::build_world;

    fn setup(kind: IftKind, n: usize) -> (ScenarioConfig, World) {
        let mut cfg = ScenarioConfig::default();
        cfg.platoon.length = n;
        cfg.platoon.count = 2;
        cfg.ift.kind = kind;
        let w = build_world(&cfg);
        (cfg, w)
    }

    fn cam(src: VehicleId) -> CamMessage {
        CamMessage {
            seq: 0,
            generated_ns: 0,
            source: src,
            platoon: src.platoon,
            lane: src.platoon,
            app_bytes: 110,
            air_bytes: 130,
            kinematics: Kinematics::default(),
        }
    }

    #[test]
    fn one_hop_is_a_single_broadcast() {
        let (cfg, w) = setup(IftKind::OneHop, 5);
        let legs = plan_legs(&cam(VehicleId::new(0, 0)), &cfg.ift, &w);
        assert_eq!(legs.len(), 1);
        assert_eq!(legs[0].rx.len(), 4);
        assert!(legs[0].broadcast);
    }

    #[test]
    fn multi_hop_chains_to_the_tail() {
        let (cfg, w) = setup(IftKind::MultiHop, 5);
        let legs = plan_legs(&cam(VehicleId::new(0, 0)), &cfg.ift, &w);
        assert_eq!(legs.len(), 4);
        for (i, leg) in legs.iter().enumerate() {
            assert_eq!(leg.tx, NodeId::Vehicle(VehicleId::new(0, i as u16)));
            assert_eq!(
                leg.rx,
                vec![NodeId::Vehicle(VehicleId::new(0, i as u16 + 1))]
            );
            assert_eq!(leg.depends_on, i.checked_sub(1));
            assert_eq!(leg.hops, i as u32 + 1);
        }
        assert_eq!(legs[0].kind, LegKind::V2V);
        assert_eq!(legs[3].kind, LegKind::Relay);
    }

    #[test]
    fn multi_hop_from_the_middle_goes_both_ways() {
        let (cfg, w) = setup(IftKind::MultiHop, 5);
        let legs = plan_legs(&cam(VehicleId::new(1, 2)), &cfg.ift, &w);
        assert_eq!(legs.len(), 4);
        let roots: Vec<_> = legs.iter().filter(|l| l.depends_on.is_none()).collect();
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn car_to_server_is_uplink_then_downlinks() {
        let (cfg, w) = setup(IftKind::CarToServer, 5);
        let legs = plan_legs(&cam(VehicleId::new(0, 0)), &cfg.ift, &w);
        assert_eq!(legs.len(), 5);
        assert_eq!(legs[0].kind, LegKind::UL);
        assert!(legs[1..]
            .iter()
            .all(|l| l.kind == LegKind::DL && l.depends_on == Some(0) && l.hops == 2));
        assert_eq!(legs[1].access_delay_ns, 0);
    }

    #[test]
    fn every_member_receives_exactly_once() {
        for kind in IftKind::ALL {
            for n in 2..=10 {
                let (cfg, w) = setup(kind, n);
                for src in &w.platoon(1).vehicles {
                    let legs = plan_legs(&cam(*src), &cfg.ift, &w);
                    let mut got: Vec<VehicleId> = legs
                        .iter()
                        .flat_map(|l| l.rx.iter().filter_map(|r| r.vehicle()))
                        .collect();
                    got.sort();
                    let mut want: Vec<VehicleId> = w
                        .platoon(1)
                        .vehicles
                        .iter()
                        .copied()
                        .filter(|v| v != src)
                        .collect();
                    want.sort();
                    assert_eq!(got, want, "{kind:?} n={n} src={src}");
                    for (i, l) in legs.iter().enumerate() {
                        assert!(l.depends_on.is_none_or(|d| d < i));
                    }
                }
            }
        }
    }

    #[test]
    fn filter_rules() {
        let (_, w) = setup(IftKind::OneHop, 5);
        let c = cam(VehicleId::new(0, 0));
        assert!(subscriber_filter(&c, w.vehicle(VehicleId::new(0, 3))));
        assert!(!subscriber_filter(&c, w.vehicle(VehicleId::new(1, 3))));
        assert!(!subscriber_filter(&c, w.vehicle(VehicleId::new(0, 0))));
    }

    #[test]
    fn next_slot_grant_fits_in_two_slots() {
        let (cfg, w) = setup(IftKind::OneHop, 5);
        let mut leg = plan_legs(&cam(VehicleId::new(0, 0)), &cfg.ift, &w).remove(0);
        leg.access_delay_ns = 0;
        let slot = time::slot_ns(3);
        assert_eq!(slot, 125_000);
        let available = 3 * slot + 40_000;
        let t = GrantTimeline {
            available_ns: available,
            grant_slot_ns: 4 * slot,
            slot_ns: slot,
            slots_used: 1,
        };
        let d = leg_delay(&leg, &t, true).unwrap();
        assert!(d <= 250_000);
        assert_eq!(leg_delay(&leg, &t, false), None);
    }
}
