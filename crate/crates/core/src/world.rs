use crate::config::{IftKind, RadioParams, ScenarioConfig, SchedulerKind};
use crate::ids::VehicleId;
use crate::mobility::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Member,
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonSpec {
    pub id: u16,
    pub lane: u16,
    /// Front to back: `V_{j,0}` first.
    pub vehicles: Vec<VehicleId>,
}

impl PlatoonSpec {
    pub fn leader(&self) -> VehicleId {
        self.vehicles[0]
    }

    pub fn tail(&self) -> VehicleId {
        *self.vehicles.last().expect("platoon has vehicles")
    }
}

/// The static layout of a run: platoons, their vehicles' initial states and
/// the radio setup. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub platoons: Vec<PlatoonSpec>,
    pub vehicles: Vec<VehicleState>,
    pub radio: RadioParams,
    pub ift: IftKind,
    pub scheduler: SchedulerKind,
    pub spacing_m: f64,
}

impl World {
    pub fn platoon_length(&self) -> usize {
        self.platoons.first().map_or(0, |p| p.vehicles.len())
    }

    pub fn vehicle_index(&self, id: VehicleId) -> usize {
        id.platoon as usize * self.platoon_length() + id.index as usize
    }

    pub fn vehicle(&self, id: VehicleId) -> &VehicleState {
        &self.vehicles[self.vehicle_index(id)]
    }

    pub fn role(&self, id: VehicleId) -> Role {
        if id.index == 0 {
            Role::Leader
        } else if id.index as usize + 1 == self.platoon_length() {
            Role::Tail
        } else {
            Role::Member
        }
    }

    pub fn platoon(&self, id: u16) -> &PlatoonSpec {
        &self.platoons[id as usize]
    }
}

/// Lays out `M` platoons of `N` vehicles, platoon `j` on lane `j`. Leaders
/// start side by side at `x = 0`; followers trail at multiples of the
/// spacing. Uses no randomness.
pub fn build_world(cfg: &ScenarioConfig) -> World {
    let n = cfg.platoon.length;
    let speed = cfg.platoon.speed_mps();
    let mut platoons = Vec::with_capacity(cfg.platoon.count);
    let mut vehicles = Vec::with_capacity(cfg.platoon.count * n);
    for j in 0..cfg.platoon.count as u16 {
        let ids: Vec<VehicleId> = (0..n as u16).map(|i| VehicleId::new(j, i)).collect();
        for id in &ids {
            vehicles.push(VehicleState::new(
                *id,
                j,
                -(id.index as f64) * cfg.platoon.spacing_m,
                speed,
            ));
        }
        platoons.push(PlatoonSpec {
            id: j,
            lane: j,
            vehicles: ids,
        });
    }
    World {
        platoons,
        vehicles,
        radio: cfg.radio.clone(),
        ift: cfg.ift.kind,
        scheduler: cfg.scheduler.kind,
        spacing_m: cfg.platoon.spacing_m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::link_distance;

    fn cfg(m: usize, n: usize) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.platoon.count = m;
        c.platoon.length = n;
        c
    }

    #[test]
    fn roles_for_a_five_vehicle_platoon() {
        let w = build_world(&cfg(1, 5));
        assert_eq!(w.vehicles.len(), 5);
        assert_eq!(w.role(VehicleId::new(0, 0)), Role::Leader);
        assert_eq!(w.role(VehicleId::new(0, 2)), Role::Member);
        assert_eq!(w.role(VehicleId::new(0, 4)), Role::Tail);
        assert_eq!(w.platoon(0).tail(), VehicleId::new(0, 4));
    }

    #[test]
    fn platoons_get_distinct_lanes() {
        let w = build_world(&cfg(2, 5));
        assert_ne!(w.platoons[0].lane, w.platoons[1].lane);
        assert_eq!(w.vehicle(VehicleId::new(1, 3)).lane, 1);
    }

    #[test]
    fn leader_to_tail_distance() {
        let w = build_world(&cfg(1, 5));
        let d = link_distance(w.platoon(0).leader(), w.platoon(0).tail(), w.spacing_m).unwrap();
        assert_eq!(d, 44.0);
        let pl = w.vehicle(w.platoon(0).leader()).position_m;
        let pt = w.vehicle(w.platoon(0).tail()).position_m;
        assert_eq!(pl - pt, 44.0);
    }

    #[test]
    fn construction_is_deterministic_and_sized() {
        for m in 1..=3 {
            for n in 2..=10 {
                let c = cfg(m, n);
                let a = build_world(&c);
                assert_eq!(a, build_world(&c));
                assert_eq!(a.vehicles.len(), m * n);
                for p in &a.platoons {
                    assert_eq!(p.vehicles.iter().filter(|v| v.index == 0).count(), 1);
                }
            }
        }
    }
}
