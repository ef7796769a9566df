use std::fmt;

/// Vehicle `V_{j,i}`: index `i` within platoon `j`. Stable across scenarios
/// that differ only in platoon count, so per-link random streams keyed on it
/// do not shift when platoons are added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId {
    pub platoon: u16,
    pub index: u16,
}

impl VehicleId {
    pub const fn new(platoon: u16, index: u16) -> Self {
        Self { platoon, index }
    }

    pub(crate) fn key(self) -> u64 {
        ((self.platoon as u64) << 16) | self.index as u64
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{},{}", self.platoon, self.index)
    }
}

/// A radio endpoint: a vehicle or the single gNB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Vehicle(VehicleId),
    Gnb,
}

impl NodeId {
    pub fn vehicle(self) -> Option<VehicleId> {
        match self {
            NodeId::Vehicle(v) => Some(v),
            NodeId::Gnb => None,
        }
    }

    pub(crate) fn key(self) -> u64 {
        match self {
            NodeId::Vehicle(v) => v.key(),
            NodeId::Gnb => u64::from(u32::MAX),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Vehicle(v) => v.fmt(f),
            NodeId::Gnb => f.write_str("gNB"),
        }
    }
}

impl From<VehicleId> for NodeId {
    fn from(v: VehicleId) -> Self {
        NodeId::Vehicle(v)
    }
}

/// Scheduler flow index. Lower ids win ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "flow{}", self.0)
    }
}
