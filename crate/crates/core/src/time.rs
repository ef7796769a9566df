//! Simulation time is kept in integer nanoseconds so that event ordering and
//! delay sums are exact.

pub type Nanos = u64;

pub const NS_PER_MS: u64 = 1_000_000;
pub const NS_PER_S: u64 = 1_000_000_000;

pub fn from_secs(s: f64) -> Nanos {
    (s * NS_PER_S as f64).round() as Nanos
}

pub fn from_ms(ms: f64) -> Nanos {
    (ms * NS_PER_MS as f64).round() as Nanos
}

pub fn to_ms(ns: Nanos) -> f64 {
    ns as f64 / NS_PER_MS as f64
}

pub fn to_secs(ns: Nanos) -> f64 {
    ns as f64 / NS_PER_S as f64
}

/// Slot length for numerology `mu`: 1 ms / 2^mu.
pub fn slot_ns(numerology: u8) -> Nanos {
    NS_PER_MS >> numerology
}
