use std::fmt;
use std::path::PathBuf;

use crate::ids::{FlowId, VehicleId};

/// One problem found while reading a scenario or campaign file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// All issues collected during a single parse, reported together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn single(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![ConfigIssue::new(key, message)])
    }

    pub fn issues(&self) -> &[ConfigIssue] {
        &self.0
    }

    /// True when any issue is attached to `key`.
    pub fn mentions(&self, key: &str) -> bool {
        self.0.iter().any(|i| i.key == key)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, issue) in self.0.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),

    #[error("path loss needs a positive distance, got {0} m")]
    NonPositiveDistance(f64),

    #[error("path loss needs a positive carrier frequency, got {0} GHz")]
    NonPositiveFrequency(f64),

    #[error("cross-platoon link {0} -> {1} is not modelled")]
    CrossPlatoonLink(VehicleId, VehicleId),

    #[error("empty candidate list for RB {0}")]
    NoCandidates(usize),

    #[error("flow {0} has a non-positive average throughput")]
    UninitializedAverage(FlowId),

    #[error("grant of {granted} RBs is smaller than the {needed} RBs the message needs")]
    GrantTooSmall { granted: usize, needed: u32 },

    #[error("delivery at {recv_ns} ns precedes generation at {gen_ns} ns")]
    Causality { gen_ns: u64, recv_ns: u64 },

    #[error("insufficient replications: need at least 2, got {0}")]
    InsufficientReplications(usize),

    #[error("replication reports describe different scenarios")]
    MismatchedScenarios,

    #[error("event queue exceeded its cap of {cap} pending events at t = {at_ns} ns")]
    EventOverflow { cap: usize, at_ns: u64 },

    #[error("campaign has {runs} runs, above the cap of {cap}")]
    CampaignTooLarge { runs: usize, cap: usize },

    #[error("nothing to write: the results table is empty")]
    EmptyTable,

    #[error("malformed MCS table line {line}: {reason}")]
    McsTable { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
