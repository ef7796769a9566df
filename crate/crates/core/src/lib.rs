//! Discrete-event simulation of periodic CAM exchange inside vehicle
//! platoons over a 5G cellular link.
//!
//! Each vehicle generates a CAM every `T_p`. Depending on the information
//! flow topology the message reaches the rest of its platoon through the
//! gNB ([`IftKind::CarToServer`]), hop by hop along the platoon
//! ([`IftKind::MultiHop`]) or in one sidelink broadcast
//! ([`IftKind::OneHop`]). Every transmission competes for resource blocks
//! under a MaxC/I, proportional-fair or deficit-round-robin scheduler and is
//! decoded against a path loss, shadowing and Jakes fading channel at a
//! fixed CQI. Runs report end-to-end delay, age of information, throughput
//! and reception probability per link.
//!
//! ```no_run
//! use platoon_sim::{run_simulation, IftKind, ScenarioConfig};
//!
//! let mut cfg = ScenarioConfig::default();
//! cfg.ift.kind = IftKind::MultiHop;
//! let report = run_simulation(&cfg, 42).unwrap();
//! println!("{:?} ms", report.headline().delay_ms);
//! ```

pub mod campaign;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod ids;
pub mod metrics;
pub mod mobility;
pub mod rng;
pub mod routing;
pub mod scheduler;
pub mod time;
pub mod world;

pub use campaign::{run_campaign, CampaignSpec, Execution, ResultsTable};
pub use config::{CsiMode, IftKind, MobilityMode, ScenarioConfig, SchedulerKind};
pub use engine::{run_simulation, Simulation};
pub use error::{ConfigErrors, Error, Result};
pub use ids::{FlowId, NodeId, VehicleId};
pub use metrics::{aggregate_replications, MetricsReport, ReplicatedReport};
