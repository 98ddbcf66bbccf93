//! Phase-aware placement engine and trace-driven simulator for cloud
//! virtual disks (CVDs).
//!
//! A provisioning request carries tenant-written identifiers (project, VM,
//! disk names) alongside its resource specification. This crate recovers an
//! application class from those identifiers, maps the class to a canonical
//! intra-day load pattern, scales it by a predicted load intensity, and
//! places the disk onto the storage pod whose existing load the predicted
//! profile best complements. A discrete-event simulator replays disk-level
//! throughput traces to compare this policy against spatial baselines.
//!
//! Modules follow the pipeline:
//!
//! - [`workload`]: core domain types (requests, traces, slot arithmetic)
//! - [`taxonomy`]: the closed application-class label space
//! - [`generator`]: seeded synthetic corpus generation with ground truth
//! - [`semantics`]: filter -> prefix cache -> lexicon classifier pipeline
//! - [`profile`]: canonical per-class pattern library and profile synthesis
//! - [`intensity`]: scalar load intensity estimators (regression/bucketing)
//! - [`placement`]: TIDAL placement, spatial scoring, and all baselines
//! - [`sim`]: chronological trace replay, overload detection, metrics
//! - [`driver`]: multi-policy comparison runs, sweeps, and manifests

pub mod corpus;
pub mod driver;
pub mod error;
pub mod generator;
pub mod intensity;
pub mod load;
pub mod placement;
pub mod profile;
pub mod semantics;
pub mod sim;
pub mod taxonomy;
pub mod workload;

pub use error::Error;
pub use load::LoadVector;
pub use taxonomy::ApplicationClass;
