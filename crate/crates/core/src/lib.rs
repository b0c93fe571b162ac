//! Rolling service-restoration library.
//!
//! The crate couples three planning layers over a damaged infrastructure:
//! routing of a mobile energy storage fleet across a road network, dispatch
//! of microgrid resources, and switching of radial distribution feeders.
//! Each prediction horizon is assembled into a two-stage stochastic
//! mixed-integer linear program and re-solved in a receding-horizon loop as
//! damage, repair and load realizations arrive.
//!
//! Module map:
//! - [`transport`]: road graph, damage-aware shortest paths, travel times,
//!   per-interval fleet movement.
//! - [`tsn`]: per-vehicle, per-scenario time-space networks with cut-sets
//!   and formulation-size accounting.
//! - [`scenario`]: load-error sampling, two-state availability processes,
//!   Monte-Carlo generation and backward reduction.
//! - [`grid`]: feeder data model, radiality oracle, linearized branch-flow
//!   residual checks.
//! - [`milp`]: model assembly, bundled branch-and-bound solve, MPS export
//!   and solution import.
//! - [`rolling`]: the receding-horizon loop, audits and the timeline report.
//! - [`case`]: case-file ingestion and validation.
//! - [`policy`]: fleet-mode and solver-backend strategy registries.

pub mod case;
pub mod grid;
pub mod milp;
pub mod policy;
pub mod report;
pub mod rolling;
pub mod scenario;
pub mod svg;
pub mod transport;
pub mod tsn;

pub use case::Case;
pub use rolling::{run, Seeds, TimelineReport};
