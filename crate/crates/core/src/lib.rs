//! Link scheduling under the physical (SINR) interference model.
//!
//! The crate models planar link topologies ([`geometry`]), affectance-based
//! feasibility ([`sinr`]), stochastic arrivals drawn from maximal feasible
//! sets ([`traffic`]), the Reflect and LQF transmission policies
//! ([`sched`]) and a slotted queue simulator with ρ-sweeps ([`sim`]).
//!
//! All math is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the scalar type.

pub mod error;
pub mod geometry;
pub mod scalar;
pub mod sched;
pub mod sim;
pub mod sinr;
pub mod traffic;

pub use error::{Error, Result};
pub use geometry::{distance, generate_random_topology, length_diversity, link_distance, Link, Point, Topology, TopologyParams};
pub use scalar::Scalar;
pub use sched::{Algorithm, QueueState, RateMode};
pub use sim::{MetricsSeries, RunParams, Scenario, SimConfig, StabilityCriteria, SweepResult, SweepSpec};
pub use sinr::{LinkSet, PowerAssignment, PowerKind, SinrModel};
pub use traffic::{FeasibleSetPool, TrafficModel};

pub type Point64 = Point<f64>;
pub type Link64 = Link<f64>;
pub type Topology64 = Topology<f64>;
pub type TopologyParams64 = TopologyParams<f64>;
pub type PowerAssignment64 = PowerAssignment<f64>;
pub type SinrModel64 = SinrModel<f64>;
pub type FeasibleSetPool64 = FeasibleSetPool<f64>;
pub type TrafficModel64 = TrafficModel<f64>;
pub type Scenario64 = Scenario<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type RunParams64 = RunParams<f64>;

pub type Point32 = Point<f32>;
pub type Link32 = Link<f32>;
pub type Topology32 = Topology<f32>;
pub type TopologyParams32 = TopologyParams<f32>;
pub type PowerAssignment32 = PowerAssignment<f32>;
pub type SinrModel32 = SinrModel<f32>;
pub type Scenario32 = Scenario<f32>;
