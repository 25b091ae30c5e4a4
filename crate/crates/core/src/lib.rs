//! Spike-driven, asynchronous population optimizer for continuous
//! minimisation.
//!
//! Every candidate solution is held by a *neuromorphic heuristic unit*
//! (NHU): `d` two-state spiking neurons, one per coordinate. A position
//! component is encoded into a neuron state, advanced either by a dynamic
//! system (sub-threshold) or by a spike-triggered perturbation rule, and
//! decoded back into the search space. Units never share memory; they
//! exchange spikes, best positions and fitness values through message
//! passing with three population-level processes (tensor contraction,
//! neighbour manager, high-level selector).
//!
//! Module map:
//!
//! - [`problem`]: search domains, objective functions and the native
//!   benchmark suite.
//! - [`transform`]: the bidirectional position/state mapping and reference
//!   points.
//! - [`dynamics`]: neuron vector fields and fixed-step integrators.
//! - [`heuristics`]: spiking conditions, thresholds and spike rules.
//! - [`unit`]: the five per-unit processes.
//! - [`coordination`]: topologies and the population-level processes.
//! - [`runtime`]: deterministic and concurrent execution, traces, energy
//!   and runtime-scaling estimates.

pub mod coordination;
pub mod dynamics;
pub mod heuristics;
pub mod problem;
pub mod runtime;
pub mod seed;
pub mod transform;
pub mod unit;

pub use problem::{make_benchmark, ObjectiveFunction, SearchDomain};
pub use runtime::{run, ExecutionMode, RunConfig, RunTrace};
