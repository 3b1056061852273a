//! Eco-evolutionary dynamics under power-law mutation rates on a finite
//! trait graph.
//!
//! The crate has two halves that are meant to be compared against each
//! other:
//!
//! * [`limit`]: the deterministic `log K` time-scale limit. Population
//!   exponents `beta_w(t) = log(1 + N_w) / log K` are piecewise affine and
//!   the macroscopic state jumps between Lotka-Volterra equilibria.
//! * [`sim`]: an exact event-driven simulator of the individual-based
//!   birth, death, competition and mutation process with mutation
//!   probability `K^(-1/alpha)`.
//!
//! [`lv`] solves the mutation-free Lotka-Volterra system on trait subsets,
//! [`valley`] covers fitness-valley crossing rates, and [`fixtures`] holds
//! the worked example models with their machine-checked conditions.

pub mod asymptotics;
pub mod error;
pub mod fixtures;
pub mod limit;
pub mod lv;
pub mod model;
pub mod sim;
pub mod valley;

pub use error::{Error, Result};
pub use limit::{
    evaluate_beta, initial_exponents, jump_process, run_limit, run_limit_with, EventKind, EventLog,
    ExponentPath, InitialCondition, JumpProcessPath, LimitOptions, LimitRun, TerminationReason,
};
pub use lv::{
    equilibrium, equilibrium_with, genericity_check, invasion_fitness, monomorphic_equilibrium,
    FitnessTable, LvEquilibrium, LvOptions, Stability,
};
pub use model::{
    distances, set_distance, validate_model, validate_model_with, Distance, DistanceTable,
    ModelBuilder, ModelConfig, TraitGraphModel, ValidationOptions, ValidationReport,
};
