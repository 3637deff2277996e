//! Shortcuts to adiabaticity for the adiabatic Grover search.
//!
//! The search Hamiltonian `H(t) = A(t) (1 - |+><+|) + B(t) (1 - |0><0|)` is
//! reduced exactly to a two-level problem on `{|0>, |phi>}`. On top of that
//! reduction the crate provides
//!
//! - closed-form and quadrature-based annealing schedules ([`schedules`]),
//! - the counterdiabatic term and the adiabatic-error functionals
//!   ([`counterdiabatic`]),
//! - a fixed-step RK4 integrator in the two-level or dense representation
//!   ([`dynamics`]),
//! - invariant-based inverse engineering ([`inverse`]).
//!
//! ```
//! use grover_sta::{evolve, EvolutionConfig, Family, ProblemSize, Schedule, ScheduleSpec};
//!
//! let n = ProblemSize::new(16).unwrap();
//! let spec = ScheduleSpec::new(Family::CdLinear, n, 1.0).unwrap();
//! let schedule = Schedule::build(&spec).unwrap();
//! let run = evolve(&schedule, &EvolutionConfig::default().with_cd(true)).unwrap();
//! assert!(run.fidelity > 1.0 - 1e-6);
//! ```

// `!(x > y)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterdiabatic;
pub mod dynamics;
pub mod error;
pub mod inverse;
pub mod model;
pub mod quadrature;
pub mod schedules;

pub use counterdiabatic::{
    action, cd_coefficient, cd_spin, error_functionals, CdTerm, ErrorFunctionalSample, Functional,
    FunctionalParts,
};
pub use dynamics::{
    default_steps, evolve, log_grid, oracle_compare, scan_tf, EvolutionConfig, EvolutionResult,
    FinalState, Representation, ScanResult, ScanRow,
};
pub use error::{Error, Result};
pub use inverse::{
    default_plan, endpoint_commutators, evolve_inverse, invariant_residual, invariant_residual_at,
    plan_to_schedule, BlochPlan, InverseEvolution, InverseSchedule, Polynomial,
};
pub use model::{
    build_effective, gap, ground_state_of, initial_ground_state, EffectiveHamiltonian, ProblemSize,
    QubitState, SchedulePoint,
};
pub use schedules::{
    build_quadrature_table, eval_schedule, invert_quadrature, sample_times, Constraint, Family,
    Schedule, ScheduleFn, ScheduleSpec,
};
