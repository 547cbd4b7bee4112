//! Generalized k-FWER and k-FDR stepwise multiple testing.
//!
//! Critical values are defined through `F_k`, the distribution of the largest
//! of any `k` null p-values, and obtained by numerical inversion. The crate
//! covers schedule construction ([`schedules`]), stepup/stepdown decisions
//! ([`engine`]), `F_k` models ([`fk_models`]), Monte Carlo error-rate
//! estimation ([`simulation`]) and brute-force references ([`oracle`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod fk_models;
pub mod numerics;
pub mod oracle;
pub mod schedules;
pub mod simulation;

pub use engine::{apply, k_fdp, stepdown, stepup, DecisionOutcome, PValueSample, Truth};
pub use error::{Error, Result};
pub use fk_models::{fit_empirical_fk, FkKind, FkModel};
pub use schedules::{
    bh_classic, gen_bh, gen_by, gen_hochberg_stepup, gen_holm_stepdown, gen_simes,
    lehmann_romano_stepdown, rescaled_stepup, s_prime, BaseSpec, BinomialWeights,
    CriticalValueSchedule, Direction, Procedure, ProcedureSpec,
};
pub use simulation::{
    counterexample_bound, draw_sample, figure_sweep, run_experiment, CounterexampleBound,
    SimulationConfig, SimulationSummary,
};
