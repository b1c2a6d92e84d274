//! Optimization of tabbed menu layouts.
//!
//! A [`TaskInstance`] describes commands, their usage frequencies and
//! pairwise association scores. Layouts are scored either by a two-fold
//! objective (association reward against Fitts' law access time) or by an
//! information-foraging search cost, and can be optimized exactly
//! ([`solve_brute`], [`solve_bnb`]), heuristically ([`solve_anneal`]) or
//! exported as a mixed-integer program ([`milp`]).

pub mod adapt;
pub mod evaluator;
pub mod generate;
pub mod instance;
pub mod layout;
pub mod milp;
pub mod solver;

pub use adapt::{adapt_layout, personalize, sweep, AdaptError, TradeoffPoint};
pub use evaluator::{eval_adapted, eval_cost, eval_ift, eval_twofold, fitts_time, EvalError, IftBreakdown, ObjectiveKind};
pub use instance::{
    augment_with_loner, calibrate_lambdas, compute_expectations, parse_instance, serialize_instance, AssociationMatrix,
    Command, ExpectationMatrix, FittsParams, InstanceError, Lambdas, StructuralLimits, TaskInstance,
};
pub use layout::{layout_distance, LayoutDistance, LayoutError, MenuLayout, Tab};
pub use solver::{
    bnb_bound, solve_anneal, solve_anneal_problem, solve_bnb, solve_bnb_problem, solve_brute, solve_brute_problem,
    AnnealConfig, Method, Problem, SolveError, SolveReport, SolverChoice,
};
