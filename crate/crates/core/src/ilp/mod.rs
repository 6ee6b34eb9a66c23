//! Integer linear programming with exact arithmetic.
//!
//! Models are feasibility problems: bounded integer variables, linear rows,
//! and optional quadratic ball rows. [`solve`] decides them by depth-first
//! branch and bound over an exact rational simplex, so the answer is a
//! certificate (a satisfying assignment) or a proof of emptiness, never a
//! float-tolerance guess. [`export_lp`] writes models for external solvers.

mod export;
mod model;
mod propagate;
mod rat;
mod simplex;
mod solve;

pub use export::{export_lp, ExportError};
pub use model::{
    IlpModel, LinExpr, LinearConstraint, ModelBuildError, QuadraticConstraint, Relation, VarId,
    VarKind, Variable, Violation,
};
pub use rat::Rat;
pub use solve::{solve, Deadline, SolveResult, SolveStatus};
