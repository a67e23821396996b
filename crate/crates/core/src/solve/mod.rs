//! Newton solves of `D_uΦ_λ(u) = 0`, Nehari projection, tangents and
//! natural-parameter continuation of the positive branch.

pub(crate) mod branch;
mod nehari;
pub(crate) mod newton;

pub use branch::{
    branch_tangent, continue_branch, continue_from, sign_changes, Branch, BranchNode, StepControl,
};
pub use nehari::{nehari_project, NehariProjection};
pub use newton::{effective_tolerance, gaussian_bump, newton_solve, seed_solution, NewtonOptions, Solution};
