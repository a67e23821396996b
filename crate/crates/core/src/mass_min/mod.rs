//! Constrained minimization of `E` on `S_c = {Q(u) = c}` and analysis of
//! the least-energy curve `c ↦ m(c)`.

mod counterexample;
mod curve;
mod expression;
mod minimize;

pub use counterexample::{counterexample_crossing, scaling_exponent, Crossing, CROSSING_RANGE};
pub use curve::{mass_curve, CurveOptions, CurveSample, MassCurve};
pub use expression::{
    expression_rhs, m_expression_check, pohozaev_multiplier, weight_moment, ExpressionReport, ExpressionRow,
};
pub use minimize::{
    lambda_set_scan, minimize_from, minimize_on_sphere, Cluster, FlowOptions, MinimizeOptions, MinimizerResult,
};
