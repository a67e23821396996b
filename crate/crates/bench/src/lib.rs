//! Shared fixtures for the solver benchmarks.

use normground::problem::{Model, ProblemSpec, RadialFunction};
use normground::RadialGrid;

/// 1D cubic NLS (`s = 1`, `p = 4`) on `[0, R)` with `n` cells.
pub fn cubic(n: usize, outer_radius: f64) -> Model {
    let spec = ProblemSpec::fractional_power(1.0, 1, 4.0, RadialFunction::constant(1.0)).expect("valid preset");
    Model::new(&spec, &RadialGrid::whole_space(1, n, outer_radius).expect("valid grid")).expect("valid model")
}

/// 1D fractional power with order `s`, `p = 3`.
pub fn fractional(s: f64, n: usize, outer_radius: f64) -> Model {
    let spec = ProblemSpec::fractional_power(s, 1, 3.0, RadialFunction::constant(1.0)).expect("valid preset");
    Model::new(&spec, &RadialGrid::whole_space(1, n, outer_radius).expect("valid grid")).expect("valid model")
}

/// Hardy-weighted problem on the unit ball, `N = 3`, `k = 1`, `p = 2.5`.
pub fn ball(n: usize) -> Model {
    let spec = ProblemSpec::ball_hardy(3, 1.0, 2.5).expect("valid preset");
    Model::new(&spec, &RadialGrid::unit_ball(3, n).expect("valid grid")).expect("valid model")
}
