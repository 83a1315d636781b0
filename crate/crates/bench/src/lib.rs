//! Shared fixtures for the benchmarks in `benches/`.

use firefront_core::scenario_file::{load_bundled, ScenarioSetup};
use firefront_core::{signed_distance_from_circle, GridSpec, ScalarField};

/// Signed distance to a circle of radius 0.3 on an `n x n` grid over `[-1, 1]^2`.
pub fn circle(n: usize) -> ScalarField {
    let grid = GridSpec::from_extent(n, n, (-1.0, 1.0), (-1.0, 1.0)).expect("valid grid");
    signed_distance_from_circle(grid, (0.1, -0.05), 0.3).expect("valid circle")
}

pub fn bundled(name: &str) -> ScenarioSetup {
    load_bundled(name).expect("bundled scenario loads")
}
