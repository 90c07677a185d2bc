//! Benchmark-only crate; see `benches/kernels.rs`.

use std::f64::consts::PI;

use blowup_core::{Domain, Field, Grid};

/// `amplitude · sin x` on `(0, π)` with `n` interior nodes.
pub fn sine_field(n: usize, amplitude: f64) -> (Grid, Field) {
    let grid = Grid::new(Domain::interval(PI).unwrap(), n).unwrap();
    let u = grid.sample(|x| amplitude * x[0].sin()).unwrap();
    (grid, u)
}

/// `amplitude · sin x sin y` on `(0, π)²` with `n` nodes per side.
pub fn square_field(n: usize, amplitude: f64) -> (Grid, Field) {
    let grid = Grid::new(Domain::rectangle(PI, PI).unwrap(), n).unwrap();
    let u = grid.sample(|x| amplitude * x[0].sin() * x[1].sin()).unwrap();
    (grid, u)
}
