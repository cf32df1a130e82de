//! Benchmark fixtures shared by the criterion targets.

use blab_core::boussinesq::{desk_initial, SimState};
use blab_core::ensemble::{random_scalar, SpectrumSpec};
use blab_core::{Field, Grid};

/// Fixed-seed rough field on an `n x n` grid.
pub fn rough_field(n: usize) -> Field {
    let grid = Grid::standard(n).expect("valid grid size");
    random_scalar(&grid, SpectrumSpec::new(-2.0), 1)
}

/// Desk initial state on an `n x n` grid.
pub fn desk_state(n: usize) -> SimState {
    desk_initial(&Grid::standard(n).expect("valid grid size"))
}
