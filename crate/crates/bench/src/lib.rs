//! Shared inputs for the operator benchmarks.

use aniso::verify::random_field;
use aniso::{Anisotropy, Domain, Grid, GridFunction};

/// A seeded random field on `[-1, 1]^n` with `cells` cells per axis.
pub fn field(cells: usize, dim: usize) -> (GridFunction, Anisotropy) {
    let domain = Domain::new(vec![-1.0; dim], vec![1.0; dim]).expect("valid domain");
    let grid = Grid::new(domain, vec![cells; dim]).expect("valid grid");
    (random_field(&grid, 7, 64), Anisotropy::isotropic(dim))
}

/// The same field with anisotropy `(1, 2)` and four times the cells on the
/// second axis.
pub fn field_2d_parabolic(cells: usize) -> (GridFunction, Anisotropy) {
    let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).expect("valid domain");
    let grid = Grid::new(domain, vec![cells, 4 * cells]).expect("valid grid");
    let a = Anisotropy::new(vec![1.0, 2.0]).expect("valid anisotropy");
    (random_field(&grid, 7, 16), a)
}
