//! Quasi-norms, parallelepipeds, weights and maximal operators on
//! anisotropic grids, with numerical checks of weighted estimates.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod family;
pub mod geometry;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod verify;
pub mod weights;
pub mod window;

pub use error::{Error, Result};
pub use expr::{sample, Expr};
pub use family::{BoxFamily, FamilyKind, Member, ScaleLadder};
pub use geometry::{box_quasi_norm, dilate_point, rho_quasi_norm, Anisotropy, Parallelepiped, RHO_TOL};
pub use grid::{Domain, Grid, GridFunction, IndexRange, SummedTable, SNAP_SLACK};
pub use verify::{CheckReport, Status, TestFunction};
pub use weights::{
    a1_characteristic, ap_characteristic, doubling_constants, power_ap_predicate, Backend, Weight, WeightMeasure,
};
pub use operators::{maximal, maximal_over_family, maximal_r, sharp_maximal, weighted_maximal, SharpMode};
pub use norms::{lp_norm, morrey_norm, weak_lp_norm, MorreyParams, MorreyValue};
