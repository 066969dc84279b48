//! Leibniz brackets on coordinate charts.
//!
//! A bracket is given by its contravariant tensor `B^{ij}`, with
//! `[f, g] = ∂_i f B^{ij} ∂_j g`. Neither skew-symmetry nor the Jacobi
//! identity is assumed, so Poisson, metric, metriplectic and constrained
//! brackets share the same machinery.

pub mod bracket;
pub mod definition;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod nonholonomic;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod symmetry;
pub mod systems;

pub use bracket::{
    CoordinateChart, LeibnizSystem, LeibnizTensorField, ScalarField, Side, SmoothMap, Symmetry, VectorField,
};
pub use error::{Error, Result};
pub use report::CheckReport;
