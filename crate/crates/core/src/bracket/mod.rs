//! Charts, fields and the bracket tensor `B^{ij} = [x^i, x^j]`.

mod chart;
mod field;
pub mod ops;
mod system;
mod tensor;

pub use chart::CoordinateChart;
pub use field::{central_gradient, CovectorFn, JacobianFn, PointFn, ScalarField, SmoothMap, VectorField, VectorFn};
pub use ops::{JacobiMethod, Side};
pub use system::LeibnizSystem;
pub use tensor::{LeibnizTensorField, MatrixDerivativeFn, MatrixFn, Symmetry, TENSOR_FD_STEP};
