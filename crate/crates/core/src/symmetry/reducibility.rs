use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::report::CheckReport;

pub const DEFAULT_REDUCIBILITY_TOL: f64 = 1e-10;

/// Bases of `T_mS` and `D(m)` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspacePair {
    dim: usize,
    tangent: Vec<Vec<f64>>,
    distribution: Vec<Vec<f64>>,
}

impl SubspacePair {
    pub fn new(dim: usize, tangent: Vec<DVector<f64>>, distribution: Vec<DVector<f64>>) -> Result<SubspacePair> {
        for (name, basis) in [("tangent basis", &tangent), ("distribution basis", &distribution)] {
            if let Some(v) = basis.iter().find(|v| v.len() != dim) {
                return Err(Error::dim("subspace vector", dim, v.len()));
            }
            let m = linalg::columns(dim, basis);
            if !basis.is_empty() && linalg::rank(&m, 1e-12) != basis.len() {
                return Err(Error::Precondition(format!("{name} is linearly dependent")));
            }
        }
        Ok(SubspacePair {
            dim,
            tangent: tangent.iter().map(|v| v.as_slice().to_vec()).collect(),
            distribution: distribution.iter().map(|v| v.as_slice().to_vec()).collect(),
        })
    }

    /// `TS = R^n` with the given distribution.
    pub fn full_tangent(dim: usize, distribution: Vec<DVector<f64>>) -> Result<SubspacePair> {
        let e = (0..dim).map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
        SubspacePair::new(dim, e, distribution)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self, vs: &[Vec<f64>]) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = vs.iter().map(|v| DVector::from_column_slice(v)).collect();
        linalg::columns(self.dim, &cols)
    }

    pub fn tangent(&self) -> DMatrix<f64> {
        self.matrix(&self.tangent)
    }

    pub fn distribution(&self) -> DMatrix<f64> {
        self.matrix(&self.distribution)
    }
}

fn hstack(blocks: &[&DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (n, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

fn rank_rel(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.ncols() == 0 {
        0
    } else {
        linalg::rank(m, tol)
    }
}

/// Pointwise test of `B_L♯(D°) + B_R♯(D°) ⊂ TS + D` for the matrix `b = B(m)`.
///
/// `D°` is the null space of the matrix whose rows are the `D` basis; its
/// images under `α ↦ −Bᵀα` and `α ↦ Bα` are appended to `TS ∪ D` and the
/// inclusion holds iff the rank (threshold `tol·σ_max`) does not grow.
/// `max_residual` is the largest component of an image orthogonal to
/// `TS + D`, relative to the largest image norm.
pub fn pointwise_reducibility(b: &DMatrix<f64>, pair: &SubspacePair, tol: f64) -> Result<CheckReport> {
    let n = pair.dim;
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::dim("tensor at point", n, b.nrows()));
    }
    let d = pair.distribution();
    let annihilator = if d.ncols() == 0 {
        DMatrix::identity(n, n)
    } else {
        linalg::null_space(&d.transpose(), tol)
    };
    let left = -(b.transpose() * &annihilator);
    let right = b * &annihilator;
    let ts = pair.tangent();
    let base = hstack(&[&ts, &d], n);
    let augmented = hstack(&[&base, &left, &right], n);
    let rank_base = rank_rel(&base, tol);
    let rank_augmented = rank_rel(&augmented, tol);

    let images = hstack(&[&left, &right], n);
    let scale = (0..images.ncols()).map(|j| images.column(j).norm()).fold(0.0, f64::max);
    let residual = if scale == 0.0 {
        0.0
    } else {
        let q = linalg::column_space(&base, tol);
        let orth = &images - &q * (q.transpose() * &images);
        (0..orth.ncols()).map(|j| orth.column(j).norm()).fold(0.0, f64::max) / scale
    };
    let mut report = CheckReport {
        check: "reducibility".into(),
        passed: rank_base == rank_augmented,
        tolerance: tol,
        max_residual: residual,
        worst_point: None,
        samples: 1,
        values: Default::default(),
        notes: Vec::new(),
    };
    report = report
        .with_value("rank_ts_plus_d", rank_base as f64)
        .with_value("rank_with_images", rank_augmented as f64)
        .with_value("annihilator_dim", annihilator.ncols() as f64);
    Ok(report)
}
