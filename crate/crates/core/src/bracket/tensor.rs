use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::CoordinateChart;
use super::field::central_gradient;
use crate::error::{Error, Result};
use crate::expr::Expr;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
/// `∂_k B` for `k = 0..n`.
pub type MatrixDerivativeFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Finite-difference step for tensor derivatives, relative to `1 + |x_k|`.
pub const TENSOR_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Skew,
    Symmetric,
    General,
}

#[derive(Clone)]
enum TensorRepr {
    Symbolic {
        // row-major n×n
        entries: Arc<[Expr]>,
        // derivatives[k][i*n + j] = ∂_k B^{ij}
        derivatives: Arc<[Vec<Expr>]>,
    },
    Analytic {
        matrix: MatrixFn,
        derivative: Option<MatrixDerivativeFn>,
    },
}

/// Contravariant two-tensor `B^{ij}(m) = [x^i, x^j](m)` of a Leibniz bracket.
#[derive(Clone)]
pub struct LeibnizTensorField {
    chart: Arc<CoordinateChart>,
    repr: TensorRepr,
    symmetry: Symmetry,
}

impl fmt::Debug for LeibnizTensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LeibnizTensorField")
            .field("coordinates", &self.chart.names())
            .field("symmetry", &self.symmetry)
            .field("symbolic", &self.is_symbolic())
            .finish()
    }
}

impl LeibnizTensorField {
    pub fn symbolic(
        chart: &Arc<CoordinateChart>,
        rows: Vec<Vec<Expr>>,
        symmetry: Symmetry,
    ) -> Result<LeibnizTensorField> {
        let n = chart.dim();
        if rows.len() != n {
            return Err(Error::dim("tensor rows", n, rows.len()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::dim("tensor columns", n, row.len()));
            }
            for e in row {
                if let Some(i) = e.max_var_index() {
                    if i >= n {
                        return Err(Error::dim("tensor entry variables", n, i + 1));
                    }
                }
                entries.push(e);
            }
        }
        let derivatives: Vec<Vec<Expr>> = (0..n)
            .map(|k| entries.iter().map(|e| e.derivative(k)).collect())
            .collect();
        Ok(LeibnizTensorField {
            chart: chart.clone(),
            repr: TensorRepr::Symbolic {
                entries: entries.into(),
                derivatives: derivatives.into(),
            },
            symmetry,
        })
    }

    /// Builds a symbolic tensor from a dense table of expression strings.
    pub fn parse<S: AsRef<str>>(
        chart: &Arc<CoordinateChart>,
        rows: &[Vec<S>],
        symmetry: Symmetry,
    ) -> Result<LeibnizTensorField> {
        Self::parse_with(chart, rows, &[], symmetry)
    }

    pub fn parse_with<S: AsRef<str>>(
        chart: &Arc<CoordinateChart>,
        rows: &[Vec<S>],
        params: &[(String, f64)],
        symmetry: Symmetry,
    ) -> Result<LeibnizTensorField> {
        let parsed = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| chart.parse_with(s.as_ref(), params))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::symbolic(chart, parsed, symmetry)
    }

    pub fn analytic(
        chart: &Arc<CoordinateChart>,
        matrix: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        derivative: Option<MatrixDerivativeFn>,
        symmetry: Symmetry,
    ) -> LeibnizTensorField {
        LeibnizTensorField {
            chart: chart.clone(),
            repr: TensorRepr::Analytic {
                matrix: Arc::new(matrix),
                derivative,
            },
            symmetry,
        }
    }

    pub fn constant(chart: &Arc<CoordinateChart>, m: &DMatrix<f64>, symmetry: Symmetry) -> Result<Self> {
        let n = chart.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dim("constant tensor", n, m.nrows()));
        }
        let rows = (0..n)
            .map(|i| (0..n).map(|j| Expr::num(m[(i, j)])).collect())
            .collect();
        Self::symbolic(chart, rows, symmetry)
    }

    pub fn zero(chart: &Arc<CoordinateChart>) -> Self {
        let n = chart.dim();
        Self::constant(chart, &DMatrix::zeros(n, n), Symmetry::Skew).expect("square zero matrix")
    }

    pub fn chart(&self) -> &Arc<CoordinateChart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.repr, TensorRepr::Symbolic { .. })
    }

    /// Symbolic entry `B^{ij}` when expression-backed.
    pub fn entry(&self, i: usize, j: usize) -> Option<&Expr> {
        match &self.repr {
            TensorRepr::Symbolic { entries, .. } => entries.get(i * self.dim() + j),
            TensorRepr::Analytic { .. } => None,
        }
    }

    pub fn entries(&self) -> Option<Vec<Vec<Expr>>> {
        let n = self.dim();
        match &self.repr {
            TensorRepr::Symbolic { entries, .. } => {
                Some((0..n).map(|i| entries[i * n..(i + 1) * n].to_vec()).collect())
            }
            TensorRepr::Analytic { .. } => None,
        }
    }

    pub fn matrix_at(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check_point("tensor point", m)?;
        let n = self.dim();
        match &self.repr {
            TensorRepr::Symbolic { entries, .. } => {
                let mut out = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        out[(i, j)] = entries[i * n + j].eval(m)?;
                    }
                }
                Ok(out)
            }
            TensorRepr::Analytic { matrix, .. } => {
                let b = matrix(m);
                if b.nrows() != n || b.ncols() != n {
                    return Err(Error::dim("analytic tensor", n, b.nrows()));
                }
                Ok(b)
            }
        }
    }

    /// `∂_k B(m)` for every coordinate `k`.
    pub fn derivatives_at(&self, m: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.chart.check_point("tensor point", m)?;
        let n = self.dim();
        match &self.repr {
            TensorRepr::Symbolic { derivatives, .. } => derivatives
                .iter()
                .map(|dk| {
                    let mut out = DMatrix::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            out[(i, j)] = dk[i * n + j].eval(m)?;
                        }
                    }
                    Ok(out)
                })
                .collect(),
            TensorRepr::Analytic {
                derivative: Some(d),
                ..
            } => Ok(d(m)),
            TensorRepr::Analytic {
                matrix,
                derivative: None,
            } => {
                let mut out = vec![DMatrix::zeros(n, n); n];
                for i in 0..n {
                    for j in 0..n {
                        let g = central_gradient(|x| matrix(x)[(i, j)], m, TENSOR_FD_STEP)?;
                        for k in 0..n {
                            out[k][(i, j)] = g[k];
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Maximum violation of the declared symmetry flag over `samples`.
    pub fn symmetry_residual(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for m in samples {
            let b = self.matrix_at(m)?;
            let r = match self.symmetry {
                Symmetry::Skew => (&b + b.transpose()).amax(),
                Symmetry::Symmetric => (&b - b.transpose()).amax(),
                Symmetry::General => 0.0,
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// Fails if the symmetry flag is violated by more than `tol` at a sample.
    pub fn verify_symmetry(&self, samples: &[Vec<f64>], tol: f64) -> Result<()> {
        let r = self.symmetry_residual(samples)?;
        if r > tol {
            return Err(Error::Precondition(format!(
                "tensor declared {:?} but violates it by {r:e}",
                self.symmetry
            )));
        }
        Ok(())
    }

    /// Entrywise combination `a·self + b·other`, symbolic when both are.
    pub fn linear_combination(
        &self,
        a: f64,
        other: &LeibnizTensorField,
        b: f64,
        symmetry: Symmetry,
    ) -> Result<LeibnizTensorField> {
        if self.chart != other.chart {
            return Err(Error::Chart("tensors live on different charts".into()));
        }
        if let (Some(x), Some(y)) = (self.entries(), other.entries()) {
            let rows = x
                .into_iter()
                .zip(y)
                .map(|(rx, ry)| {
                    rx.into_iter()
                        .zip(ry)
                        .map(|(ex, ey)| {
                            Expr::add(Expr::mul(Expr::num(a), ex), Expr::mul(Expr::num(b), ey))
                        })
                        .collect()
                })
                .collect();
            return Self::symbolic(&self.chart, rows, symmetry);
        }
        let (s, o) = (self.clone(), other.clone());
        let n = self.dim();
        Ok(Self::analytic(
            &self.chart,
            move |m| {
                let x = s.matrix_at(m).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
                let y = o.matrix_at(m).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
                x * a + y * b
            },
            None,
            symmetry,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_and_analytic_derivatives_agree() {
        let c = CoordinateChart::new(["x", "y", "z"]).unwrap();
        let rows = vec![
            vec!["0", "x", "y"],
            vec!["-x", "0", "x"],
            vec!["-y", "-x", "0"],
        ]
        .into_iter()
        .map(|r| r.into_iter().map(String::from).collect())
        .collect::<Vec<Vec<String>>>();
        let sym = LeibnizTensorField::parse(&c, &rows, Symmetry::Skew).unwrap();
        let s2 = sym.clone();
        let ana = LeibnizTensorField::analytic(&c, move |m| s2.matrix_at(m).unwrap(), None, Symmetry::Skew);
        let p = [1.0, 2.0, 3.0];
        let ds = sym.derivatives_at(&p).unwrap();
        let da = ana.derivatives_at(&p).unwrap();
        for k in 0..3 {
            assert!((&ds[k] - &da[k]).amax() < 1e-8);
        }
        assert_eq!(sym.symmetry_residual(&[p.to_vec()]).unwrap(), 0.0);
    }

    #[test]
    fn wrong_flag_is_detected() {
        let c = CoordinateChart::new(["x", "y"]).unwrap();
        let b = LeibnizTensorField::constant(&c, &DMatrix::identity(2, 2), Symmetry::Skew).unwrap();
        assert!(b.verify_symmetry(&[vec![0.0, 0.0]], 1e-12).is_err());
    }
}
