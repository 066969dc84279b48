//! Pointwise operations of a Leibniz bracket with fixed index convention
//! `[f, g] = ∂_i f B^{ij} ∂_j g`, `X^R_h = B ∇h`, `X^L_h = −Bᵀ ∇h`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::tensor::{LeibnizTensorField, Symmetry, TENSOR_FD_STEP};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use crate::report::{scan_samples, CheckReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// How the gradients of inner brackets in the Jacobiator are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobiMethod {
    /// Symbolic when the tensor and all three functions are expression-backed.
    #[default]
    Auto,
    /// Central differences of the inner bracket values.
    FiniteDifference,
}

fn same_chart(b: &LeibnizTensorField, f: &ScalarField) -> Result<()> {
    if b.chart() != f.chart() {
        return Err(Error::Chart("function and tensor live on different charts".into()));
    }
    Ok(())
}

/// `[f, g](m) = ∇f(m)ᵀ B(m) ∇g(m)`.
pub fn bracket_eval(b: &LeibnizTensorField, f: &ScalarField, g: &ScalarField, m: &[f64]) -> Result<f64> {
    same_chart(b, f)?;
    same_chart(b, g)?;
    let bm = b.matrix_at(m)?;
    let df = f.gradient(m)?;
    let dg = g.gradient(m)?;
    Ok(df.dot(&(bm * dg)))
}

/// Right: `(X^R_h)^i = B^{ij} ∂_j h`; left: `(X^L_h)^j = −∂_i h B^{ij}`.
pub fn leibniz_vector_field(
    b: &LeibnizTensorField,
    h: &ScalarField,
    m: &[f64],
    side: Side,
) -> Result<DVector<f64>> {
    same_chart(b, h)?;
    let bm = b.matrix_at(m)?;
    let dh = h.gradient(m)?;
    Ok(match side {
        Side::Right => bm * dh,
        Side::Left => -(bm.transpose() * dh),
    })
}

/// The function `[f, g]` as a scalar field.
///
/// Symbolic when everything is expression-backed, so that its gradient is
/// exact; otherwise its gradient is taken by central differences.
pub fn bracket_field(b: &LeibnizTensorField, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    bracket_field_with(b, f, g, JacobiMethod::Auto)
}

fn bracket_field_with(
    b: &LeibnizTensorField,
    f: &ScalarField,
    g: &ScalarField,
    method: JacobiMethod,
) -> Result<ScalarField> {
    same_chart(b, f)?;
    same_chart(b, g)?;
    let n = b.dim();
    if method == JacobiMethod::Auto {
        if let (true, Some(df), Some(dg)) = (b.is_symbolic(), f.gradient_exprs(), g.gradient_exprs()) {
            let mut terms = Vec::new();
            for i in 0..n {
                if df[i].is_zero() {
                    continue;
                }
                for j in 0..n {
                    let bij = b.entry(i, j).expect("symbolic tensor");
                    if bij.is_zero() || dg[j].is_zero() {
                        continue;
                    }
                    terms.push(Expr::mul(Expr::mul(df[i].clone(), bij.clone()), dg[j].clone()));
                }
            }
            return ScalarField::symbolic(b.chart(), Expr::sum(terms));
        }
    }
    let (b, f, g) = (b.clone(), f.clone(), g.clone());
    let chart = b.chart().clone();
    Ok(ScalarField::finite_difference(
        &chart,
        move |m| bracket_eval(&b, &f, &g, m).unwrap_or(f64::NAN),
        TENSOR_FD_STEP,
    ))
}

/// `𝔍(f,g,h) = [[f,g],h] + [[g,h],f] + [[h,f],g]` at `m`.
pub fn jacobiator(
    b: &LeibnizTensorField,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    m: &[f64],
) -> Result<f64> {
    jacobiator_with(b, f, g, h, m, JacobiMethod::Auto)
}

pub fn jacobiator_with(
    b: &LeibnizTensorField,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    m: &[f64],
    method: JacobiMethod,
) -> Result<f64> {
    let fg = bracket_field_with(b, f, g, method)?;
    let gh = bracket_field_with(b, g, h, method)?;
    let hf = bracket_field_with(b, h, f, method)?;
    Ok(bracket_eval(b, &fg, h, m)? + bracket_eval(b, &gh, f, m)? + bracket_eval(b, &hf, g, m)?)
}

/// Pointwise split into `((B−Bᵀ)/2, (B+Bᵀ)/2)`.
pub fn decompose(b: &LeibnizTensorField) -> Result<(LeibnizTensorField, LeibnizTensorField)> {
    let chart = b.chart();
    let n = b.dim();
    if let Some(e) = b.entries() {
        let part = |sign: f64| -> Vec<Vec<Expr>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let t = Expr::mul(Expr::num(sign), e[j][i].clone());
                            Expr::mul(Expr::num(0.5), Expr::add(e[i][j].clone(), t))
                        })
                        .collect()
                })
                .collect()
        };
        return Ok((
            LeibnizTensorField::symbolic(chart, part(-1.0), Symmetry::Skew)?,
            LeibnizTensorField::symbolic(chart, part(1.0), Symmetry::Symmetric)?,
        ));
    }
    let (b1, b2) = (b.clone(), b.clone());
    let nan = move || DMatrix::from_element(n, n, f64::NAN);
    let skew = LeibnizTensorField::analytic(
        chart,
        move |m| {
            let x = b1.matrix_at(m).unwrap_or_else(|_| nan());
            (&x - x.transpose()) * 0.5
        },
        None,
        Symmetry::Skew,
    );
    let sym = LeibnizTensorField::analytic(
        chart,
        move |m| {
            let x = b2.matrix_at(m).unwrap_or_else(|_| nan());
            (&x + x.transpose()) * 0.5
        },
        None,
        Symmetry::Symmetric,
    );
    Ok((skew, sym))
}

/// Left Casimir: `∇fᵀ B = 0`; right Casimir: `B ∇f = 0`, at every sample.
pub fn is_casimir(
    b: &LeibnizTensorField,
    f: &ScalarField,
    side: Side,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    same_chart(b, f)?;
    let scan = scan_samples(samples, |m| {
        let bm = b.matrix_at(m)?;
        let df = f.gradient(m)?;
        let r = match side {
            Side::Left => bm.transpose() * df,
            Side::Right => bm * df,
        };
        Ok(linalg::max_abs_vec(&r))
    })?;
    let name = match side {
        Side::Left => "casimir-left",
        Side::Right => "casimir-right",
    };
    Ok(CheckReport::new(name, tol, scan))
}

/// Orthonormal basis (columns) of the image of `B_R♯: v ↦ B v` or
/// `B_L♯: v ↦ −Bᵀ v` at `m`.
pub fn characteristic_image(b: &LeibnizTensorField, m: &[f64], side: Side) -> Result<DMatrix<f64>> {
    let bm = b.matrix_at(m)?;
    let op = match side {
        Side::Right => bm,
        Side::Left => -bm.transpose(),
    };
    Ok(linalg::column_space(&op, linalg::default_rank_tol(b.dim())))
}

/// The covariant tensor `W = (Bᵀ)^{-1}` with `X_fᵀ W X_g = [f, g]`.
pub fn leibniz_form(b: &LeibnizTensorField, m: &[f64]) -> Result<DMatrix<f64>> {
    let bm = b.matrix_at(m)?;
    let n = b.dim();
    let sv = linalg::singular_values(&bm);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= linalg::default_rank_tol(n) * smax {
        return Err(Error::Degenerate {
            point: m.to_vec(),
            condition: if smin == 0.0 { f64::INFINITY } else { smax / smin },
        });
    }
    bm.transpose().try_inverse().ok_or_else(|| Error::Degenerate {
        point: m.to_vec(),
        condition: smax / smin,
    })
}

/// `h1` and `h2` are equivalent when `B (∇h1 − ∇h2) = 0` at every sample.
pub fn equivalent_hamiltonians(
    b: &LeibnizTensorField,
    h1: &ScalarField,
    h2: &ScalarField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    same_chart(b, h1)?;
    same_chart(b, h2)?;
    let scan = scan_samples(samples, |m| {
        let d = h1.gradient(m)? - h2.gradient(m)?;
        Ok(linalg::max_abs_vec(&(b.matrix_at(m)? * d)))
    })?;
    Ok(CheckReport::new("equivalence", tol, scan))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bracket::CoordinateChart;

    fn canonical() -> (Arc<CoordinateChart>, LeibnizTensorField) {
        let c = CoordinateChart::new(["q", "p"]).unwrap();
        let b = LeibnizTensorField::constant(
            &c,
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            Symmetry::Skew,
        )
        .unwrap();
        (c, b)
    }

    fn euclid() -> (Arc<CoordinateChart>, LeibnizTensorField) {
        let c = CoordinateChart::new(["x", "y"]).unwrap();
        let b = LeibnizTensorField::constant(&c, &DMatrix::identity(2, 2), Symmetry::Symmetric).unwrap();
        (c, b)
    }

    fn f(c: &Arc<CoordinateChart>, s: &str) -> ScalarField {
        ScalarField::parse(c, s).unwrap()
    }

    #[test]
    fn canonical_pairing() {
        let (c, b) = canonical();
        for m in [[0.0, 0.0], [1.5, -2.0]] {
            assert_eq!(bracket_eval(&b, &f(&c, "q"), &f(&c, "p"), &m).unwrap(), 1.0);
            let h = f(&c, "q^3*p + sin(p)");
            assert_eq!(bracket_eval(&b, &h, &h, &m).unwrap(), 0.0);
        }
    }

    #[test]
    fn harmonic_oscillator_vector_field() {
        let (c, b) = canonical();
        let h = f(&c, "0.5*(q^2 + p^2)");
        let x = leibniz_vector_field(&b, &h, &[1.0, 0.0], Side::Right).unwrap();
        assert_eq!(x.as_slice(), &[0.0, -1.0]);
        let l = leibniz_vector_field(&b, &h, &[1.0, 0.0], Side::Left).unwrap();
        assert_eq!(x, l);
    }

    #[test]
    fn metric_vector_field_is_gradient() {
        let (c, b) = euclid();
        let h = f(&c, "0.5*(x^2 + y^2)");
        let x = leibniz_vector_field(&b, &h, &[3.0, 4.0], Side::Right).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);
        let l = leibniz_vector_field(&b, &h, &[3.0, 4.0], Side::Left).unwrap();
        assert_eq!(l, -x);
    }

    #[test]
    fn euclidean_jacobiator_value() {
        // [y²,xy]=2xy, [2xy,x²]=4xy, [xy,x²]=2xy, [2xy,y²]=4xy → 8xy
        let (c, b) = euclid();
        let (p, q, r) = (f(&c, "x^2"), f(&c, "y^2"), f(&c, "x*y"));
        let j = jacobiator(&b, &p, &q, &r, &[1.0, 1.0]).unwrap();
        assert!((j - 8.0).abs() < 1e-12);
        let jfd = jacobiator_with(&b, &p, &q, &r, &[1.0, 1.0], JacobiMethod::FiniteDifference).unwrap();
        assert!((jfd - 8.0).abs() < 1e-6);
    }

    #[test]
    fn constant_skew_tensor_satisfies_jacobi() {
        let (c, b) = canonical();
        let (p, q, r) = (f(&c, "q^2*p"), f(&c, "sin(q) + p^3"), f(&c, "exp(p)*q"));
        for m in [[0.3, 0.1], [-1.0, 0.7]] {
            assert!(jacobiator(&b, &p, &q, &r, &m).unwrap().abs() < 1e-9);
            assert!(jacobiator_with(&b, &p, &q, &r, &m, JacobiMethod::FiniteDifference).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn decomposition_of_pure_parts() {
        let (_, b) = canonical();
        let (skew, sym) = decompose(&b).unwrap();
        let m = [0.0, 0.0];
        assert_eq!(skew.matrix_at(&m).unwrap(), b.matrix_at(&m).unwrap());
        assert_eq!(sym.matrix_at(&m).unwrap().amax(), 0.0);
        let (_, e) = euclid();
        let (skew, sym) = decompose(&e).unwrap();
        assert_eq!(skew.matrix_at(&m).unwrap().amax(), 0.0);
        assert_eq!(sym.matrix_at(&m).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn nondegenerate_bracket_has_no_coordinate_casimir() {
        let (c, b) = canonical();
        let samples = vec![vec![0.5, 0.5], vec![1.0, -2.0]];
        for side in [Side::Left, Side::Right] {
            let r = is_casimir(&b, &f(&c, "q"), side, &samples, 1e-12).unwrap();
            assert!(!r.passed);
            assert_eq!(r.max_residual, 1.0);
        }
        assert!(is_casimir(&b, &f(&c, "q"), Side::Left, &[], 1e-12).is_err());
    }

    #[test]
    fn ranks_of_characteristic_images() {
        let c = CoordinateChart::new(["q1", "q2", "p1", "p2"]).unwrap();
        let mut j = DMatrix::zeros(4, 4);
        j[(0, 2)] = 1.0;
        j[(1, 3)] = 1.0;
        j[(2, 0)] = -1.0;
        j[(3, 1)] = -1.0;
        let b = LeibnizTensorField::constant(&c, &j, Symmetry::Skew).unwrap();
        let m = [0.0; 4];
        assert_eq!(characteristic_image(&b, &m, Side::Right).unwrap().ncols(), 4);
        let z = LeibnizTensorField::zero(&c);
        assert_eq!(characteristic_image(&z, &m, Side::Left).unwrap().ncols(), 0);
    }

    #[test]
    fn leibniz_forms() {
        let (_, b) = canonical();
        let w = leibniz_form(&b, &[0.0, 0.0]).unwrap();
        assert_eq!(w, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let (_, e) = euclid();
        assert_eq!(leibniz_form(&e, &[0.0, 0.0]).unwrap(), DMatrix::identity(2, 2));
        let c = CoordinateChart::new(["x", "y"]).unwrap();
        let z = LeibnizTensorField::zero(&c);
        assert!(matches!(leibniz_form(&z, &[0.0, 0.0]), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn equivalence_of_hamiltonians() {
        let (c, b) = canonical();
        let samples = vec![vec![0.2, 0.3], vec![-1.0, 2.0]];
        let h = f(&c, "q^2*p");
        let r = equivalent_hamiltonians(&b, &h, &f(&c, "q^2*p + 17"), &samples, 1e-12).unwrap();
        assert!(r.passed);
        let r = equivalent_hamiltonians(&b, &f(&c, "q"), &f(&c, "p"), &samples, 1e-12).unwrap();
        assert!(!r.passed);
    }
}
