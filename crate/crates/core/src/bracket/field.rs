use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::CoordinateChart;
use crate::error::{Error, Result};
use crate::expr::Expr;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Smallest finite-difference step tried before giving up near a boundary.
const MIN_FD_STEP: f64 = 1e-12;

#[derive(Clone)]
enum ScalarRepr {
    Symbolic { expr: Expr, gradient: Arc<[Expr]> },
    Analytic { value: PointFn, gradient: CovectorFn },
    FiniteDifference { value: PointFn, step: f64 },
}

/// A real function on a chart together with a way to obtain its gradient.
#[derive(Clone)]
pub struct ScalarField {
    chart: Arc<CoordinateChart>,
    repr: ScalarRepr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            ScalarRepr::Symbolic { expr, .. } => write!(f, "ScalarField({expr})"),
            ScalarRepr::Analytic { .. } => write!(f, "ScalarField(<analytic>)"),
            ScalarRepr::FiniteDifference { step, .. } => {
                write!(f, "ScalarField(<finite difference, step {step:e}>)")
            }
        }
    }
}

fn check_vars(chart: &CoordinateChart, expr: &Expr) -> Result<()> {
    if let Some(i) = expr.max_var_index() {
        if i >= chart.dim() {
            return Err(Error::dim("expression variables", chart.dim(), i + 1));
        }
    }
    Ok(())
}

impl ScalarField {
    pub fn symbolic(chart: &Arc<CoordinateChart>, expr: Expr) -> Result<ScalarField> {
        check_vars(chart, &expr)?;
        let gradient: Arc<[Expr]> = expr.gradient(chart.dim()).into();
        Ok(ScalarField {
            chart: chart.clone(),
            repr: ScalarRepr::Symbolic { expr, gradient },
        })
    }

    pub fn parse(chart: &Arc<CoordinateChart>, source: &str) -> Result<ScalarField> {
        ScalarField::symbolic(chart, chart.parse(source)?)
    }

    pub fn parse_with(
        chart: &Arc<CoordinateChart>,
        source: &str,
        params: &[(String, f64)],
    ) -> Result<ScalarField> {
        ScalarField::symbolic(chart, chart.parse_with(source, params)?)
    }

    pub fn constant(chart: &Arc<CoordinateChart>, value: f64) -> ScalarField {
        ScalarField::symbolic(chart, Expr::num(value)).expect("constants have no variables")
    }

    pub fn coordinate(chart: &Arc<CoordinateChart>, index: usize) -> Result<ScalarField> {
        if index >= chart.dim() {
            return Err(Error::dim("coordinate index", chart.dim(), index + 1));
        }
        ScalarField::symbolic(chart, chart.coordinate(index))
    }

    pub fn analytic(
        chart: &Arc<CoordinateChart>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField {
            chart: chart.clone(),
            repr: ScalarRepr::Analytic {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
            },
        }
    }

    /// Gradient by central differences with step `step·(1+|x_k|)`.
    pub fn finite_difference(
        chart: &Arc<CoordinateChart>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        step: f64,
    ) -> ScalarField {
        ScalarField {
            chart: chart.clone(),
            repr: ScalarRepr::FiniteDifference {
                value: Arc::new(value),
                step,
            },
        }
    }

    pub fn chart(&self) -> &Arc<CoordinateChart> {
        &self.chart
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            ScalarRepr::Symbolic { expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn gradient_exprs(&self) -> Option<&[Expr]> {
        match &self.repr {
            ScalarRepr::Symbolic { gradient, .. } => Some(gradient),
            _ => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.repr, ScalarRepr::Symbolic { .. })
    }

    pub fn value(&self, m: &[f64]) -> Result<f64> {
        self.chart.check_point("scalar field point", m)?;
        match &self.repr {
            ScalarRepr::Symbolic { expr, .. } => Ok(expr.eval(m)?),
            ScalarRepr::Analytic { value, .. } | ScalarRepr::FiniteDifference { value, .. } => {
                Ok(value(m))
            }
        }
    }

    pub fn gradient(&self, m: &[f64]) -> Result<DVector<f64>> {
        self.chart.check_point("scalar field point", m)?;
        match &self.repr {
            ScalarRepr::Symbolic { gradient, .. } => {
                let mut g = DVector::zeros(gradient.len());
                for (k, e) in gradient.iter().enumerate() {
                    g[k] = e.eval(m)?;
                }
                Ok(g)
            }
            ScalarRepr::Analytic { gradient, .. } => {
                let g = gradient(m);
                if g.len() != self.chart.dim() {
                    return Err(Error::dim("analytic gradient", self.chart.dim(), g.len()));
                }
                Ok(g)
            }
            ScalarRepr::FiniteDifference { value, step } => {
                central_gradient(|x| value(x), m, *step)
            }
        }
    }

    /// Sum `self + other` on the same chart.
    pub fn plus(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, 1.0)
    }

    /// Difference `self - other` on the same chart.
    pub fn minus(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &ScalarField, sign: f64) -> Result<ScalarField> {
        if self.chart != other.chart {
            return Err(Error::Chart("fields live on different charts".into()));
        }
        if let (Some(a), Some(b)) = (self.expr(), other.expr()) {
            let e = if sign > 0.0 {
                Expr::add(a.clone(), b.clone())
            } else {
                Expr::sub(a.clone(), b.clone())
            };
            return ScalarField::symbolic(&self.chart, e);
        }
        let (f, g) = (self.clone(), other.clone());
        let (f2, g2) = (self.clone(), other.clone());
        Ok(ScalarField::analytic(
            &self.chart,
            move |m| f.value(m).unwrap_or(f64::NAN) + sign * g.value(m).unwrap_or(f64::NAN),
            move |m| {
                let n = m.len();
                let a = f2.gradient(m).unwrap_or_else(|_| DVector::from_element(n, f64::NAN));
                let b = g2.gradient(m).unwrap_or_else(|_| DVector::from_element(n, f64::NAN));
                a + b * sign
            },
        ))
    }
}

/// Central-difference gradient with per-coordinate step `step·(1+|x_k|)`.
///
/// The step is halved while either stencil point produces a non-finite value;
/// this is how evaluations near a singular locus are handled.
pub fn central_gradient<F>(f: F, m: &[f64], step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = m.len();
    let mut g = DVector::zeros(n);
    let mut x = m.to_vec();
    for k in 0..n {
        let mut h = step * (1.0 + m[k].abs());
        loop {
            x[k] = m[k] + h;
            let fp = f(&x);
            x[k] = m[k] - h;
            let fm = f(&x);
            x[k] = m[k];
            if fp.is_finite() && fm.is_finite() {
                g[k] = (fp - fm) / (2.0 * h);
                break;
            }
            h *= 0.5;
            if h < MIN_FD_STEP * (1.0 + m[k].abs()) {
                return Err(Error::StepUnderflow {
                    point: m.to_vec(),
                    coordinate: k,
                });
            }
        }
    }
    Ok(g)
}

#[derive(Clone)]
enum MapRepr {
    Symbolic {
        components: Arc<[Expr]>,
        jacobian: Arc<[Expr]>,
    },
    Analytic {
        value: VectorFn,
        jacobian: Option<JacobianFn>,
    },
}

/// A smooth map from a chart into `R^k`; also used for vector fields
/// (`k = n`) and section maps of quotients.
#[derive(Clone)]
pub struct SmoothMap {
    source: Arc<CoordinateChart>,
    target_dim: usize,
    repr: MapRepr,
}

pub type VectorField = SmoothMap;

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            MapRepr::Symbolic { components, .. } => {
                let parts: Vec<String> = components.iter().map(|c| c.to_string()).collect();
                write!(f, "SmoothMap({})", parts.join(", "))
            }
            MapRepr::Analytic { .. } => write!(f, "SmoothMap(<analytic> -> R^{})", self.target_dim),
        }
    }
}

impl SmoothMap {
    pub fn symbolic(source: &Arc<CoordinateChart>, components: Vec<Expr>) -> Result<SmoothMap> {
        for c in &components {
            check_vars(source, c)?;
        }
        let n = source.dim();
        let jacobian: Vec<Expr> = components
            .iter()
            .flat_map(|c| (0..n).map(move |k| c.derivative(k)))
            .collect();
        Ok(SmoothMap {
            source: source.clone(),
            target_dim: components.len(),
            repr: MapRepr::Symbolic {
                components: components.into(),
                jacobian: jacobian.into(),
            },
        })
    }

    pub fn parse(source: &Arc<CoordinateChart>, components: &[&str]) -> Result<SmoothMap> {
        let exprs = components
            .iter()
            .map(|c| source.parse(c))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::symbolic(source, exprs)
    }

    pub fn parse_with(
        source: &Arc<CoordinateChart>,
        components: &[String],
        params: &[(String, f64)],
    ) -> Result<SmoothMap> {
        let exprs = components
            .iter()
            .map(|c| source.parse_with(c, params))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::symbolic(source, exprs)
    }

    /// Analytic map; when `jacobian` is `None` it is obtained by central
    /// differences.
    pub fn analytic(
        source: &Arc<CoordinateChart>,
        target_dim: usize,
        value: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        jacobian: Option<JacobianFn>,
    ) -> SmoothMap {
        SmoothMap {
            source: source.clone(),
            target_dim,
            repr: MapRepr::Analytic {
                value: Arc::new(value),
                jacobian,
            },
        }
    }

    pub fn identity(chart: &Arc<CoordinateChart>) -> SmoothMap {
        let comps = (0..chart.dim()).map(|i| chart.coordinate(i)).collect();
        SmoothMap::symbolic(chart, comps).expect("coordinates are valid")
    }

    /// Projection onto the listed coordinates.
    pub fn projection(chart: &Arc<CoordinateChart>, keep: &[usize]) -> Result<SmoothMap> {
        let comps = keep
            .iter()
            .map(|&i| {
                if i < chart.dim() {
                    Ok(chart.coordinate(i))
                } else {
                    Err(Error::dim("projection index", chart.dim(), i + 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::symbolic(chart, comps)
    }

    pub fn source(&self) -> &Arc<CoordinateChart> {
        &self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn components(&self) -> Option<&[Expr]> {
        match &self.repr {
            MapRepr::Symbolic { components, .. } => Some(components),
            MapRepr::Analytic { .. } => None,
        }
    }

    pub fn eval(&self, m: &[f64]) -> Result<DVector<f64>> {
        self.source.check_point("map point", m)?;
        match &self.repr {
            MapRepr::Symbolic { components, .. } => {
                let mut out = DVector::zeros(components.len());
                for (i, c) in components.iter().enumerate() {
                    out[i] = c.eval(m)?;
                }
                Ok(out)
            }
            MapRepr::Analytic { value, .. } => {
                let v = value(m);
                if v.len() != self.target_dim {
                    return Err(Error::dim("analytic map value", self.target_dim, v.len()));
                }
                Ok(v)
            }
        }
    }

    /// Jacobian matrix `∂φ^i/∂x^k` (rows: outputs, columns: source coordinates).
    pub fn jacobian(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        self.source.check_point("map point", m)?;
        let n = self.source.dim();
        match &self.repr {
            MapRepr::Symbolic { jacobian, .. } => {
                let mut out = DMatrix::zeros(self.target_dim, n);
                for i in 0..self.target_dim {
                    for k in 0..n {
                        out[(i, k)] = jacobian[i * n + k].eval(m)?;
                    }
                }
                Ok(out)
            }
            MapRepr::Analytic {
                jacobian: Some(jac),
                ..
            } => {
                let j = jac(m);
                if j.nrows() != self.target_dim || j.ncols() != n {
                    return Err(Error::dim("analytic jacobian rows", self.target_dim, j.nrows()));
                }
                Ok(j)
            }
            MapRepr::Analytic {
                value,
                jacobian: None,
            } => {
                let mut out = DMatrix::zeros(self.target_dim, n);
                for i in 0..self.target_dim {
                    let g = central_gradient(|x| value(x)[i], m, 1e-6)?;
                    out.set_row(i, &g.transpose());
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Arc<CoordinateChart> {
        CoordinateChart::new(["x", "y"]).unwrap()
    }

    #[test]
    fn representations_agree_on_gradient() {
        let c = chart();
        let sym = ScalarField::parse(&c, "x^2*y + sin(y)").unwrap();
        let ana = ScalarField::analytic(
            &c,
            |m| m[0] * m[0] * m[1] + m[1].sin(),
            |m| DVector::from_vec(vec![2.0 * m[0] * m[1], m[0] * m[0] + m[1].cos()]),
        );
        let fd = ScalarField::finite_difference(&c, |m| m[0] * m[0] * m[1] + m[1].sin(), 1e-5);
        let p = [0.7, -1.3];
        let g = sym.gradient(&p).unwrap();
        assert!((g.clone() - ana.gradient(&p).unwrap()).amax() < 1e-14);
        assert!((g - fd.gradient(&p).unwrap()).amax() < 1e-8);
    }

    #[test]
    fn dimension_checks() {
        let c = chart();
        let f = ScalarField::parse(&c, "x").unwrap();
        assert!(f.value(&[1.0]).is_err());
        let other = CoordinateChart::new(["x", "y", "z"]).unwrap();
        let e = other.parse("z").unwrap();
        assert!(ScalarField::symbolic(&c, e).is_err());
    }

    #[test]
    fn step_underflow_near_singularity() {
        let c = CoordinateChart::new(["x"]).unwrap();
        let f = ScalarField::finite_difference(&c, |m| if m[0] > 0.0 { m[0].ln() } else { f64::NAN }, 1e-5);
        assert!(f.gradient(&[0.0]).is_err());
        // truncation error h²·f'''/6 ≈ 0.033 at x = 1e-3
        assert!((f.gradient(&[1e-3]).unwrap()[0] - 1e3).abs() < 0.05);
    }

    #[test]
    fn map_jacobians() {
        let c = chart();
        let sym = SmoothMap::parse(&c, &["x*y", "exp(x)"]).unwrap();
        let ana = SmoothMap::analytic(
            &c,
            2,
            |m| DVector::from_vec(vec![m[0] * m[1], m[0].exp()]),
            None,
        );
        let p = [0.4, 2.0];
        assert!((sym.jacobian(&p).unwrap() - ana.jacobian(&p).unwrap()).amax() < 1e-8);
        assert_eq!(SmoothMap::projection(&c, &[1]).unwrap().eval(&p).unwrap()[0], 2.0);
    }
}
