//! Constrained brackets `B̃ = π B` built from constraint functions `φ_a`
//! (with `TD = ker dφ`) and a complement `W = span{w_a}`.

use nalgebra::{DMatrix, DVector};

use crate::bracket::{LeibnizSystem, LeibnizTensorField, ScalarField, SmoothMap, Symmetry};
use crate::dynamics::{integrate, IntegratorConfig, Monitor};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use crate::report::{scan_samples, CheckReport, SampleScan};

/// Largest accepted condition number of `A_{ab} = dφ_a(w_b)`.
pub const TRANSVERSALITY_CONDITION_LIMIT: f64 = 1e12;

/// Constraint functions and complement fields on top of an ambient system.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    system: LeibnizSystem,
    constraints: Vec<ScalarField>,
    complement: Vec<SmoothMap>,
}

impl ConstraintSpec {
    pub fn new(system: LeibnizSystem, constraints: Vec<ScalarField>, complement: Vec<SmoothMap>) -> Result<Self> {
        if constraints.len() != complement.len() {
            return Err(Error::dim("complement fields", constraints.len(), complement.len()));
        }
        let chart = system.chart();
        if constraints.iter().any(|c| c.chart() != chart) {
            return Err(Error::Chart("constraint lives on a different chart".into()));
        }
        for w in &complement {
            if w.source() != chart {
                return Err(Error::Chart("complement field lives on a different chart".into()));
            }
            if w.target_dim() != chart.dim() {
                return Err(Error::dim("complement field components", chart.dim(), w.target_dim()));
            }
        }
        Ok(ConstraintSpec {
            system,
            constraints,
            complement,
        })
    }

    pub fn system(&self) -> &LeibnizSystem {
        &self.system
    }

    pub fn constraints(&self) -> &[ScalarField] {
        &self.constraints
    }

    pub fn complement(&self) -> &[SmoothMap] {
        &self.complement
    }

    pub fn codim(&self) -> usize {
        self.constraints.len()
    }

    /// `A_{ab}(m) = dφ_a(m) · w_b(m)`.
    pub fn transversality_matrix(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.codim();
        let dphi = self.differentials(m)?;
        let w = self.complement_at(m)?;
        Ok(DMatrix::from_fn(k, k, |a, b| dphi[a].dot(&w[b])))
    }

    fn differentials(&self, m: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.constraints.iter().map(|c| c.gradient(m)).collect()
    }

    fn complement_at(&self, m: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.complement.iter().map(|w| w.eval(m)).collect()
    }

    /// `π(m) = I − Σ_{ab} w_a (A^{-1})_{ab} dφ_b`: kernel `W(m)`, range `ker dφ(m)`.
    pub fn projector_at(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.system.dim();
        let k = self.codim();
        let mut pi = DMatrix::identity(n, n);
        if k == 0 {
            return Ok(pi);
        }
        let a = self.transversality_matrix(m)?;
        let ainv = invert_transversal(&a, m)?;
        let dphi = self.differentials(m)?;
        let w = self.complement_at(m)?;
        let wm = linalg::columns(n, &w);
        let mut dm = DMatrix::zeros(k, n);
        for (b, d) in dphi.iter().enumerate() {
            dm.set_row(b, &d.transpose());
        }
        pi -= wm * ainv * dm;
        Ok(pi)
    }

    /// Fails with a transversality error at the first sample where `A` is
    /// numerically singular.
    pub fn check_transversality(&self, samples: &[Vec<f64>]) -> Result<()> {
        for m in samples {
            invert_transversal(&self.transversality_matrix(m)?, m)?;
        }
        Ok(())
    }
}

fn invert_transversal(a: &DMatrix<f64>, m: &[f64]) -> Result<DMatrix<f64>> {
    let determinant = a.determinant();
    let condition = linalg::condition_number(a);
    let fail = || Error::Transversality {
        point: m.to_vec(),
        determinant,
        condition,
    };
    if !(condition.is_finite() && condition <= TRANSVERSALITY_CONDITION_LIMIT) {
        return Err(fail());
    }
    a.clone().try_inverse().ok_or_else(fail)
}

/// The constrained tensor `B̃(m) = π(m) B(m)`, so `X^R_H = π B ∇H`.
///
/// Expression-backed when every input is and `k ≤ 2` (the inverse of `A` is
/// written via its adjugate); otherwise evaluated pointwise. With no
/// constraints the ambient tensor is returned unchanged. The closed formula is
/// used on the whole chart, wherever `A` is invertible.
pub fn constrained_tensor(spec: &ConstraintSpec) -> Result<LeibnizTensorField> {
    let b = spec.system.tensor();
    if spec.codim() == 0 {
        return Ok(b.clone());
    }
    if let Some(rows) = symbolic_constrained(spec) {
        return LeibnizTensorField::symbolic(b.chart(), rows, Symmetry::General);
    }
    let n = spec.system.dim();
    let s = spec.clone();
    Ok(LeibnizTensorField::analytic(
        b.chart(),
        move |m| match (s.projector_at(m), s.system.tensor().matrix_at(m)) {
            (Ok(pi), Ok(bm)) => pi * bm,
            _ => DMatrix::from_element(n, n, f64::NAN),
        },
        None,
        Symmetry::General,
    ))
}

fn symbolic_constrained(spec: &ConstraintSpec) -> Option<Vec<Vec<Expr>>> {
    let k = spec.codim();
    if k > 2 {
        return None;
    }
    let n = spec.system.dim();
    let b = spec.system.tensor().entries()?;
    let dphi: Vec<&[Expr]> = spec
        .constraints
        .iter()
        .map(|c| c.gradient_exprs())
        .collect::<Option<_>>()?;
    let w: Vec<&[Expr]> = spec.complement.iter().map(|w| w.components()).collect::<Option<_>>()?;
    let dot = |a: &[Expr], v: &[Expr]| Expr::sum(a.iter().zip(v).map(|(x, y)| Expr::mul(x.clone(), y.clone())));
    let a: Vec<Vec<Expr>> = (0..k).map(|i| (0..k).map(|j| dot(dphi[i], w[j])).collect()).collect();
    // A^{-1} = adj(A) / det(A)
    let (det, adj) = if k == 1 {
        (a[0][0].clone(), vec![vec![Expr::one()]])
    } else {
        let det = Expr::sub(
            Expr::mul(a[0][0].clone(), a[1][1].clone()),
            Expr::mul(a[0][1].clone(), a[1][0].clone()),
        );
        let adj = vec![
            vec![a[1][1].clone(), Expr::neg(a[0][1].clone())],
            vec![Expr::neg(a[1][0].clone()), a[0][0].clone()],
        ];
        (det, adj)
    };
    let pi: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut terms = Vec::new();
                    for (ai, wa) in w.iter().enumerate() {
                        for (bi, db) in dphi.iter().enumerate() {
                            let t = Expr::mul(Expr::mul(wa[i].clone(), adj[ai][bi].clone()), db[j].clone());
                            if !t.is_zero() {
                                terms.push(t);
                            }
                        }
                    }
                    let delta = if i == j { Expr::one() } else { Expr::zero() };
                    Expr::sub(delta, Expr::div(Expr::sum(terms), det.clone()))
                })
                .collect()
        })
        .collect();
    Some(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Expr::sum((0..n).map(|l| Expr::mul(pi[i][l].clone(), b[l][j].clone()))))
                    .collect()
            })
            .collect(),
    )
}

/// The ambient system with its tensor replaced by the constrained one.
pub fn constrained_system(spec: &ConstraintSpec) -> Result<LeibnizSystem> {
    spec.system.with_tensor(constrained_tensor(spec)?)
}

/// Largest admissible `|φ_a(x0)|` for a drift run.
pub const ON_CONSTRAINT_TOL: f64 = 1e-12;

/// Integrates the constrained flow from `x0 ∈ D` and reports `max |φ_a|`.
pub fn constraint_drift(spec: &ConstraintSpec, x0: &[f64], cfg: &IntegratorConfig, tol: f64) -> Result<CheckReport> {
    for (a, phi) in spec.constraints.iter().enumerate() {
        let v = phi.value(x0)?;
        if !(v.abs() <= ON_CONSTRAINT_TOL) {
            return Err(Error::Precondition(format!(
                "initial point violates constraint {a}: |phi| = {:e}",
                v.abs()
            )));
        }
    }
    let system = constrained_system(spec)?;
    let monitors: Vec<Monitor> = spec
        .constraints
        .iter()
        .enumerate()
        .map(|(a, c)| Monitor::new(format!("phi{a}"), c.clone()))
        .collect();
    let traj = integrate(&system, x0, cfg, &monitors)?;
    if traj.truncated {
        return Err(Error::Truncated { time: traj.final_time() });
    }
    let mut scan = SampleScan::empty();
    let mut report_values = Vec::new();
    for (a, _) in monitors.iter().enumerate() {
        let mut worst = (0.0_f64, 0usize);
        for (k, row) in traj.monitors.iter().enumerate() {
            let v = if row[a].is_nan() { f64::INFINITY } else { row[a].abs() };
            if v > worst.0 {
                worst = (v, k);
            }
        }
        report_values.push((format!("max_abs_phi{a}"), worst.0));
        scan = scan.merge(SampleScan {
            max: worst.0,
            worst_point: Some(traj.states[worst.1].clone()),
            count: 0,
        });
    }
    scan.count = traj.len();
    let mut report = CheckReport::new("constraint-drift", tol, scan).with_value("t1", traj.final_time());
    for (k, v) in report_values {
        report = report.with_value(k, v);
    }
    Ok(report)
}

/// Checks that the constrained tensors of a family of specs agree entrywise
/// with the first member at every sample.
pub fn family_independence_check(members: &[ConstraintSpec], samples: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let Some(first) = members.first() else {
        return Err(Error::Precondition("empty constraint family".into()));
    };
    for spec in members {
        spec.check_transversality(samples)?;
    }
    let tensors = members.iter().map(constrained_tensor).collect::<Result<Vec<_>>>()?;
    if tensors.iter().any(|t| t.chart() != first.system.chart()) {
        return Err(Error::Chart("family members live on different charts".into()));
    }
    let scan = scan_samples(samples, |m| {
        let reference = tensors[0].matrix_at(m)?;
        let mut worst: f64 = 0.0;
        for t in &tensors[1..] {
            worst = worst.max((t.matrix_at(m)? - &reference).amax());
        }
        Ok(worst)
    })?;
    Ok(CheckReport::new("family-independence", tol, scan).with_value("members", members.len() as f64))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bracket::CoordinateChart;

    fn canonical6() -> (Arc<CoordinateChart>, LeibnizSystem) {
        let c = CoordinateChart::new(["x", "y", "z", "p_x", "p_y", "p_z"]).unwrap();
        let mut b = DMatrix::zeros(6, 6);
        for i in 0..3 {
            b[(i, i + 3)] = 1.0;
            b[(i + 3, i)] = -1.0;
        }
        let b = LeibnizTensorField::constant(&c, &b, Symmetry::Skew).unwrap();
        let h = ScalarField::parse(&c, "0.5*(p_x^2 + p_y^2 + p_z^2)").unwrap();
        (c.clone(), LeibnizSystem::new(b, h).unwrap())
    }

    fn particle(phi: &str) -> ConstraintSpec {
        let (c, s) = canonical6();
        ConstraintSpec::new(
            s,
            vec![ScalarField::parse(&c, phi).unwrap()],
            vec![SmoothMap::parse(&c, &["0", "0", "0", "1", "0", "y"]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn projector_contract() {
        let spec = particle("p_x + y*p_z - 1");
        let m = [0.3, -1.2, 2.0, 0.5, 0.7, -0.4];
        let pi = spec.projector_at(&m).unwrap();
        assert!((&pi * &pi - &pi).amax() < 1e-14);
        let w = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 0.0, m[1]]);
        assert!((&pi * w).amax() < 1e-15);
        // tangent to the level set: ∂_y − p_z ∂_{p_x}
        let v = DVector::from_vec(vec![0.0, 1.0, 0.0, -m[5], 0.0, 0.0]);
        assert!((&pi * &v - v).amax() < 1e-15);
        assert_eq!(linalg::rank(&pi, 1e-12), 5);
    }

    #[test]
    fn symbolic_and_pointwise_routes_agree() {
        let spec = particle("p_x + y*p_z - 1");
        let t = constrained_tensor(&spec).unwrap();
        assert!(t.is_symbolic());
        let m = [0.1, 0.9, -0.3, 1.5, -2.0, 0.25];
        let direct = spec.projector_at(&m).unwrap() * spec.system().tensor().matrix_at(&m).unwrap();
        assert!((t.matrix_at(&m).unwrap() - direct).amax() < 1e-14);
    }

    #[test]
    fn no_constraints_is_identity() {
        let (_, s) = canonical6();
        let spec = ConstraintSpec::new(s.clone(), vec![], vec![]).unwrap();
        let t = constrained_tensor(&spec).unwrap();
        let m = [0.0; 6];
        assert_eq!(t.matrix_at(&m).unwrap(), s.tensor().matrix_at(&m).unwrap());
    }

    #[test]
    fn transversality_failure_reports_diagnostics() {
        let (c, s) = canonical6();
        // w = ∂_x is tangent to {p_x = 0}
        let spec = ConstraintSpec::new(
            s,
            vec![ScalarField::parse(&c, "p_x").unwrap()],
            vec![SmoothMap::parse(&c, &["1", "0", "0", "0", "0", "0"]).unwrap()],
        )
        .unwrap();
        match spec.projector_at(&[0.0; 6]) {
            Err(Error::Transversality { determinant, condition, .. }) => {
                assert_eq!(determinant, 0.0);
                assert!(condition.is_infinite());
            }
            other => panic!("expected transversality error, got {other:?}"),
        }
    }

    #[test]
    fn drift_precondition() {
        let spec = particle("p_x + y*p_z");
        let cfg = IntegratorConfig::rk4(0.0, 1.0, 1e-2);
        assert!(matches!(
            constraint_drift(&spec, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &cfg, 1e-8),
            Err(Error::Precondition(_))
        ));
        let r = constraint_drift(&spec, &[0.0, 1.0, 0.0, 1.0, 1.0, -1.0], &cfg, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn two_constraints_use_adjugate() {
        let (c, s) = canonical6();
        let spec = ConstraintSpec::new(
            s,
            vec![
                ScalarField::parse(&c, "p_x + y*p_z").unwrap(),
                ScalarField::parse(&c, "p_y - x").unwrap(),
            ],
            vec![
                SmoothMap::parse(&c, &["0", "0", "0", "1", "0", "y"]).unwrap(),
                SmoothMap::parse(&c, &["0", "0", "0", "0", "1", "0"]).unwrap(),
            ],
        )
        .unwrap();
        let t = constrained_tensor(&spec).unwrap();
        assert!(t.is_symbolic());
        let m = [0.4, -0.6, 1.1, 0.2, 0.3, 0.9];
        let direct = spec.projector_at(&m).unwrap() * spec.system().tensor().matrix_at(&m).unwrap();
        assert!((t.matrix_at(&m).unwrap() - direct).amax() < 1e-14);
    }
}
