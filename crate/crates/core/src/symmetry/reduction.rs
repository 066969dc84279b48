use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::momentum::ActionSpec;
use crate::bracket::{CoordinateChart, LeibnizSystem, LeibnizTensorField, ScalarField, SmoothMap};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::report::{scan_samples, CheckReport};

/// Residual allowed in `σ(s(r)) = r`.
pub const SECTION_TOL: f64 = 1e-10;

/// A quotient realized by invariant functions `σ_a` on `P` and a section
/// `s: reduced chart → P` with `σ(s(r)) = r`.
#[derive(Debug, Clone)]
pub struct InvariantReduction {
    reduced_chart: Arc<CoordinateChart>,
    invariants: Vec<ScalarField>,
    section: SmoothMap,
}

impl InvariantReduction {
    pub fn new(
        reduced_chart: Arc<CoordinateChart>,
        invariants: Vec<ScalarField>,
        section: SmoothMap,
    ) -> Result<InvariantReduction> {
        if invariants.len() != reduced_chart.dim() {
            return Err(Error::dim("invariants", reduced_chart.dim(), invariants.len()));
        }
        if section.source() != &reduced_chart {
            return Err(Error::Chart("section must be defined on the reduced chart".into()));
        }
        if let Some(first) = invariants.first() {
            if invariants.iter().any(|s| s.chart() != first.chart()) {
                return Err(Error::Chart("invariants live on different charts".into()));
            }
            if section.target_dim() != first.chart().dim() {
                return Err(Error::dim("section components", first.chart().dim(), section.target_dim()));
            }
        }
        Ok(InvariantReduction {
            reduced_chart,
            invariants,
            section,
        })
    }

    /// Invariants and section given as expression strings.
    pub fn parse<S: AsRef<str>>(
        chart: &Arc<CoordinateChart>,
        reduced_names: &[&str],
        invariants: &[S],
        section: &[S],
        params: &[(String, f64)],
    ) -> Result<InvariantReduction> {
        let reduced = CoordinateChart::new(reduced_names.iter().copied())?;
        let sigma = invariants
            .iter()
            .map(|s| ScalarField::parse_with(chart, s.as_ref(), params))
            .collect::<Result<Vec<_>>>()?;
        let comps: Vec<String> = section.iter().map(|s| s.as_ref().to_string()).collect();
        let section = SmoothMap::parse_with(&reduced, &comps, params)?;
        InvariantReduction::new(reduced, sigma, section)
    }

    pub fn reduced_chart(&self) -> &Arc<CoordinateChart> {
        &self.reduced_chart
    }

    pub fn invariants(&self) -> &[ScalarField] {
        &self.invariants
    }

    pub fn section(&self) -> &SmoothMap {
        &self.section
    }

    /// The quotient map `m ↦ (σ_1(m), …, σ_k(m))`.
    pub fn projection(&self) -> Result<SmoothMap> {
        let chart = self
            .invariants
            .first()
            .map(|s| s.chart().clone())
            .ok_or_else(|| Error::Precondition("reduction without invariants".into()))?;
        if let Some(exprs) = self.invariants.iter().map(|s| s.expr().cloned()).collect::<Option<Vec<_>>>() {
            return SmoothMap::symbolic(&chart, exprs);
        }
        let sig = self.invariants.clone();
        let k = sig.len();
        let sig2 = sig.clone();
        Ok(SmoothMap::analytic(
            &chart,
            k,
            move |m| DVector::from_iterator(k, sig.iter().map(|s| s.value(m).unwrap_or(f64::NAN))),
            Some(Arc::new(move |m: &[f64]| {
                let n = m.len();
                let mut j = DMatrix::from_element(k, n, f64::NAN);
                for (a, s) in sig2.iter().enumerate() {
                    if let Ok(g) = s.gradient(m) {
                        j.set_row(a, &g.transpose());
                    }
                }
                j
            })),
        ))
    }

    /// `max |σ(s(r)) − r|` over reduced samples.
    pub fn check_section(&self, reduced_samples: &[Vec<f64>]) -> Result<()> {
        for r in reduced_samples {
            let m = self.section.eval(r)?;
            let mut residual: f64 = 0.0;
            for (a, s) in self.invariants.iter().enumerate() {
                residual = residual.max((s.value(m.as_slice())? - r[a]).abs());
            }
            if !(residual <= SECTION_TOL) {
                return Err(Error::SectionIdentity {
                    point: r.clone(),
                    residual,
                });
            }
        }
        Ok(())
    }

    /// `B(dσ_a, dσ_b)(m)` as a `k×k` matrix.
    pub fn invariant_brackets(&self, tensor: &LeibnizTensorField, m: &[f64]) -> Result<DMatrix<f64>> {
        let b = tensor.matrix_at(m)?;
        let grads = self
            .invariants
            .iter()
            .map(|s| s.gradient(m))
            .collect::<Result<Vec<_>>>()?;
        let k = grads.len();
        Ok(DMatrix::from_fn(k, k, |a, c| grads[a].dot(&(&b * &grads[c]))))
    }
}

/// The reduced system: `B_red^{ab}(r) = ∇σ_a(s(r))ᵀ B(s(r)) ∇σ_b(s(r))` and
/// `h_red(r) = h(s(r))`; the regular domain is pulled back along `s`.
///
/// Expression-backed when the tensor, Hamiltonian, invariants and section
/// are; otherwise evaluated pointwise through the section.
pub fn reduce_by_invariants(
    system: &LeibnizSystem,
    red: &InvariantReduction,
    reduced_samples: &[Vec<f64>],
) -> Result<LeibnizSystem> {
    if red.invariants.first().map(|s| s.chart()) != Some(system.chart()) {
        return Err(Error::Chart("invariants must live on the system chart".into()));
    }
    red.check_section(reduced_samples)?;
    let chart = red.reduced_chart.clone();
    let k = chart.dim();
    let symmetry = system.tensor().symmetry();
    let symbolic = (|| {
        let s = red.section.components()?;
        let b = system.tensor().entries()?;
        let grads: Vec<&[Expr]> = red.invariants.iter().map(|x| x.gradient_exprs()).collect::<Option<_>>()?;
        let h = system.hamiltonian().expr()?.substitute(s);
        let domain = match system.domain() {
            Some(d) => Some(d.expr()?.substitute(s)),
            None => None,
        };
        let rows: Vec<Vec<Expr>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|c| {
                        let mut terms = Vec::new();
                        for (i, gi) in grads[a].iter().enumerate() {
                            if gi.is_zero() {
                                continue;
                            }
                            for (j, gj) in grads[c].iter().enumerate() {
                                if gj.is_zero() || b[i][j].is_zero() {
                                    continue;
                                }
                                terms.push(Expr::mul(Expr::mul(gi.clone(), b[i][j].clone()), gj.clone()));
                            }
                        }
                        Expr::sum(terms).substitute(s)
                    })
                    .collect()
            })
            .collect();
        Some((rows, h, domain))
    })();
    let reduced = match symbolic {
        Some((rows, h, domain)) => {
            let tensor = LeibnizTensorField::symbolic(&chart, rows, symmetry)?;
            let mut sys = LeibnizSystem::new(tensor, ScalarField::symbolic(&chart, h)?)?;
            if let Some(d) = domain {
                sys = sys.with_domain(ScalarField::symbolic(&chart, d)?)?;
            }
            sys
        }
        None => {
            let (r1, sys1) = (red.clone(), system.clone());
            let tensor = LeibnizTensorField::analytic(
                &chart,
                move |r| {
                    r1.section
                        .eval(r)
                        .and_then(|m| r1.invariant_brackets(sys1.tensor(), m.as_slice()))
                        .unwrap_or_else(|_| DMatrix::from_element(k, k, f64::NAN))
                },
                None,
                symmetry,
            );
            let (r2, sys2) = (red.clone(), system.clone());
            let h = ScalarField::finite_difference(
                &chart,
                move |r| {
                    r2.section
                        .eval(r)
                        .and_then(|m| sys2.hamiltonian().value(m.as_slice()))
                        .unwrap_or(f64::NAN)
                },
                1e-6,
            );
            let mut sys = LeibnizSystem::new(tensor, h)?;
            if system.domain().is_some() {
                let (r3, sys3) = (red.clone(), system.clone());
                let d = ScalarField::finite_difference(
                    &chart,
                    move |r| match r3.section.eval(r) {
                        Ok(m) if sys3.in_domain(m.as_slice()) => 1.0,
                        _ => -1.0,
                    },
                    1e-6,
                );
                sys = sys.with_domain(d)?;
            }
            sys
        }
    };
    Ok(reduced)
}

/// Orbit-constancy of the invariants and of their brackets: for sample `m_i`
/// and group element `g_i` (cycled), the larger of
/// `max |σ_a(m_i) − σ_a(g_i·m_i)|` and
/// `max |B(dσ_a,dσ_b)(m_i) − B(dσ_a,dσ_b)(g_i·m_i)|`.
pub fn welldefinedness_check(
    system: &LeibnizSystem,
    red: &InvariantReduction,
    action: &ActionSpec,
    samples: &[Vec<f64>],
    group_elements: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    let group = action
        .group()
        .ok_or_else(|| Error::Precondition("well-definedness needs a finite group action".into()))?;
    if group_elements.is_empty() {
        return Err(Error::EmptySamples);
    }
    system.check_samples(samples)?;
    let indexed: Vec<Vec<f64>> = samples
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut v = m.clone();
            v.push(i as f64);
            v
        })
        .collect();
    let n = system.dim();
    let scan = scan_samples(&indexed, |row| {
        let (m, i) = row.split_at(n);
        let g = &group_elements[i[0] as usize % group_elements.len()];
        let moved = group.act(g, m)?;
        system.check_domain(moved.as_slice())?;
        let mut worst: f64 = 0.0;
        for sigma in &red.invariants {
            worst = worst.max((sigma.value(m)? - sigma.value(moved.as_slice())?).abs());
        }
        let here = red.invariant_brackets(system.tensor(), m)?;
        let there = red.invariant_brackets(system.tensor(), moved.as_slice())?;
        Ok(worst.max((here - there).amax()))
    })?;
    let mut report = CheckReport::new("welldefinedness", tol, scan);
    if let Some(p) = report.worst_point.as_mut() {
        p.truncate(n);
    }
    Ok(report)
}
