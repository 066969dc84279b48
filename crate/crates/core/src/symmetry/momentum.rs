use std::sync::Arc;

use nalgebra::DVector;

use crate::bracket::{ops, CoordinateChart, LeibnizSystem, ScalarField, Side, SmoothMap};
use crate::dynamics::{drift_report, integrate, IntegratorConfig, Monitor};
use crate::error::{Error, Result};
use crate::report::{scan_samples, CheckReport, SampleScan};

/// Finite group elements acting on the chart: `g·m = map(m, params)`.
///
/// `map` is defined on the chart extended by the group parameters (point
/// coordinates first, then parameters).
#[derive(Debug, Clone)]
pub struct GroupAction {
    params: Vec<String>,
    map: SmoothMap,
}

impl GroupAction {
    pub fn new(chart: &Arc<CoordinateChart>, params: Vec<String>, map: SmoothMap) -> Result<GroupAction> {
        let extended: Vec<String> = chart.names().iter().cloned().chain(params.iter().cloned()).collect();
        if map.source().names() != extended.as_slice() {
            return Err(Error::Chart("group map must be defined on coordinates followed by parameters".into()));
        }
        if map.target_dim() != chart.dim() {
            return Err(Error::dim("group map components", chart.dim(), map.target_dim()));
        }
        Ok(GroupAction { params, map })
    }

    /// Parses component expressions over coordinates and group parameters.
    pub fn parse<S: AsRef<str>>(
        chart: &Arc<CoordinateChart>,
        params: &[&str],
        components: &[S],
        constants: &[(String, f64)],
    ) -> Result<GroupAction> {
        let ext = CoordinateChart::new(chart.names().iter().map(String::as_str).chain(params.iter().copied()))?;
        let comps: Vec<String> = components.iter().map(|c| c.as_ref().to_string()).collect();
        let map = SmoothMap::parse_with(&ext, &comps, constants)?;
        GroupAction::new(chart, params.iter().map(|p| p.to_string()).collect(), map)
    }

    pub fn param_dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn act(&self, group: &[f64], m: &[f64]) -> Result<DVector<f64>> {
        if group.len() != self.params.len() {
            return Err(Error::dim("group parameters", self.params.len(), group.len()));
        }
        let mut x = m.to_vec();
        x.extend_from_slice(group);
        self.map.eval(&x)
    }
}

/// Infinitesimal generators `ξ_P` for a basis of the Lie algebra, plus an
/// optional finite action for orbit sampling.
#[derive(Debug, Clone)]
pub struct ActionSpec {
    generators: Vec<SmoothMap>,
    group: Option<GroupAction>,
}

impl ActionSpec {
    pub fn new(generators: Vec<SmoothMap>, group: Option<GroupAction>) -> Result<ActionSpec> {
        for g in &generators {
            if g.target_dim() != g.source().dim() {
                return Err(Error::dim("generator components", g.source().dim(), g.target_dim()));
            }
        }
        Ok(ActionSpec { generators, group })
    }

    pub fn algebra_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[SmoothMap] {
        &self.generators
    }

    pub fn group(&self) -> Option<&GroupAction> {
        self.group.as_ref()
    }
}

/// Components `J^ξ` and integrating factors `f_ξ`, one per basis generator.
/// A missing factor is solved pointwise by least squares.
#[derive(Debug, Clone)]
pub struct MomentumMapSpec {
    pub components: Vec<ScalarField>,
    pub factors: Vec<Option<ScalarField>>,
}

impl MomentumMapSpec {
    pub fn new(components: Vec<ScalarField>, factors: Vec<Option<ScalarField>>) -> Result<MomentumMapSpec> {
        if components.len() != factors.len() {
            return Err(Error::dim("integrating factors", components.len(), factors.len()));
        }
        Ok(MomentumMapSpec { components, factors })
    }

    pub fn with_unknown_factors(components: Vec<ScalarField>) -> MomentumMapSpec {
        let factors = vec![None; components.len()];
        MomentumMapSpec { components, factors }
    }

    fn check_against(&self, action: &ActionSpec) -> Result<()> {
        if self.components.len() != action.algebra_dim() {
            return Err(Error::dim("momentum map components", action.algebra_dim(), self.components.len()));
        }
        Ok(())
    }
}

/// Least-squares `f` minimizing `‖x − f ξ‖`, and the remaining residual.
pub fn solve_factor(x: &DVector<f64>, xi: &DVector<f64>) -> (f64, f64) {
    let nn = xi.norm_squared();
    let f = if nn == 0.0 { 0.0 } else { xi.dot(x) / nn };
    (f, (x - xi * f).amax())
}

/// `max ‖X^L_{J^ξ}(m) − f_ξ(m) ξ_P(m)‖∞` over generators and samples.
///
/// For solved factors the report records their range as `factor{a}_min`
/// and `factor{a}_max`.
pub fn momentum_map_check(
    system: &LeibnizSystem,
    action: &ActionSpec,
    mm: &MomentumMapSpec,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    mm.check_against(action)?;
    system.check_samples(samples)?;
    let mut total = SampleScan::empty();
    let mut values = Vec::new();
    for (a, (j, xi)) in mm.components.iter().zip(action.generators()).enumerate() {
        let factor = mm.factors[a].as_ref();
        let residual_and_factor = |m: &[f64]| -> Result<(f64, f64)> {
            let x = ops::leibniz_vector_field(system.tensor(), j, m, Side::Left)?;
            let v = xi.eval(m)?;
            Ok(match factor {
                Some(f) => {
                    let f = f.value(m)?;
                    ((x - v * f).amax(), f)
                }
                None => {
                    let (f, r) = solve_factor(&x, &v);
                    (r, f)
                }
            })
        };
        let scan = scan_samples(samples, |m| residual_and_factor(m).map(|p| p.0))?;
        values.push((format!("residual{a}"), scan.max));
        if factor.is_none() {
            let fs = samples
                .iter()
                .map(|m| residual_and_factor(m).map(|p| p.1))
                .collect::<Result<Vec<_>>>()?;
            values.push((format!("factor{a}_min"), fs.iter().copied().fold(f64::INFINITY, f64::min)));
            values.push((format!("factor{a}_max"), fs.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
        }
        total = total.merge(SampleScan { count: 0, ..scan });
    }
    total.count = samples.len();
    let mut report = CheckReport::new("momentum", tol, total);
    for (k, v) in values {
        report = report.with_value(k, v);
    }
    Ok(report)
}

/// Tolerance on `|dh·ξ_P|` for the invariance hypothesis.
pub const INVARIANCE_TOL: f64 = 1e-9;

/// `max |dh(m)·ξ_P(m)|` over generators and samples.
pub fn invariance_residual(system: &LeibnizSystem, action: &ActionSpec, samples: &[Vec<f64>]) -> Result<SampleScan> {
    scan_samples(samples, |m| {
        let dh = system.hamiltonian().gradient(m)?;
        let mut worst: f64 = 0.0;
        for xi in action.generators() {
            worst = worst.max(dh.dot(&xi.eval(m)?).abs());
        }
        Ok(worst)
    })
}

/// Integrates `X^R_h` from `x0` and reports the largest drift of every
/// momentum-map component.
///
/// The invariance hypothesis `dh·ξ_P = 0` is checked at `samples`; when it
/// fails the report is marked failed and carries a note, but the drift is
/// still measured.
pub fn noether_drift(
    system: &LeibnizSystem,
    action: &ActionSpec,
    mm: &MomentumMapSpec,
    x0: &[f64],
    cfg: &IntegratorConfig,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    mm.check_against(action)?;
    let invariance = invariance_residual(system, action, samples)?;
    let monitors: Vec<Monitor> = mm
        .components
        .iter()
        .enumerate()
        .map(|(a, j)| Monitor::new(format!("J{a}"), j.clone()))
        .collect();
    let traj = integrate(system, x0, cfg, &monitors)?;
    if traj.truncated {
        return Err(Error::Truncated { time: traj.final_time() });
    }
    let mut scan = SampleScan::empty();
    let mut drifts = Vec::new();
    for m in &monitors {
        let d = drift_report(&traj, &m.name)?;
        drifts.push((format!("drift_{}", m.name), d.max_drift));
        scan = scan.merge(SampleScan {
            max: d.max_drift,
            worst_point: Some(vec![d.time_of_max]),
            count: 0,
        });
    }
    scan.count = traj.len();
    let invariant = invariance.max <= INVARIANCE_TOL;
    let mut report = CheckReport::new("noether", tol, scan)
        .with_value("invariance_residual", invariance.max)
        .with_note("worst_point holds the time of the largest drift");
    for (k, v) in drifts {
        report = report.with_value(k, v);
    }
    if !invariant {
        report.passed = false;
        report = report.with_note(format!(
            "hamiltonian is not invariant along the generators: |dh·xi| = {:e} > {INVARIANCE_TOL:e}",
            invariance.max
        ));
    }
    Ok(report)
}
