//! Built-in catalog of worked examples.
//!
//! Every entry is a [`LeibnizSystem`] together with the data needed to check
//! it: sample boxes avoiding singular loci, Casimir and equivalence claims,
//! constraint/action/momentum/reduction specs, and displayed matrices kept
//! verbatim as oracle data next to the formula-built tensors.

mod examples;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bracket::{CoordinateChart, LeibnizSystem, LeibnizTensorField, ScalarField, Side};
use crate::dynamics::Monitor;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use crate::nonholonomic::ConstraintSpec;
use crate::sampling::{rng_from_seed, SampleBox};
use crate::report::{scan_samples, CheckReport};
use crate::symmetry::{reduce_by_invariants, ActionSpec, InvariantReduction, MomentumMapSpec, SubspacePair};

/// Seed of the build-time symmetry-flag verification.
const BUILD_CHECK_SEED: u64 = 0x5eed;
/// Points used by build-time verifications.
const BUILD_CHECK_POINTS: usize = 32;
/// Entrywise tolerance of build-time verifications.
pub const BUILD_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Number,
    Integer,
    Flag,
    /// Rows separated by `;`, entries by `,`, each an expression.
    Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: &'static str,
    pub doc: &'static str,
}

/// Listing record for one catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSpec>,
}

/// A function claimed to be a Casimir on one side.
#[derive(Debug, Clone)]
pub struct CasimirClaim {
    pub label: String,
    pub field: ScalarField,
    pub side: Side,
}

/// A matrix of expressions transcribed verbatim, evaluated on `chart`.
#[derive(Debug, Clone)]
pub struct OracleMatrix {
    pub name: String,
    pub chart: Arc<CoordinateChart>,
    pub rows: Vec<Vec<Expr>>,
}

impl OracleMatrix {
    fn parse(name: &str, chart: &Arc<CoordinateChart>, rows: &[&[&str]], params: &[(String, f64)]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| chart.parse_with(s, params)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(OracleMatrix {
            name: name.to_string(),
            chart: chart.clone(),
            rows,
        })
    }

    pub fn eval(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check_point("oracle point", m)?;
        let r = self.rows.len();
        let c = self.rows.first().map_or(0, Vec::len);
        let mut out = DMatrix::zeros(r, c);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[(i, j)] = e.eval(m)?;
            }
        }
        Ok(out)
    }
}

pub type BasisFn = Arc<dyn Fn(&[f64]) -> Result<Vec<DVector<f64>>> + Send + Sync>;
pub type ProjectFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A submanifold `S` (reached by projecting box samples onto it) with its
/// tangent spaces, and named distributions `D` for the reducibility test.
#[derive(Clone)]
pub struct ReducibilitySetup {
    pub submanifold: String,
    pub project: ProjectFn,
    pub tangent: BasisFn,
    pub distributions: Vec<(String, BasisFn)>,
}

impl std::fmt::Debug for ReducibilitySetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.distributions.iter().map(|d| d.0.as_str()).collect();
        write!(f, "ReducibilitySetup({}, {names:?})", self.submanifold)
    }
}

/// A reduction by invariants together with the system it applies to.
#[derive(Debug, Clone)]
pub struct CatalogReduction {
    /// The system being reduced; its Hamiltonian may differ from the entry's.
    pub source: LeibnizSystem,
    pub reduction: InvariantReduction,
    pub action: ActionSpec,
    pub reduced_box: SampleBox,
    pub group_box: SampleBox,
}

/// An instantiated catalog system.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub params: BTreeMap<String, String>,
    pub system: LeibnizSystem,
    pub sample_box: SampleBox,
    pub default_x0: Vec<f64>,
    pub monitors: Vec<Monitor>,
    pub casimirs: Vec<CasimirClaim>,
    pub equivalent_hamiltonian: Option<ScalarField>,
    pub constraint: Option<ConstraintSpec>,
    pub action: Option<ActionSpec>,
    pub momentum: Option<MomentumMapSpec>,
    pub reduction: Option<CatalogReduction>,
    pub reducibility: Option<ReducibilitySetup>,
    /// Named summands of the tensor (e.g. skew and symmetric parts).
    pub parts: Vec<(String, LeibnizTensorField)>,
    pub oracles: Vec<OracleMatrix>,
}

impl CatalogEntry {
    pub fn chart(&self) -> &Arc<CoordinateChart> {
        self.system.chart()
    }

    pub fn oracle(&self, name: &str) -> Option<&OracleMatrix> {
        self.oracles.iter().find(|o| o.name == name)
    }

    pub fn part(&self, name: &str) -> Option<&LeibnizTensorField> {
        self.parts.iter().find(|p| p.0 == name).map(|p| &p.1)
    }

    /// `count` seeded points of the default box inside the regular domain.
    pub fn samples(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng_from_seed(seed);
        self.sample_box.sample(&mut rng, count, |m| self.system.in_domain(m))
    }

    /// Seeded points of the reduced box inside the reduced regular domain.
    pub fn reduced_samples(&self, reduced: &LeibnizSystem, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        let red = self
            .reduction
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("{} has no reduction", self.name)))?;
        let mut rng = rng_from_seed(seed);
        red.reduced_box.sample(&mut rng, count, |r| reduced.in_domain(r))
    }

    /// Seeded group elements for orbit checks.
    pub fn group_samples(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        let red = self
            .reduction
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("{} has no reduction", self.name)))?;
        let mut rng = rng_from_seed(seed);
        red.group_box.sample(&mut rng, count, |_| true)
    }

    /// Tangent space of the chosen submanifold and the chosen distribution at
    /// `m`. `"full"` names `R^n` and `"zero"` the trivial distribution.
    pub fn reducibility_pair(&self, submanifold: &str, distribution: &str, m: &[f64]) -> Result<SubspacePair> {
        let n = self.system.dim();
        let unit = |i: usize| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
        let setup = self.reducibility.as_ref();
        let tangent = match submanifold {
            "full" => (0..n).map(unit).collect(),
            s => match setup {
                Some(r) if r.submanifold == s => (r.tangent)(m)?,
                _ => return Err(Error::Parameter(format!("unknown submanifold {s:?} for {}", self.name))),
            },
        };
        let dist = match distribution {
            "full" => (0..n).map(unit).collect(),
            "zero" => Vec::new(),
            d => match setup.and_then(|r| r.distributions.iter().find(|x| x.0 == d)) {
                Some((_, f)) => f(m)?,
                None => return Err(Error::Parameter(format!("unknown distribution {d:?} for {}", self.name))),
            },
        };
        SubspacePair::new(n, tangent, dist)
    }

    /// Points on the chosen submanifold, obtained by projecting box samples.
    pub fn submanifold_samples(&self, submanifold: &str, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        let raw = self.samples(seed, count)?;
        match submanifold {
            "full" => Ok(raw),
            s => match self.reducibility.as_ref() {
                Some(r) if r.submanifold == s => Ok(raw.iter().map(|m| (r.project)(m)).collect()),
                _ => Err(Error::Parameter(format!("unknown submanifold {s:?} for {}", self.name))),
            },
        }
    }

    /// Every expression-backed scalar attached to the entry, labeled.
    pub fn expression_corpus(&self) -> Result<Vec<(String, ScalarField)>> {
        let mut out = Vec::new();
        let mut push = |label: String, f: &ScalarField| {
            if f.expr().is_some() {
                out.push((label, f.clone()));
            }
        };
        let sys = &self.system;
        push("hamiltonian".into(), sys.hamiltonian());
        if let Some(d) = sys.domain() {
            push("domain".into(), d);
        }
        for m in &self.monitors {
            push(format!("monitor {}", m.name), &m.field);
        }
        for c in &self.casimirs {
            push(format!("casimir {}", c.label), &c.field);
        }
        if let Some(h) = &self.equivalent_hamiltonian {
            push("equivalent hamiltonian".into(), h);
        }
        if let Some(mm) = &self.momentum {
            for (a, j) in mm.components.iter().enumerate() {
                push(format!("momentum J{a}"), j);
            }
            for (a, f) in mm.factors.iter().enumerate() {
                if let Some(f) = f {
                    push(format!("factor f{a}"), f);
                }
            }
        }
        if let Some(c) = &self.constraint {
            for (a, phi) in c.constraints().iter().enumerate() {
                push(format!("constraint phi{a}"), phi);
            }
        }
        if let Some(r) = &self.reduction {
            for (a, s) in r.reduction.invariants().iter().enumerate() {
                push(format!("invariant sigma{a}"), s);
            }
        }
        let mut tensors: Vec<(String, &LeibnizTensorField)> = vec![("tensor".into(), sys.tensor())];
        tensors.extend(self.parts.iter().map(|(n, t)| (format!("part {n}"), t)));
        for (label, t) in tensors {
            if let Some(rows) = t.entries() {
                for (i, row) in rows.into_iter().enumerate() {
                    for (j, e) in row.into_iter().enumerate() {
                        out.push((format!("{label} [{i},{j}]"), ScalarField::symbolic(t.chart(), e)?));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Listing of every catalog entry.
pub fn catalog() -> Vec<CatalogInfo> {
    examples::CATALOG
        .iter()
        .map(|b| CatalogInfo {
            name: b.name,
            description: b.description,
            parameters: b.params.to_vec(),
        })
        .collect()
}

/// Instantiates a catalog entry, validating parameters against its schema.
pub fn make_system(name: &str, params: &[(String, String)]) -> Result<CatalogEntry> {
    let builder = examples::CATALOG
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownSystem(name.to_string()))?;
    let values = Params::resolve(builder.params, params)?;
    let entry = (builder.build)(&values)?;
    verify_entry(&entry)?;
    Ok(CatalogEntry {
        name: builder.name.to_string(),
        description: builder.description.to_string(),
        params: values.raw,
        ..entry
    })
}

/// Convenience for numeric parameters.
pub fn make_system_with(name: &str, params: &[(&str, f64)]) -> Result<CatalogEntry> {
    let p: Vec<(String, String)> = params.iter().map(|(k, v)| (k.to_string(), format!("{v:?}"))).collect();
    make_system(name, &p)
}

/// Build-time verification of every symmetry flag on sampled points.
fn verify_entry(entry: &CatalogEntry) -> Result<()> {
    let samples = entry.samples(BUILD_CHECK_SEED, BUILD_CHECK_POINTS)?;
    entry.system.tensor().verify_symmetry(&samples, BUILD_CHECK_TOL)?;
    for (_, t) in &entry.parts {
        t.verify_symmetry(&samples, BUILD_CHECK_TOL)?;
    }
    Ok(())
}

/// Resolved parameter values of one instantiation.
pub(crate) struct Params {
    raw: BTreeMap<String, String>,
    numbers: Vec<(String, f64)>,
}

impl Params {
    fn resolve(schema: &[ParamSpec], given: &[(String, String)]) -> Result<Params> {
        let mut raw: BTreeMap<String, String> =
            schema.iter().map(|p| (p.name.to_string(), p.default.to_string())).collect();
        for (k, v) in given {
            if !raw.contains_key(k) {
                return Err(Error::Parameter(format!("unknown parameter {k:?}")));
            }
            raw.insert(k.clone(), v.trim().to_string());
        }
        let mut numbers = Vec::new();
        for p in schema {
            let v = &raw[p.name];
            let bad = || Error::Parameter(format!("{} = {v:?} is not a valid {:?}", p.name, p.kind));
            match p.kind {
                ParamKind::Number => {
                    let x: f64 = v.parse().map_err(|_| bad())?;
                    if !x.is_finite() {
                        return Err(bad());
                    }
                    numbers.push((p.name.to_string(), x));
                }
                ParamKind::Integer => {
                    let x: u32 = v.parse().map_err(|_| bad())?;
                    numbers.push((p.name.to_string(), x as f64));
                }
                ParamKind::Flag => {
                    let x = match v.as_str() {
                        "0" | "false" => 0.0,
                        "1" | "true" => 1.0,
                        _ => return Err(bad()),
                    };
                    numbers.push((p.name.to_string(), x));
                }
                ParamKind::Matrix => {}
            }
        }
        Ok(Params { raw, numbers })
    }

    pub(crate) fn num(&self, name: &str) -> f64 {
        self.numbers
            .iter()
            .find(|p| p.0 == name)
            .map(|p| p.1)
            .expect("schema parameter")
    }

    pub(crate) fn flag(&self, name: &str) -> bool {
        self.num(name) != 0.0
    }

    pub(crate) fn text(&self, name: &str) -> &str {
        &self.raw[name]
    }

    /// Numeric parameters as expression constants.
    pub(crate) fn constants(&self) -> &[(String, f64)] {
        &self.numbers
    }
}

/// Orthonormal basis of `ker dφ(m)`.
pub(crate) fn kernel_basis(covector: &DVector<f64>) -> Vec<DVector<f64>> {
    let row = DMatrix::from_row_slice(1, covector.len(), covector.as_slice());
    let k = linalg::null_space(&row, linalg::default_rank_tol(covector.len()));
    (0..k.ncols()).map(|j| k.column(j).into_owned()).collect()
}

impl CatalogEntry {
    /// The reduced system as an entry of its own: reduced box, projected
    /// default point, oracles living on the reduced chart.
    pub fn reduced(&self) -> Result<CatalogEntry> {
        let red = self
            .reduction
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("{} has no reduction", self.name)))?;
        let mut rng = rng_from_seed(BUILD_CHECK_SEED);
        let pts = red.reduced_box.sample(&mut rng, BUILD_CHECK_POINTS, |_| true)?;
        let system = reduce_by_invariants(&red.source, &red.reduction, &pts)?;
        let x0 = red.reduction.projection()?.eval(&self.default_x0)?;
        let rc = red.reduction.reduced_chart();
        let oracles = self.oracles.iter().filter(|o| o.chart.names() == rc.names()).cloned().collect();
        let monitors = vec![Monitor::new("H", system.hamiltonian().clone())];
        Ok(CatalogEntry {
            name: format!("{}/reduced", self.name),
            description: format!("reduction of {}", self.name),
            params: self.params.clone(),
            system,
            sample_box: red.reduced_box.clone(),
            default_x0: x0.as_slice().to_vec(),
            monitors,
            casimirs: Vec::new(),
            equivalent_hamiltonian: None,
            constraint: None,
            action: None,
            momentum: None,
            reduction: None,
            reducibility: None,
            parts: Vec::new(),
            oracles,
        })
    }
}

/// Entrywise comparison of a displayed matrix with the constructed object
/// it transcribes: the projector for `pi`, the inverse tensor for `metric`,
/// `X^R_H` for single-column oracles, otherwise the tensor. Oracles on the
/// reduced chart are compared with the reduced tensor.
pub fn oracle_check(entry: &CatalogEntry, name: &str, seed: u64, count: usize, tol: f64) -> Result<CheckReport> {
    let oracle = entry
        .oracle(name)
        .ok_or_else(|| Error::Parameter(format!("{} has no displayed matrix {name:?}", entry.name)))?;
    let target = if oracle.chart.names() == entry.chart().names() {
        entry.clone()
    } else {
        entry.reduced()?
    };
    if oracle.chart.names() != target.chart().names() {
        return Err(Error::Chart(format!("displayed matrix {name:?} lives on no chart of {}", entry.name)));
    }
    let samples = target.samples(seed, count)?;
    let sys = &target.system;
    let scan = scan_samples(&samples, |m| {
        let want = oracle.eval(m)?;
        let got = match name {
            "pi" => entry
                .constraint
                .as_ref()
                .ok_or_else(|| Error::Precondition("no constraint".into()))?
                .projector_at(m)?,
            "metric" => sys
                .tensor()
                .matrix_at(m)?
                .try_inverse()
                .ok_or_else(|| Error::Degenerate { point: m.to_vec(), condition: f64::INFINITY })?,
            _ if want.ncols() == 1 => DMatrix::from_column_slice(want.nrows(), 1, sys.vector_field(m)?.as_slice()),
            _ => sys.tensor().matrix_at(m)?,
        };
        if got.shape() != want.shape() {
            return Err(Error::dim("displayed matrix", got.nrows(), want.nrows()));
        }
        Ok((got - want).amax())
    })?;
    Ok(CheckReport::new("oracle", tol, scan).with_note(format!("displayed matrix {name}")))
}

/// The reduced tensor against the displayed `pattern` up to one global
/// scalar factor. When a `printed_prefactor` is stored the factor is taken
/// relative to it, otherwise relative to 1; the fitted value is recorded as
/// `factor`.
pub fn pattern_check(entry: &CatalogEntry, seed: u64, count: usize, tol: f64) -> Result<CheckReport> {
    let pattern = entry
        .oracle("pattern")
        .ok_or_else(|| Error::Parameter(format!("{} has no displayed pattern", entry.name)))?;
    let prefactor = entry.oracle("printed_prefactor");
    let reduced = entry.reduced()?;
    let samples = reduced.samples(seed, count)?;
    let shape = |r: &[f64]| -> Result<f64> {
        match prefactor {
            Some(q) => Ok(q.eval(r)?[(0, 0)]),
            None => Ok(1.0),
        }
    };
    // pointwise least-squares factors relative to the prefactor shape
    let factors = samples
        .iter()
        .map(|r| {
            let b = reduced.system.tensor().matrix_at(r)?;
            let p = pattern.eval(r)? * shape(r)?;
            let pp = p.dot(&p);
            Ok(if pp == 0.0 { 0.0 } else { b.dot(&p) / pp })
        })
        .collect::<Result<Vec<f64>>>()?;
    let c = factors[0];
    let spread = factors.iter().map(|f| (f - c).abs()).fold(0.0, f64::max);
    let scan = scan_samples(&samples, |r| {
        let b = reduced.system.tensor().matrix_at(r)?;
        let p = pattern.eval(r)? * (c * shape(r)?);
        Ok((b - p).amax())
    })?;
    let mut report = CheckReport::new("pattern", tol, scan)
        .with_value("factor", c)
        .with_value("factor_spread", spread);
    if prefactor.is_some() {
        report = report.with_note("factor is relative to the displayed prefactor; the displayed value corresponds to 1");
    }
    Ok(report)
}

/// Symbolic gradient against central differences with step
/// `max(1e-6, 1e-6·|x_i|)`; the residual is `|∂f − FD| / (1 + |∂f|)`.
pub fn derivative_check(corpus: &[(String, ScalarField)], samples: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty expression corpus".into()));
    }
    let scan = scan_samples(samples, |m| {
        let mut worst: f64 = 0.0;
        for (_, f) in corpus {
            let grad = f.gradient(m)?;
            for i in 0..m.len() {
                let h = (1e-6 * m[i].abs()).max(1e-6);
                let (mut a, mut b) = (m.to_vec(), m.to_vec());
                a[i] += h;
                b[i] -= h;
                let fd = (f.value(&a)? - f.value(&b)?) / (2.0 * h);
                worst = worst.max((grad[i] - fd).abs() / (1.0 + grad[i].abs()));
            }
        }
        Ok(worst)
    })?;
    Ok(CheckReport::new("expressions", tol, scan).with_value("expressions", corpus.len() as f64))
}
