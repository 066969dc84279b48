use std::collections::BTreeMap;

use leibniz::dynamics::{integrate, Monitor};
use leibniz::nonholonomic::{constrained_tensor, family_independence_check, ConstraintSpec};
use leibniz::report::CheckReport;
use leibniz::sampling::rng_from_seed;
use leibniz::systems::{catalog, CatalogEntry};
use leibniz::{LeibnizTensorField, ScalarField, SmoothMap};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::args::{
    emit, numeric_params, to_json, ConstrainArgs, Format, OutputArgs, ReduceArgs, SimulateArgs,
};
use crate::{Failure, Outcome};

/// Sampled points emitted by `reduce` when the reduced tensor has no
/// expression form and no count was requested.
const DEFAULT_NUMERIC_POINTS: usize = 5;

pub fn list(a: &OutputArgs) -> Outcome {
    if a.format != Format::Json {
        return Err(Failure::Usage("list supports --format json only".into()));
    }
    emit(a.out.as_deref(), &to_json(&catalog()))?;
    Ok(true)
}

pub fn simulate(a: &SimulateArgs) -> Outcome {
    let entry = a.system.load()?;
    let mut monitors = entry.monitors.clone();
    for m in &a.monitors {
        let f = ScalarField::parse_with(entry.chart(), m, &numeric_params(&entry))?;
        monitors.push(Monitor::new(m.clone(), f));
    }
    let cfg = a.flow.config(10.0, 1e-3)?;
    let x0 = a.flow.x0(&entry)?;
    let traj = integrate(&entry.system, &x0, &cfg, &monitors)?;
    if traj.truncated {
        let note = json!({ "warning": "truncated", "time": traj.final_time() });
        eprintln!("{note}");
    }
    let text = match a.output.format {
        Format::Csv => traj.to_csv(),
        Format::Json => traj.to_json(),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(true)
}

fn expression_rows(t: &LeibnizTensorField) -> Option<Vec<Vec<String>>> {
    t.entries()
        .map(|rows| rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct PointValue {
    point: Vec<f64>,
    tensor: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projector: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct ReduceOutput<'a> {
    command: &'static str,
    system: &'a str,
    params: &'a BTreeMap<String, String>,
    reduced_coordinates: &'a [String],
    invariants: Vec<String>,
    section: Option<Vec<String>>,
    symbolic: bool,
    tensor: Option<Vec<Vec<String>>>,
    hamiltonian: Option<String>,
    points: Vec<PointValue>,
}

pub fn reduce(a: &ReduceArgs) -> Outcome {
    let entry = a.system.load()?;
    let red = entry
        .reduction
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("{} carries no reduction", entry.name)))?;
    let reduced = entry.reduced()?;
    let tensor = expression_rows(reduced.system.tensor());
    let count = match (a.emit_points, &tensor) {
        (0, None) => DEFAULT_NUMERIC_POINTS,
        (k, _) => k,
    };
    let points = if count == 0 {
        Vec::new()
    } else {
        reduced
            .samples(a.seed, count)?
            .into_iter()
            .map(|r| {
                Ok(PointValue {
                    tensor: matrix_rows(&reduced.system.tensor().matrix_at(&r)?),
                    point: r,
                    projector: None,
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?
    };
    let out = ReduceOutput {
        command: "reduce",
        system: &entry.name,
        params: &entry.params,
        reduced_coordinates: red.reduction.reduced_chart().names(),
        invariants: red
            .reduction
            .invariants()
            .iter()
            .map(|s| s.expr().map_or_else(|| "<numeric>".to_string(), |e| e.to_string()))
            .collect(),
        section: red.reduction.section().components().map(|c| c.iter().map(|e| e.to_string()).collect()),
        symbolic: tensor.is_some(),
        tensor,
        hamiltonian: reduced.system.hamiltonian().expr().map(|e| e.to_string()),
        points,
    };
    emit(a.out.as_deref(), &to_json(&out))?;
    Ok(true)
}

#[derive(Serialize)]
struct ConstrainOutput<'a> {
    command: &'static str,
    system: &'a str,
    params: &'a BTreeMap<String, String>,
    coordinates: &'a [String],
    constraints: &'a [String],
    complement: &'a [String],
    symbolic: bool,
    tensor: Option<Vec<Vec<String>>>,
    points: Vec<PointValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<CheckReport>,
    passed: bool,
}

fn parse_family(text: &str) -> Result<(String, Vec<f64>), Failure> {
    let bad = || Failure::Usage(format!("--family expects NAME=v1,v2,..., got {text:?}"));
    let (name, values) = text.split_once('=').ok_or_else(bad)?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    if name.trim().is_empty() || values.is_empty() {
        return Err(bad());
    }
    Ok((name.trim().to_string(), values))
}

fn member(a: &ConstrainArgs, entry: &CatalogEntry, params: &[(String, f64)]) -> Result<ConstraintSpec, Failure> {
    let chart = entry.chart();
    let phi = a
        .phi
        .iter()
        .map(|s| ScalarField::parse_with(chart, s, params))
        .collect::<Result<Vec<_>, _>>()?;
    let w = a
        .w
        .iter()
        .map(|s| {
            let comps: Vec<String> = s.split(',').map(|c| c.trim().to_string()).collect();
            SmoothMap::parse_with(chart, &comps, params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConstraintSpec::new(entry.system.clone(), phi, w)?)
}

pub fn constrain(a: &ConstrainArgs) -> Outcome {
    let entry = a.system.load()?;
    let base = numeric_params(&entry);
    let family = a.family.as_deref().map(parse_family).transpose()?;
    let members = match &family {
        Some((name, values)) => values
            .iter()
            .map(|v| {
                let mut p: Vec<(String, f64)> = base.iter().filter(|(k, _)| k != name).cloned().collect();
                p.push((name.clone(), *v));
                member(a, &entry, &p)
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![member(a, &entry, &base)?],
    };
    let samples = entry.samples(a.sampling.seed, a.sampling.samples)?;
    members[0].check_transversality(&samples)?;
    let tensor = constrained_tensor(&members[0])?;
    let mut rng = rng_from_seed(a.sampling.seed);
    let shown = entry.sample_box.sample(&mut rng, a.emit_points, |m| entry.system.in_domain(m))?;
    let points = shown
        .into_iter()
        .map(|m| {
            Ok(PointValue {
                tensor: matrix_rows(&tensor.matrix_at(&m)?),
                projector: Some(matrix_rows(&members[0].projector_at(&m)?)),
                point: m,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let family_report = match &family {
        Some(_) => Some(family_independence_check(&members, &samples, a.tol.unwrap_or(1e-12))?),
        None => None,
    };
    let passed = family_report.as_ref().is_none_or(|r| r.passed);
    let rows = expression_rows(&tensor);
    let out = ConstrainOutput {
        command: "constrain",
        system: &entry.name,
        params: &entry.params,
        coordinates: entry.chart().names(),
        constraints: &a.phi,
        complement: &a.w,
        symbolic: rows.is_some(),
        tensor: rows,
        points,
        family: family_report,
        passed,
    };
    emit(a.out.as_deref(), &to_json(&out))?;
    Ok(passed)
}
