use std::collections::BTreeMap;

use leibniz::bracket::ops::{decompose, equivalent_hamiltonians, is_casimir, jacobiator_with};
use leibniz::bracket::JacobiMethod;
use leibniz::dynamics::{conservation_check, dissipation_check, flow_commutation_check, relatedness_check, rk4_order_check, Monitor};
use leibniz::nonholonomic::constraint_drift;
use leibniz::report::{scan_samples, CheckReport};
use leibniz::symmetry::{momentum_map_check, noether_drift, pointwise_reducibility, welldefinedness_check};
use leibniz::systems::{derivative_check, oracle_check, pattern_check, CasimirClaim, CatalogEntry};
use leibniz::{ScalarField, Side};
use serde::Serialize;

use crate::args::{emit, numeric_params, parse_point, to_json, CheckArgs, CheckKind};
use crate::{Failure, Outcome};

#[derive(Serialize)]
struct CheckOutput<'a> {
    command: &'static str,
    check: &'a str,
    system: &'a str,
    params: &'a BTreeMap<String, String>,
    seed: u64,
    passed: bool,
    reports: Vec<CheckReport>,
}

fn default_tol(kind: CheckKind) -> f64 {
    use CheckKind::*;
    match kind {
        Casimir | CasimirLeft | CasimirRight | Momentum | Equivalence | Oracle | Pattern | Decomposition => 1e-12,
        Jacobiator | Relatedness | Welldefinedness => 1e-9,
        Noether | FlowCommutation | Expressions => 1e-6,
        Conservation => 1e-8,
        Dissipation | Reducibility | ConstraintDrift => 1e-10,
        Order => 0.3,
    }
}

fn kind_name(kind: CheckKind) -> String {
    use clap::ValueEnum;
    kind.to_possible_value().expect("named variant").get_name().to_string()
}

fn missing(entry: &CatalogEntry, what: &str) -> Failure {
    Failure::Usage(format!("{} carries no {what}", entry.name))
}

fn parse_field(entry: &CatalogEntry, src: &str) -> Result<ScalarField, Failure> {
    Ok(ScalarField::parse_with(entry.chart(), src, &numeric_params(entry))?)
}

pub fn run(a: &CheckArgs) -> Outcome {
    let mut entry = a.system.load()?;
    if a.reduced {
        entry = entry.reduced()?;
    }
    let tol = a.tol.unwrap_or_else(|| default_tol(a.kind));
    let seed = a.sampling.seed;
    let samples = || -> Result<Vec<Vec<f64>>, Failure> {
        match &a.at {
            Some(p) => Ok(vec![parse_point(p, &entry)?]),
            None => Ok(entry.samples(seed, a.sampling.samples)?),
        }
    };
    let reports = match a.kind {
        CheckKind::Casimir | CheckKind::CasimirLeft | CheckKind::CasimirRight => {
            let sides: &[Side] = match a.kind {
                CheckKind::CasimirLeft => &[Side::Left],
                CheckKind::CasimirRight => &[Side::Right],
                _ => &[Side::Left, Side::Right],
            };
            let claims: Vec<CasimirClaim> = if a.functions.is_empty() {
                entry.casimirs.iter().filter(|c| sides.contains(&c.side)).cloned().collect()
            } else {
                let mut v = Vec::new();
                for f in &a.functions {
                    for &side in sides {
                        v.push(CasimirClaim {
                            label: f.clone(),
                            field: parse_field(&entry, f)?,
                            side,
                        });
                    }
                }
                v
            };
            if claims.is_empty() {
                return Err(missing(&entry, "Casimir claims; pass --function"));
            }
            let pts = samples()?;
            claims
                .iter()
                .map(|c| Ok(is_casimir(entry.system.tensor(), &c.field, c.side, &pts, tol)?.with_note(c.label.clone())))
                .collect::<Result<Vec<_>, Failure>>()?
        }
        CheckKind::Jacobiator => vec![jacobiator_report(a, &entry, &samples()?, tol)?],
        CheckKind::Momentum => {
            let action = entry.action.as_ref().ok_or_else(|| missing(&entry, "action"))?;
            let mm = entry.momentum.as_ref().ok_or_else(|| missing(&entry, "momentum map"))?;
            vec![momentum_map_check(&entry.system, action, mm, &samples()?, tol)?]
        }
        CheckKind::Noether => {
            let action = entry.action.as_ref().ok_or_else(|| missing(&entry, "action"))?;
            let mm = entry.momentum.as_ref().ok_or_else(|| missing(&entry, "momentum map"))?;
            let cfg = a.flow.config(10.0, 1e-3)?;
            let x0 = a.flow.x0(&entry)?;
            vec![noether_drift(&entry.system, action, mm, &x0, &cfg, &samples()?, tol)?]
        }
        CheckKind::Equivalence => {
            let other = match a.functions.first() {
                Some(f) => parse_field(&entry, f)?,
                None => entry
                    .equivalent_hamiltonian
                    .clone()
                    .ok_or_else(|| missing(&entry, "equivalent Hamiltonian; pass --function"))?,
            };
            vec![equivalent_hamiltonians(entry.system.tensor(), entry.system.hamiltonian(), &other, &samples()?, tol)?]
        }
        CheckKind::Reducibility => {
            let default_sub = entry.reducibility.as_ref().map_or("full".to_string(), |r| r.submanifold.clone());
            let default_dist = entry
                .reducibility
                .as_ref()
                .and_then(|r| r.distributions.first().map(|d| d.0.clone()))
                .unwrap_or_else(|| "full".to_string());
            let sub = a.submanifold.clone().unwrap_or(default_sub);
            let dist = a.distribution.clone().unwrap_or(default_dist);
            let points = match &a.at {
                Some(p) => vec![parse_point(p, &entry)?],
                None => entry.submanifold_samples(&sub, seed, a.sampling.samples)?,
            };
            points
                .iter()
                .map(|m| {
                    let pair = entry.reducibility_pair(&sub, &dist, m)?;
                    let mut r = pointwise_reducibility(&entry.system.tensor().matrix_at(m)?, &pair, tol)?;
                    r.worst_point = Some(m.clone());
                    Ok(r.with_note(format!("submanifold {sub}, distribution {dist}")))
                })
                .collect::<Result<Vec<_>, Failure>>()?
        }
        CheckKind::Oracle => {
            let name = a.oracle.as_deref().ok_or_else(|| Failure::Usage("oracle needs --oracle NAME".into()))?;
            vec![oracle_check(&entry, name, seed, a.sampling.samples, tol)?]
        }
        CheckKind::Pattern => vec![pattern_check(&entry, seed, a.sampling.samples, tol)?],
        CheckKind::Relatedness | CheckKind::Welldefinedness | CheckKind::FlowCommutation => {
            let red = entry.reduction.as_ref().ok_or_else(|| missing(&entry, "reduction"))?;
            let reduced = entry.reduced()?;
            let phi = red.reduction.projection()?;
            match a.kind {
                CheckKind::Relatedness => {
                    vec![relatedness_check(&phi, &red.source, &reduced.system, &samples()?, tol)?]
                }
                CheckKind::Welldefinedness => {
                    let group = entry.group_samples(seed.wrapping_add(1), a.sampling.samples)?;
                    vec![welldefinedness_check(&red.source, &red.reduction, &red.action, &samples()?, &group, tol)?]
                }
                _ => {
                    let cfg = a.flow.config(1.0, 1e-3)?;
                    let x0 = a.flow.x0(&entry)?;
                    vec![flow_commutation_check(&phi, &red.source, &reduced.system, &x0, &cfg, tol)?]
                }
            }
        }
        CheckKind::Conservation => {
            let mut monitors = entry.monitors.clone();
            for m in &a.monitors {
                monitors.push(Monitor::new(m.clone(), parse_field(&entry, m)?));
            }
            let cfg = a.flow.config(10.0, 1e-3)?;
            vec![conservation_check(&entry.system, &monitors, &a.flow.x0(&entry)?, &cfg, tol)?]
        }
        CheckKind::Dissipation => {
            let cfg = a.flow.config(10.0, 1e-3)?;
            vec![dissipation_check(&entry.system, &a.flow.x0(&entry)?, &cfg, tol)?]
        }
        CheckKind::Order => {
            let t1 = a.flow.t1.unwrap_or(1.0);
            let dt = a.flow.dt.unwrap_or(0.05);
            vec![rk4_order_check(&entry.system, &a.flow.x0(&entry)?, t1, dt, tol)?]
        }
        CheckKind::Decomposition => {
            let (skew, sym) = decompose(entry.system.tensor())?;
            let pts = samples()?;
            let mut out = Vec::new();
            for (name, part) in [("skew", skew), ("symmetric", sym)] {
                let expected = entry.part(name).ok_or_else(|| missing(&entry, &format!("{name} part")))?;
                let scan = scan_samples(&pts, |m| Ok((part.matrix_at(m)? - expected.matrix_at(m)?).amax()))?;
                out.push(CheckReport::new("decomposition", tol, scan).with_note(format!("{name} part")));
            }
            out
        }
        CheckKind::Expressions => {
            let corpus = entry.expression_corpus()?;
            vec![derivative_check(&corpus, &samples()?, tol)?]
        }
        CheckKind::ConstraintDrift => {
            let spec = entry.constraint.as_ref().ok_or_else(|| missing(&entry, "constraint"))?;
            let cfg = a.flow.config(10.0, 1e-3)?;
            vec![constraint_drift(spec, &a.flow.x0(&entry)?, &cfg, tol)?]
        }
    };
    let passed = reports.iter().all(|r| r.passed);
    let kind = kind_name(a.kind);
    let out = CheckOutput {
        command: "check",
        check: &kind,
        system: &entry.name,
        params: &entry.params,
        seed,
        passed,
        reports,
    };
    emit(a.out.as_deref(), &to_json(&out))?;
    Ok(passed)
}

/// `max |𝔍(f,g,h) − expected|` over the given triple, or over all coordinate
/// triples `i ≤ j ≤ k` when no functions are given.
fn jacobiator_report(a: &CheckArgs, entry: &CatalogEntry, pts: &[Vec<f64>], tol: f64) -> Result<CheckReport, Failure> {
    let method = if a.fd {
        JacobiMethod::FiniteDifference
    } else {
        JacobiMethod::Auto
    };
    let chart = entry.chart();
    let n = chart.dim();
    let triples: Vec<[ScalarField; 3]> = match a.functions.len() {
        0 => {
            let coord = |i: usize| ScalarField::symbolic(chart, chart.coordinate(i));
            let mut v = Vec::new();
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        v.push([coord(i)?, coord(j)?, coord(k)?]);
                    }
                }
            }
            v
        }
        3 => vec![[
            parse_field(entry, &a.functions[0])?,
            parse_field(entry, &a.functions[1])?,
            parse_field(entry, &a.functions[2])?,
        ]],
        k => return Err(Failure::Usage(format!("jacobiator takes 0 or 3 --function arguments, got {k}"))),
    };
    if a.expect.is_some() && a.functions.is_empty() {
        return Err(Failure::Usage("--expect needs an explicit --function triple".into()));
    }
    let expected = a.expect.unwrap_or(0.0);
    let tensor = entry.system.tensor();
    let scan = scan_samples(pts, |m| {
        let mut worst: f64 = 0.0;
        for [f, g, h] in &triples {
            let v = jacobiator_with(tensor, f, g, h, m, method)?;
            worst = worst.max(if v.is_nan() { f64::INFINITY } else { (v - expected).abs() });
        }
        Ok(worst)
    })?;
    let mut report = CheckReport::new("jacobiator", tol, scan)
        .with_value("expected", expected)
        .with_value("triples", triples.len() as f64);
    if let [[f, g, h]] = triples.as_slice() {
        let v = jacobiator_with(tensor, f, g, h, &pts[0], method)?;
        report = report.with_value("value_at_first_point", v);
    }
    if a.fd {
        report = report.with_note("finite-difference path");
    }
    Ok(report)
}
