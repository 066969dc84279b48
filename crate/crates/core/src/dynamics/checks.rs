use crate::bracket::{LeibnizSystem, SmoothMap};
use crate::error::{Error, Result};
use crate::report::{scan_samples, CheckReport, SampleScan};

use super::integrate::{drift_report, integrate, IntegratorConfig, Monitor};

fn check_map(phi: &SmoothMap, source: &LeibnizSystem, target: &LeibnizSystem) -> Result<()> {
    if phi.source() != source.chart() {
        return Err(Error::Chart("map source differs from the source system chart".into()));
    }
    if phi.target_dim() != target.dim() {
        return Err(Error::dim("map target", target.dim(), phi.target_dim()));
    }
    Ok(())
}

/// `max ‖Dφ(m) X_{h∘φ}(m) − X_h(φ(m))‖∞` over `samples`.
///
/// `source` must carry the pulled-back Hamiltonian `h∘φ`.
pub fn relatedness_check(
    phi: &SmoothMap,
    source: &LeibnizSystem,
    target: &LeibnizSystem,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    check_map(phi, source, target)?;
    let scan = scan_samples(samples, |m| {
        let pushed = phi.jacobian(m)? * source.vector_field(m)?;
        let image = phi.eval(m)?;
        let x2 = target.vector_field(image.as_slice())?;
        Ok((pushed - x2).amax())
    })?;
    Ok(CheckReport::new("relatedness", tol, scan))
}

/// Compares `φ(F¹_t(x0))` against `F²_t(φ(x0))` at every time present in
/// both trajectories (the full grid for rk4).
pub fn flow_commutation_check(
    phi: &SmoothMap,
    source: &LeibnizSystem,
    target: &LeibnizSystem,
    x0: &[f64],
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<CheckReport> {
    check_map(phi, source, target)?;
    let upstairs = integrate(source, x0, cfg, &[])?;
    let y0 = phi.eval(x0)?;
    let downstairs = integrate(target, y0.as_slice(), cfg, &[])?;
    for traj in [&upstairs, &downstairs] {
        if traj.truncated {
            return Err(Error::Truncated { time: traj.final_time() });
        }
    }
    let mut scan = SampleScan::empty();
    let mut j = 0;
    for (k, t) in upstairs.times.iter().enumerate() {
        while j < downstairs.times.len() && downstairs.times[j] < *t {
            j += 1;
        }
        if j == downstairs.times.len() || downstairs.times[j] != *t {
            continue;
        }
        let projected = phi.eval(&upstairs.states[k])?;
        let gap = projected
            .iter()
            .zip(&downstairs.states[j])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        scan = scan.merge(SampleScan {
            max: gap,
            worst_point: Some(vec![*t]),
            count: 1,
        });
    }
    Ok(CheckReport::new("flow-commutation", tol, scan).with_note("worst_point holds the time of the largest gap"))
}

/// Integrates from `x0` and reports the largest drift of every monitor.
pub fn conservation_check(
    system: &LeibnizSystem,
    monitors: &[Monitor],
    x0: &[f64],
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<CheckReport> {
    if monitors.is_empty() {
        return Err(Error::Precondition("conservation needs at least one monitor".into()));
    }
    let traj = integrate(system, x0, cfg, monitors)?;
    if traj.truncated {
        return Err(Error::Truncated { time: traj.final_time() });
    }
    let mut scan = SampleScan::empty();
    let mut values = Vec::new();
    for m in monitors {
        let d = drift_report(&traj, &m.name)?;
        values.push((format!("drift_{}", m.name), d.max_drift));
        scan = scan.merge(SampleScan {
            max: d.max_drift,
            worst_point: Some(vec![d.time_of_max]),
            count: 0,
        });
    }
    scan.count = traj.len();
    let mut report =
        CheckReport::new("conservation", tol, scan).with_note("worst_point holds the time of the largest drift");
    for (k, v) in values {
        report = report.with_value(k, v);
    }
    Ok(report)
}

/// Monotone decrease of `h` along the flow: every accepted step satisfies
/// `h(x_{k+1}) − h(x_k) ≤ tol` and the total change is negative.
///
/// `max_residual` is the largest per-step increase (clamped at 0).
pub fn dissipation_check(system: &LeibnizSystem, x0: &[f64], cfg: &IntegratorConfig, tol: f64) -> Result<CheckReport> {
    let h = Monitor::new("H", system.hamiltonian().clone());
    let traj = integrate(system, x0, cfg, std::slice::from_ref(&h))?;
    if traj.truncated {
        return Err(Error::Truncated { time: traj.final_time() });
    }
    let values = traj.monitor("H")?;
    let mut scan = SampleScan {
        max: 0.0,
        worst_point: Some(vec![traj.times[0]]),
        count: traj.len(),
    };
    for k in 1..values.len() {
        let inc = values[k] - values[k - 1];
        let inc = if inc.is_nan() { f64::INFINITY } else { inc };
        if inc > scan.max {
            scan.max = inc;
            scan.worst_point = Some(vec![traj.times[k]]);
        }
    }
    let total = values[values.len() - 1] - values[0];
    let mut report = CheckReport::new("dissipation", tol, scan)
        .with_value("h_initial", values[0])
        .with_value("h_final", values[values.len() - 1])
        .with_value("total_decrease", -total)
        .with_note("worst_point holds the time of the largest per-step increase");
    if !(total < 0.0) {
        report.passed = false;
        report = report.with_note("h did not decrease over the run");
    }
    Ok(report)
}

/// Ratio of the finest to coarsest reference step in [`rk4_order_check`].
const ORDER_REFERENCE_REFINEMENT: f64 = 64.0;

/// Observed order `log2(e(dt)/e(dt/2))` of rk4 at `t1`, errors measured
/// against an rk4 run with step `dt/64`. Passes when `|order − 4| ≤ tol`.
pub fn rk4_order_check(system: &LeibnizSystem, x0: &[f64], t1: f64, dt: f64, tol: f64) -> Result<CheckReport> {
    let end = |h: f64| -> Result<Vec<f64>> {
        let traj = integrate(system, x0, &IntegratorConfig::rk4(0.0, t1, h), &[])?;
        if traj.truncated {
            return Err(Error::Truncated { time: traj.final_time() });
        }
        Ok(traj.final_state().to_vec())
    };
    let reference = end(dt / ORDER_REFERENCE_REFINEMENT)?;
    let err = |h: f64| -> Result<f64> {
        Ok(end(h)?
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    };
    let (e1, e2) = (err(dt)?, err(dt / 2.0)?);
    let order = (e1 / e2).log2();
    let scan = SampleScan {
        max: if order.is_nan() { f64::INFINITY } else { (order - 4.0).abs() },
        worst_point: None,
        count: 3,
    };
    Ok(CheckReport::new("rk4-order", tol, scan)
        .with_value("order", order)
        .with_value("error_dt", e1)
        .with_value("error_half_dt", e2)
        .with_note("max_residual is |order - 4|"))
}
