use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bracket::{LeibnizSystem, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step Runge–Kutta; the last step is shortened to land on `t1`.
    Rk4 { dt: f64 },
    /// Dormand–Prince 5(4) with error-per-step control.
    Rk45 { atol: f64, rtol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub method: Method,
    pub t0: f64,
    pub t1: f64,
}

impl IntegratorConfig {
    pub fn rk4(t0: f64, t1: f64, dt: f64) -> IntegratorConfig {
        IntegratorConfig {
            method: Method::Rk4 { dt },
            t0,
            t1,
        }
    }

    pub fn rk45(t0: f64, t1: f64, atol: f64, rtol: f64) -> IntegratorConfig {
        IntegratorConfig {
            method: Method::Rk45 { atol, rtol },
            t0,
            t1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(Error::Config(format!("need finite t1 > t0, got [{}, {}]", self.t0, self.t1)));
        }
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => {
                Err(Error::Config(format!("step must be positive, got {dt}")))
            }
            Method::Rk45 { atol, rtol } if !(atol > 0.0 && rtol > 0.0) => {
                Err(Error::Config("tolerances must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A named scalar field evaluated at every accepted state.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub name: String,
    pub field: ScalarField,
}

impl Monitor {
    pub fn new(name: impl Into<String>, field: ScalarField) -> Monitor {
        Monitor {
            name: name.into(),
            field,
        }
    }
}

/// Accepted states of a numerical flow.
///
/// `monitors[k][j]` is monitor `j` at `times[k]`. A truncated trajectory stops
/// at the last accepted state inside the regular domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub coordinates: Vec<String>,
    pub monitor_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Vec<f64>>,
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    pub fn monitor(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .monitor_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownMonitor(name.to_string()))?;
        Ok(self.monitors.iter().map(|row| row[j]).collect())
    }
}

/// Largest deviation of a monitor from its initial value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub monitor: String,
    pub initial: f64,
    pub max_drift: f64,
    pub time_of_max: f64,
}

pub fn drift_report(traj: &Trajectory, monitor: &str) -> Result<Drift> {
    let values = traj.monitor(monitor)?;
    let initial = values[0];
    let mut drift = Drift {
        monitor: monitor.to_string(),
        initial,
        max_drift: 0.0,
        time_of_max: traj.times[0],
    };
    for (t, v) in traj.times.iter().zip(&values) {
        let d = (v - initial).abs();
        let d = if d.is_nan() { f64::INFINITY } else { d };
        if d > drift.max_drift {
            drift.max_drift = d;
            drift.time_of_max = *t;
        }
    }
    Ok(drift)
}

struct Recorder<'a> {
    system: &'a LeibnizSystem,
    monitors: &'a [Monitor],
    traj: Trajectory,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, x: &DVector<f64>) -> Result<()> {
        let row = self
            .monitors
            .iter()
            .map(|m| m.field.value(x.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        self.traj.times.push(t);
        self.traj.states.push(x.as_slice().to_vec());
        self.traj.monitors.push(row);
        Ok(())
    }

    fn field(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.system.vector_field(x.as_slice())
    }
}

enum StepOutcome {
    Accepted(DVector<f64>),
    LeftDomain,
}

fn leaves_domain(e: &Error) -> bool {
    matches!(e, Error::OutsideDomain { .. } | Error::Eval(_))
}

/// Numerical flow of `X^R_h` from `x0`.
///
/// The regular domain is checked at every stage point; a stage outside it ends
/// the run and returns the states accepted so far with `truncated = true`.
pub fn integrate(
    system: &LeibnizSystem,
    x0: &[f64],
    cfg: &IntegratorConfig,
    monitors: &[Monitor],
) -> Result<Trajectory> {
    cfg.validate()?;
    system.check_domain(x0)?;
    for m in monitors {
        if m.field.chart() != system.chart() {
            return Err(Error::Chart(format!("monitor {:?} lives on a different chart", m.name)));
        }
    }
    let mut rec = Recorder {
        system,
        monitors,
        traj: Trajectory {
            coordinates: system.chart().names().to_vec(),
            monitor_names: monitors.iter().map(|m| m.name.clone()).collect(),
            times: Vec::new(),
            states: Vec::new(),
            monitors: Vec::new(),
            truncated: false,
        },
    };
    let x0 = DVector::from_column_slice(x0);
    rec.field(&x0)?;
    rec.push(cfg.t0, &x0)?;
    match cfg.method {
        Method::Rk4 { dt } => run_rk4(&mut rec, x0, cfg.t0, cfg.t1, dt)?,
        Method::Rk45 { atol, rtol } => run_rk45(&mut rec, x0, cfg.t0, cfg.t1, atol, rtol)?,
    }
    Ok(rec.traj)
}

fn step_count(span: f64, dt: f64) -> usize {
    let ratio = span / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}

fn run_rk4(rec: &mut Recorder<'_>, mut x: DVector<f64>, t0: f64, t1: f64, dt: f64) -> Result<()> {
    let n = step_count(t1 - t0, dt);
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        let t_next = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * dt };
        match rk4_step(rec, &x, t_next - t)? {
            StepOutcome::Accepted(next) => {
                x = next;
                rec.push(t_next, &x)?;
            }
            StepOutcome::LeftDomain => {
                rec.traj.truncated = true;
                return Ok(());
            }
        }
    }
    Ok(())
}

macro_rules! stage {
    ($rec:expr, $x:expr) => {
        match $rec.field(&$x) {
            Ok(v) => v,
            Err(e) if leaves_domain(&e) => return Ok(StepOutcome::LeftDomain),
            Err(e) => return Err(e),
        }
    };
}

fn rk4_step(rec: &Recorder<'_>, x: &DVector<f64>, h: f64) -> Result<StepOutcome> {
    let k1 = stage!(rec, x);
    let k2 = stage!(rec, x + &k1 * (0.5 * h));
    let k3 = stage!(rec, x + &k2 * (0.5 * h));
    let k4 = stage!(rec, x + &k3 * h);
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !rec.system.in_domain(next.as_slice()) {
        return Ok(StepOutcome::LeftDomain);
    }
    Ok(StepOutcome::Accepted(next))
}

// Dormand–Prince 5(4) tableau; the vector fields are autonomous so the
// nodes c_i are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum DopriOutcome {
    Step { next: DVector<f64>, error: f64 },
    LeftDomain,
}

fn dopri_step(rec: &Recorder<'_>, x: &DVector<f64>, h: f64, atol: f64, rtol: f64) -> Result<DopriOutcome> {
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut y = x.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                y += kj * (h * A[s][j]);
            }
        }
        match rec.field(&y) {
            Ok(v) => k.push(v),
            Err(e) if leaves_domain(&e) => return Ok(DopriOutcome::LeftDomain),
            Err(e) => return Err(e),
        }
    }
    let mut next = x.clone();
    let mut err = DVector::zeros(x.len());
    for s in 0..7 {
        next += &k[s] * (h * B5[s]);
        err += &k[s] * (h * (B5[s] - B4[s]));
    }
    let mut sq = 0.0;
    for i in 0..x.len() {
        let scale = atol + rtol * x[i].abs().max(next[i].abs());
        sq += (err[i] / scale).powi(2);
    }
    let error = (sq / x.len() as f64).sqrt();
    if !rec.system.in_domain(next.as_slice()) {
        return Ok(DopriOutcome::LeftDomain);
    }
    Ok(DopriOutcome::Step { next, error })
}

fn run_rk45(
    rec: &mut Recorder<'_>,
    mut x: DVector<f64>,
    t0: f64,
    t1: f64,
    atol: f64,
    rtol: f64,
) -> Result<()> {
    let span = t1 - t0;
    let mut t = t0;
    let mut h = (span * 1e-3).min(span);
    let min_step = |t: f64| 1e-14 * t.abs().max(span);
    while t < t1 {
        h = h.min(t1 - t);
        match dopri_step(rec, &x, h, atol, rtol)? {
            DopriOutcome::Step { next, error } if error <= 1.0 => {
                t = if t1 - t <= h { t1 } else { t + h };
                x = next;
                rec.push(t, &x)?;
                let factor = if error == 0.0 { 5.0 } else { (0.9 * error.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
            }
            DopriOutcome::Step { error, .. } => {
                let factor = if error.is_finite() { (0.9 * error.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
                h *= factor;
                if h < min_step(t) {
                    return Err(Error::AdaptiveUnderflow { time: t });
                }
            }
            DopriOutcome::LeftDomain => {
                h *= 0.5;
                if h < min_step(t) {
                    rec.traj.truncated = true;
                    return Ok(());
                }
            }
        }
    }
    Ok(())
}
