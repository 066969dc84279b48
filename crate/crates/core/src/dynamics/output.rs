use std::fmt::Write as _;

use super::integrate::Trajectory;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Trajectory {
    /// CSV with header `t,<coordinates...>,<monitors...>`, one accepted state per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in self.coordinates.iter().chain(&self.monitor_names) {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format_f64(self.times[k]));
            for v in self.states[k].iter().chain(&self.monitors[k]) {
                let _ = write!(out, ",{}", format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_precision() {
        let traj = Trajectory {
            coordinates: vec!["q".into(), "p".into()],
            monitor_names: vec!["H".into()],
            times: vec![0.0, 0.1],
            states: vec![vec![1.0, 0.0], vec![0.1 + 0.2, -1.0 / 3.0]],
            monitors: vec![vec![0.5], vec![0.5]],
            truncated: false,
        };
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,q,p,H"));
        lines.next();
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![0.1, 0.1 + 0.2, -1.0 / 3.0, 0.5]);
        assert!(traj.to_json().contains("\"monitor_names\""));
    }
}
