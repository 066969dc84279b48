//! Flows of right Leibniz vector fields, conservation monitors and the
//! relatedness of flows under smooth maps.

mod checks;
mod integrate;
mod output;

pub use checks::{
    conservation_check, dissipation_check, flow_commutation_check, relatedness_check, rk4_order_check,
};
pub use integrate::{drift_report, integrate, Drift, IntegratorConfig, Method, Monitor, Trajectory};
pub use output::format_f64;
