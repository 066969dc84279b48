use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use leibniz::definition::SystemDefinition;
use leibniz::dynamics::IntegratorConfig;
use leibniz::systems::{make_system, CatalogEntry};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "leibniz", version, about = "Simulate and verify Leibniz systems")]
pub struct Cli {
    /// Worker threads for sample scans; output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the catalog as JSON.
    List(OutputArgs),
    /// Integrate X^R_H and write the trajectory.
    Simulate(SimulateArgs),
    /// Run a verification and print a JSON report.
    Check(CheckArgs),
    /// Reduce a system by its invariants.
    Reduce(ReduceArgs),
    /// Build the constrained tensor from constraints and a complement.
    Constrain(ConstrainArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Catalog name or path to a system definition file (.toml).
    #[arg(long)]
    pub system: String,
    /// Catalog parameter, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Rk4,
    Rk45,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Initial point as comma-separated expressions (defaults per system).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Extra monitored expression, repeatable.
    #[arg(long = "monitor")]
    pub monitors: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Casimir,
    CasimirLeft,
    CasimirRight,
    Jacobiator,
    Momentum,
    Noether,
    Equivalence,
    Reducibility,
    Oracle,
    Pattern,
    Relatedness,
    Welldefinedness,
    FlowCommutation,
    Conservation,
    Dissipation,
    Order,
    Decomposition,
    Expressions,
    ConstraintDrift,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(value_enum)]
    pub kind: CheckKind,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Run the check on the reduced system.
    #[arg(long)]
    pub reduced: bool,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Tolerance; each check has its own default.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Function argument (Casimir candidate, Jacobiator triple, equivalent Hamiltonian).
    #[arg(long = "function", allow_hyphen_values = true)]
    pub functions: Vec<String>,
    /// Evaluate at this single point instead of sampling.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Expected Jacobiator value (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub expect: Option<f64>,
    /// Force the finite-difference Jacobiator path.
    #[arg(long)]
    pub fd: bool,
    /// Name of the displayed matrix for `oracle`.
    #[arg(long)]
    pub oracle: Option<String>,
    #[arg(long)]
    pub submanifold: Option<String>,
    #[arg(long)]
    pub distribution: Option<String>,
    /// Extra monitored expression for `conservation`, repeatable.
    #[arg(long = "monitor")]
    pub monitors: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Number of sampled reduced points to print.
    #[arg(long, default_value_t = 0)]
    pub emit_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstrainArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Constraint function, repeatable.
    #[arg(long = "phi", required = true, allow_hyphen_values = true)]
    pub phi: Vec<String>,
    /// Complement vector as comma-separated expressions, repeatable.
    #[arg(long = "w", required = true, allow_hyphen_values = true)]
    pub w: Vec<String>,
    /// Family parameter and its values, e.g. a=-1,0,1.
    #[arg(long, allow_hyphen_values = true)]
    pub family: Option<String>,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub emit_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    if k.trim().is_empty() {
        return Err(format!("empty parameter name in {s:?}"));
    }
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl SystemArgs {
    /// Catalog entry, or a definition file when the selector names one.
    pub fn load(&self) -> Result<CatalogEntry, Failure> {
        let path = Path::new(&self.system);
        if self.system.ends_with(".toml") || path.is_file() {
            if !self.params.is_empty() {
                return Err(Failure::Usage("--param applies to catalog systems only".into()));
            }
            let def = SystemDefinition::load(path)?;
            return Ok(def.build(&self.system)?);
        }
        Ok(make_system(&self.system, &self.params)?)
    }
}

/// Numeric parameters of an entry, usable as expression constants.
pub fn numeric_params(entry: &CatalogEntry) -> Vec<(String, f64)> {
    entry
        .params
        .iter()
        .filter_map(|(k, v)| v.parse::<f64>().ok().map(|x| (k.clone(), x)))
        .collect()
}

/// Comma-separated constant expressions.
pub fn parse_point(text: &str, entry: &CatalogEntry) -> Result<Vec<f64>, Failure> {
    let params = numeric_params(entry);
    let values = text
        .split(',')
        .map(|s| {
            let e = entry.chart().parse_with(s.trim(), &params)?;
            if e.max_var_index().is_some() {
                return Err(Failure::Usage(format!("point component {s:?} must not depend on coordinates")));
            }
            let origin = vec![0.0; entry.system.dim()];
            Ok(e.eval(&origin).map_err(leibniz::Error::from)?)
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    if values.len() != entry.system.dim() {
        return Err(Failure::Usage(format!(
            "point has {} components, {} expects {}",
            values.len(),
            entry.name,
            entry.system.dim()
        )));
    }
    Ok(values)
}

impl FlowArgs {
    pub fn x0(&self, entry: &CatalogEntry) -> Result<Vec<f64>, Failure> {
        match &self.x0 {
            Some(s) => parse_point(s, entry),
            None => Ok(entry.default_x0.clone()),
        }
    }

    pub fn config(&self, default_t1: f64, default_dt: f64) -> Result<IntegratorConfig, Failure> {
        let t1 = self.t1.unwrap_or(default_t1);
        let cfg = match self.method {
            MethodArg::Rk4 => IntegratorConfig::rk4(self.t0, t1, self.dt.unwrap_or(default_dt)),
            MethodArg::Rk45 => IntegratorConfig::rk45(self.t0, t1, self.atol, self.rtol),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes `text` to the file or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

