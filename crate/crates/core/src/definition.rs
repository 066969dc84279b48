//! Text format for user-defined systems.
//!
//! ```toml
//! coordinates = ["x", "y", "z"]
//! symmetry = "skew"                 # skew | symmetric | general
//! hamiltonian = "(x^2 + y^2)/2"
//! domain = "z^2"                    # optional, regular where value > 0
//! x0 = [1.0, 0.5, 1.0]              # optional
//!
//! [parameters]                      # optional named constants
//! k = 2.0
//!
//! [tensor]                          # sparse; keys are "row,col" by index or name
//! "x,y" = "x"
//! "0,2" = "y"
//!
//! [samples]                         # optional, defaults to [-2,2]^n
//! lower = [-2, -2, -2]
//! upper = [2, 2, 2]
//!
//! [constraints]                     # optional
//! phi = ["..."]
//! complement = [["...", ...]]
//!
//! [action]                          # optional
//! generators = [["0", "0", "z"]]
//! group_parameters = ["a"]
//! group = ["x", "y", "exp(a)*z"]
//! momentum = ["..."]                # optional
//! factors = ["..."]                 # optional, solved when absent
//!
//! [reduction]                       # optional, needs [action]
//! coordinates = ["x", "y"]
//! invariants = ["x", "y"]
//! section = ["x", "y", "1"]
//! ```
//!
//! Unrecognized keys are rejected.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::bracket::{CoordinateChart, LeibnizSystem, LeibnizTensorField, ScalarField, SmoothMap, Symmetry};
use crate::dynamics::Monitor;
use crate::error::{Error, Result};
use crate::nonholonomic::ConstraintSpec;
use crate::sampling::SampleBox;
use crate::symmetry::{ActionSpec, GroupAction, InvariantReduction, MomentumMapSpec};
use crate::systems::{CatalogEntry, CatalogReduction};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDefinition {
    pub coordinates: Vec<String>,
    pub symmetry: SymmetryFlag,
    pub hamiltonian: String,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub tensor: BTreeMap<String, String>,
    #[serde(default)]
    pub samples: Option<BoxDefinition>,
    #[serde(default)]
    pub constraints: Option<ConstraintDefinition>,
    #[serde(default)]
    pub action: Option<ActionDefinition>,
    #[serde(default)]
    pub reduction: Option<ReductionDefinition>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryFlag {
    Skew,
    Symmetric,
    General,
}

impl From<SymmetryFlag> for Symmetry {
    fn from(f: SymmetryFlag) -> Symmetry {
        match f {
            SymmetryFlag::Skew => Symmetry::Skew,
            SymmetryFlag::Symmetric => Symmetry::Symmetric,
            SymmetryFlag::General => Symmetry::General,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDefinition {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDefinition {
    pub phi: Vec<String>,
    pub complement: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDefinition {
    pub generators: Vec<Vec<String>>,
    #[serde(default)]
    pub group_parameters: Vec<String>,
    #[serde(default)]
    pub group: Option<Vec<String>>,
    #[serde(default)]
    pub momentum: Option<Vec<String>>,
    #[serde(default)]
    pub factors: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionDefinition {
    pub coordinates: Vec<String>,
    pub invariants: Vec<String>,
    pub section: Vec<String>,
    #[serde(default)]
    pub samples: Option<BoxDefinition>,
}

fn def_err(msg: impl Into<String>) -> Error {
    Error::Definition(msg.into())
}

impl SystemDefinition {
    pub fn parse(text: &str) -> Result<SystemDefinition> {
        toml::from_str(text).map_err(|e| def_err(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<SystemDefinition> {
        let text = std::fs::read_to_string(path).map_err(|e| def_err(format!("{}: {e}", path.display())))?;
        SystemDefinition::parse(&text)
    }

    fn index(&self, chart: &CoordinateChart, key: &str) -> Result<(usize, usize)> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(def_err(format!("tensor key {key:?} is not \"row,col\"")));
        }
        let one = |s: &str| -> Result<usize> {
            let i = match s.parse::<usize>() {
                Ok(i) => i,
                Err(_) => chart
                    .index_of(s)
                    .ok_or_else(|| def_err(format!("tensor key {key:?}: unknown coordinate {s:?}")))?,
            };
            if i >= chart.dim() {
                return Err(def_err(format!("tensor key {key:?}: index {i} out of range")));
            }
            Ok(i)
        };
        Ok((one(parts[0])?, one(parts[1])?))
    }

    /// Builds the system and its optional specs as a catalog-style entry.
    pub fn build(&self, name: &str) -> Result<CatalogEntry> {
        let chart = CoordinateChart::new(self.coordinates.iter().map(String::as_str))?;
        let n = chart.dim();
        let params: Vec<(String, f64)> = self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let mut rows = vec![vec!["0".to_string(); n]; n];
        let mut seen = BTreeMap::new();
        for (key, value) in &self.tensor {
            let (i, j) = self.index(&chart, key)?;
            if let Some(prev) = seen.insert((i, j), key) {
                return Err(def_err(format!("tensor entry ({i},{j}) given twice: {prev:?} and {key:?}")));
            }
            rows[i][j] = value.clone();
        }
        let tensor = LeibnizTensorField::parse_with(&chart, &rows, &params, self.symmetry.into())?;
        let h = ScalarField::parse_with(&chart, &self.hamiltonian, &params)?;
        let mut system = LeibnizSystem::new(tensor, h)?;
        if let Some(d) = &self.domain {
            system = system.with_domain(ScalarField::parse_with(&chart, d, &params)?)?;
        }
        let sample_box = self.box_or_cube(self.samples.as_ref(), n)?;
        let x0 = self.x0.clone().unwrap_or_else(|| vec![1.0; n]);
        if x0.len() != n {
            return Err(Error::dim("x0", n, x0.len()));
        }
        let constraint = match &self.constraints {
            Some(c) => {
                let phi = c
                    .phi
                    .iter()
                    .map(|s| ScalarField::parse_with(&chart, s, &params))
                    .collect::<Result<Vec<_>>>()?;
                let w = c
                    .complement
                    .iter()
                    .map(|w| SmoothMap::parse_with(&chart, w, &params))
                    .collect::<Result<Vec<_>>>()?;
                Some(ConstraintSpec::new(system.clone(), phi, w)?)
            }
            None => None,
        };
        let action = match &self.action {
            Some(a) => Some(self.action_spec(&chart, a, &params)?),
            None => None,
        };
        let momentum = match &self.action {
            Some(ActionDefinition {
                momentum: Some(js),
                factors,
                ..
            }) => {
                let js = js
                    .iter()
                    .map(|s| ScalarField::parse_with(&chart, s, &params))
                    .collect::<Result<Vec<_>>>()?;
                Some(match factors {
                    Some(fs) => {
                        let fs = fs
                            .iter()
                            .map(|s| ScalarField::parse_with(&chart, s, &params).map(Some))
                            .collect::<Result<Vec<_>>>()?;
                        MomentumMapSpec::new(js, fs)?
                    }
                    None => MomentumMapSpec::with_unknown_factors(js),
                })
            }
            _ => None,
        };
        let reduction = match &self.reduction {
            Some(r) => {
                let action = action
                    .clone()
                    .ok_or_else(|| def_err("[reduction] needs an [action] section"))?;
                let names: Vec<&str> = r.coordinates.iter().map(String::as_str).collect();
                let red = InvariantReduction::parse(&chart, &names, &r.invariants, &r.section, &params)?;
                let k = names.len();
                let g = action.group().map_or(0, GroupAction::param_dim);
                Some(CatalogReduction {
                    source: system.clone(),
                    reduction: red,
                    action,
                    reduced_box: self.box_or_cube(r.samples.as_ref(), k)?,
                    group_box: SampleBox::cube(g, -1.0, 1.0),
                })
            }
            None => None,
        };
        let monitors = vec![Monitor::new("H", system.hamiltonian().clone())];
        let entry = CatalogEntry {
            name: name.to_string(),
            description: format!("system defined in {name}"),
            params: self.parameters.iter().map(|(k, v)| (k.clone(), format!("{v:?}"))).collect(),
            system,
            sample_box,
            default_x0: x0,
            monitors,
            casimirs: Vec::new(),
            equivalent_hamiltonian: None,
            constraint,
            action,
            momentum,
            reduction,
            reducibility: None,
            parts: Vec::new(),
            oracles: Vec::new(),
        };
        let samples = entry.samples(0, 16)?;
        entry.system.tensor().verify_symmetry(&samples, 1e-12)?;
        Ok(entry)
    }

    fn box_or_cube(&self, b: Option<&BoxDefinition>, n: usize) -> Result<SampleBox> {
        match b {
            Some(b) => {
                if b.lower.len() != n {
                    return Err(Error::dim("sample box", n, b.lower.len()));
                }
                SampleBox::new(b.lower.clone(), b.upper.clone())
            }
            None => Ok(SampleBox::cube(n, -2.0, 2.0)),
        }
    }

    fn action_spec(&self, chart: &Arc<CoordinateChart>, a: &ActionDefinition, params: &[(String, f64)]) -> Result<ActionSpec> {
        let gens = a
            .generators
            .iter()
            .map(|g| SmoothMap::parse_with(chart, g, params))
            .collect::<Result<Vec<_>>>()?;
        let group = match &a.group {
            Some(comps) => {
                let names: Vec<&str> = a.group_parameters.iter().map(String::as_str).collect();
                Some(GroupAction::parse(chart, &names, comps, params)?)
            }
            None => None,
        };
        ActionSpec::new(gens, group)
    }
}
