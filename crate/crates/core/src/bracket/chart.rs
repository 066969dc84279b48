use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};

/// A single global coordinate chart `R^n` with named coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateChart {
    names: Vec<String>,
}

impl CoordinateChart {
    pub fn new<I, S>(names: I) -> Result<Arc<CoordinateChart>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Chart("a chart needs at least one coordinate".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            let valid = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::Chart(format!("{name:?} is not a valid coordinate name")));
            }
            if expr::Func::from_name(name).is_some() {
                return Err(Error::Chart(format!("{name:?} is reserved for a function")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Chart(format!("duplicate coordinate {name:?}")));
            }
        }
        Ok(Arc::new(CoordinateChart { names }))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coordinate(&self, index: usize) -> Expr {
        Expr::var(index, self.names[index].as_str())
    }

    pub fn parse(&self, source: &str) -> Result<Expr> {
        self.parse_with(source, &[])
    }

    pub fn parse_with(&self, source: &str, params: &[(String, f64)]) -> Result<Expr> {
        expr::parse_with_params(source, &self.names, params).map_err(|error| Error::Parse {
            source_text: source.to_string(),
            error,
        })
    }

    pub(crate) fn check_point(&self, context: &'static str, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::dim(context, self.dim(), point.len()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(CoordinateChart::new(["x", "x"]).is_err());
        assert!(CoordinateChart::new(Vec::<String>::new()).is_err());
        assert!(CoordinateChart::new(["sin"]).is_err());
        assert!(CoordinateChart::new(["1x"]).is_err());
        let c = CoordinateChart::new(["q", "p"]).unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.index_of("p"), Some(1));
    }
}
