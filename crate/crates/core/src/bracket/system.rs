use std::sync::Arc;

use nalgebra::DVector;

use super::chart::CoordinateChart;
use super::field::ScalarField;
use super::ops::{self, Side};
use super::tensor::LeibnizTensorField;
use crate::error::{Error, Result};

/// A Leibniz manifold with a chosen Hamiltonian: the unit of simulation.
///
/// The optional regular domain is `{m : domain(m) > 0}`; points where the
/// predicate fails to evaluate are outside.
#[derive(Debug, Clone)]
pub struct LeibnizSystem {
    chart: Arc<CoordinateChart>,
    tensor: LeibnizTensorField,
    hamiltonian: ScalarField,
    domain: Option<ScalarField>,
}

impl LeibnizSystem {
    pub fn new(tensor: LeibnizTensorField, hamiltonian: ScalarField) -> Result<LeibnizSystem> {
        if tensor.chart() != hamiltonian.chart() {
            return Err(Error::Chart(
                "tensor and Hamiltonian live on different charts".into(),
            ));
        }
        Ok(LeibnizSystem {
            chart: tensor.chart().clone(),
            tensor,
            hamiltonian,
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: ScalarField) -> Result<LeibnizSystem> {
        if domain.chart() != &self.chart {
            return Err(Error::Chart("domain predicate lives on a different chart".into()));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn with_hamiltonian(&self, hamiltonian: ScalarField) -> Result<LeibnizSystem> {
        let mut s = LeibnizSystem::new(self.tensor.clone(), hamiltonian)?;
        s.domain = self.domain.clone();
        Ok(s)
    }

    pub fn with_tensor(&self, tensor: LeibnizTensorField) -> Result<LeibnizSystem> {
        let mut s = LeibnizSystem::new(tensor, self.hamiltonian.clone())?;
        s.domain = self.domain.clone();
        Ok(s)
    }

    pub fn chart(&self) -> &Arc<CoordinateChart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn tensor(&self) -> &LeibnizTensorField {
        &self.tensor
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.hamiltonian
    }

    pub fn domain(&self) -> Option<&ScalarField> {
        self.domain.as_ref()
    }

    pub fn in_domain(&self, m: &[f64]) -> bool {
        if m.len() != self.dim() || m.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.domain {
            None => true,
            Some(d) => matches!(d.value(m), Ok(v) if v > 0.0),
        }
    }

    pub fn check_domain(&self, m: &[f64]) -> Result<()> {
        self.chart.check_point("system point", m)?;
        if self.in_domain(m) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: m.to_vec() })
        }
    }

    /// `X^R_h(m) = B(m) ∇h(m)`, the evolution vector field.
    pub fn vector_field(&self, m: &[f64]) -> Result<DVector<f64>> {
        self.check_domain(m)?;
        ops::leibniz_vector_field(&self.tensor, &self.hamiltonian, m, Side::Right)
    }

    pub fn bracket(&self, f: &ScalarField, g: &ScalarField, m: &[f64]) -> Result<f64> {
        self.check_domain(m)?;
        ops::bracket_eval(&self.tensor, f, g, m)
    }

    pub fn leibniz_vector_field(&self, h: &ScalarField, m: &[f64], side: Side) -> Result<DVector<f64>> {
        self.check_domain(m)?;
        ops::leibniz_vector_field(&self.tensor, h, m, side)
    }

    pub fn check_samples(&self, samples: &[Vec<f64>]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        samples.iter().try_for_each(|m| self.check_domain(m))
    }
}
