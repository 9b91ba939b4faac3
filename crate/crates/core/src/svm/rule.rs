use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::dataset::Treatment;
use crate::error::{Error, Result};

/// Anything that maps covariates to a treatment.
pub trait Policy: Sync {
    fn decide(&self, x: &[f64]) -> Treatment;
}

impl<F: Fn(&[f64]) -> Treatment + Sync> Policy for F {
    fn decide(&self, x: &[f64]) -> Treatment {
        self(x)
    }
}

/// `f(x) = Σ coeff_i k(s_i, x) + bias`, decided by its sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentRule {
    kernel: KernelSpec,
    support_points: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    bias: f64,
    lambda: f64,
}

impl TreatmentRule {
    pub fn new(
        kernel: KernelSpec,
        support_points: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        bias: f64,
        lambda: f64,
    ) -> Self {
        assert_eq!(support_points.len(), coefficients.len());
        Self { kernel, support_points, coefficients, bias, lambda }
    }

    pub fn constant(kernel: KernelSpec, class: Treatment, lambda: f64) -> Self {
        Self::new(kernel, Vec::new(), Vec::new(), class.value(), lambda)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_points(&self) -> &[Vec<f64>] {
        &self.support_points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_points.iter().zip(&self.coefficients).map(|(s, c)| c * self.kernel.eval(s, x)).sum::<f64>()
            + self.bias
    }

    pub fn decide(&self, x: &[f64]) -> Treatment {
        Treatment::from_sign(self.decision_value(x))
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.support_points.first() {
            Some(s) if s.len() != d => {
                Err(Error::Domain(format!("rule was fitted on {} covariates, query has {d}", s.len())))
            }
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

impl Policy for TreatmentRule {
    fn decide(&self, x: &[f64]) -> Treatment {
        TreatmentRule::decide(self, x)
    }
}
