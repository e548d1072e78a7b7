//! Least-mean-square adaptive filters: the classical input-space LMS and its
//! kernelized form.
//!
//! Both filters use the update `w ← w + 2μ·e·u`. [`Klms`] takes the
//! effective step `eta = 2μ` directly, so a linear-kernel `Klms` with
//! `eta = 2μ` tracks an [`LmsFilter`] with step size `μ` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::expansion::KernelExpansion;
use crate::kernels::{dot, KernelSpec};

fn check_step(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Linear transversal filter trained by LMS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmsFilter {
    weights: Vec<f64>,
    step_size: f64,
}

impl LmsFilter {
    /// Zero-initialized filter of the given dimension.
    pub fn new(dim: usize, step_size: f64) -> Result<Self> {
        Self::with_weights(vec![0.0; dim], step_size)
    }

    pub fn with_weights(weights: Vec<f64>, step_size: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("filter weights"));
        }
        check_step("step size", step_size)?;
        Ok(Self { weights, step_size })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), u.len())?;
        Ok(dot(&self.weights, u))
    }

    /// One LMS update on `(u, d)`; returns the a-priori error `d − w·u`.
    pub fn step(&mut self, u: &[f64], d: f64) -> Result<f64> {
        let e = d - self.predict(u)?;
        let g = 2.0 * self.step_size * e;
        for (w, x) in self.weights.iter_mut().zip(u) {
            *w += g * x;
        }
        Ok(e)
    }
}

/// Kernel LMS regressor. The weight vector lives in feature space and is
/// represented by the expansion of past errors and inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Klms {
    expansion: KernelExpansion,
    eta: f64,
}

impl Klms {
    pub fn new(kernel: KernelSpec, eta: f64, cap: Option<usize>) -> Result<Self> {
        check_step("eta", eta)?;
        Ok(Self {
            expansion: KernelExpansion::new(kernel, cap)?,
            eta,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dictionary(&self) -> &KernelExpansion {
        &self.expansion
    }

    /// `eta · Σ e_i k(u_i, u)`
    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        Ok(self.eta * self.expansion.sum(u)?)
    }

    /// One KLMS update; stores `(e, u)` unless the dictionary is frozen at
    /// its cap. Returns the a-priori error.
    pub fn step(&mut self, u: &[f64], d: f64) -> Result<f64> {
        let e = d - self.predict(u)?;
        self.expansion.push(e, u)?;
        Ok(e)
    }

    /// Filter restricted to its first `n` dictionary entries.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            expansion: self.expansion.truncated(n),
            eta: self.eta,
        }
    }
}
