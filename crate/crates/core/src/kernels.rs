//! Mercer kernels and an explicit degree-2 polynomial feature map.
//!
//! The feature map exists so tests can check the kernel trick directly: an
//! inner product in the mapped space must equal the polynomial kernel on the
//! raw inputs.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A Mercer kernel `k(x, y)` and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-‖x − y‖² / (2σ²))`
    Gaussian { sigma: f64 },
    /// `(x·y + offset)^degree`
    Polynomial {
        degree: u32,
        #[serde(default = "default_offset")]
        offset: f64,
    },
    /// `x·y`
    Linear,
}

fn default_offset() -> f64 {
    1.0
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian { sigma: 1.0 }
    }
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec::Gaussian { sigma }
    }

    /// Polynomial kernel with the default offset `c = 1`.
    pub fn polynomial(degree: u32) -> Self {
        KernelSpec::Polynomial {
            degree,
            offset: default_offset(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(Error::InvalidKernel(
                format!("gaussian sigma must be positive, got {sigma}"),
            )),
            KernelSpec::Polynomial { degree, .. } if degree < 1 => {
                Err(Error::InvalidKernel("polynomial degree must be at least 1".into()))
            }
            KernelSpec::Polynomial { offset, .. } if !(offset.is_finite() && offset >= 0.0) => Err(
                Error::InvalidKernel(format!("polynomial offset must be nonnegative, got {offset}")),
            ),
            _ => Ok(()),
        }
    }

    /// Evaluates `k(x, y)`, checking parameters and dimensions.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        if x.is_empty() {
            return Err(Error::Empty("kernel input"));
        }
        check_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates `k(x, y)` without validation. Callers guarantee
    /// `x.len() == y.len()` and a valid spec.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Polynomial { degree, offset } => {
                let base = dot(x, y) + offset;
                base.powi(degree as i32)
            }
            KernelSpec::Linear => dot(x, y),
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Explicit feature map `φ` with `φ(x)·φ(y) = (x·y + c)²`.
///
/// Components, in order: the squares `x_i²`, the cross terms `√2·x_i·x_j`
/// for `i < j`, the linear terms `√(2c)·x_i`, and the constant `c`. The
/// output has `(n² + 3n + 2) / 2` entries.
pub fn explicit_poly2_map(x: &[f64], offset: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("feature map input"));
    }
    if !(offset.is_finite() && offset >= 0.0) {
        return Err(Error::InvalidKernel(format!(
            "polynomial offset must be nonnegative, got {offset}"
        )));
    }
    let n = x.len();
    let mut out = Vec::with_capacity((n * n + 3 * n + 2) / 2);
    out.extend(x.iter().map(|v| v * v));
    let root2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(root2 * x[i] * x[j]);
        }
    }
    let lin = (2.0 * offset).sqrt();
    out.extend(x.iter().map(|v| lin * v));
    out.push(offset);
    Ok(out)
}
