//! Kernel expansion `Σ c_i k(x_i, ·)`: the implicit weight vector of every
//! kernel-space adaptive learner in this crate.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::KernelSpec;

/// Ordered list of `(coefficient, center)` pairs under one kernel.
///
/// When a cap is set the expansion keeps its *first* `cap` entries and
/// silently drops later pushes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionDoc", into = "ExpansionDoc")]
pub struct KernelExpansion {
    kernel: KernelSpec,
    dim: Option<usize>,
    cap: Option<usize>,
    coeffs: Vec<f64>,
    // row-major, coeffs.len() rows of `dim` entries
    centers: Vec<f64>,
}

impl KernelExpansion {
    pub fn new(kernel: KernelSpec, cap: Option<usize>) -> Result<Self> {
        kernel.validate()?;
        if cap == Some(0) {
            return Err(Error::InvalidParameter("dictionary cap must be positive".into()));
        }
        Ok(Self {
            kernel,
            dim: None,
            cap,
            coeffs: Vec::new(),
            centers: Vec::new(),
        })
    }

    /// Same as [`KernelExpansion::new`] but with the input dimension fixed up
    /// front rather than by the first push.
    pub fn with_dim(kernel: KernelSpec, cap: Option<usize>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("expansion input dimension"));
        }
        let mut e = Self::new(kernel, cap)?;
        e.dim = Some(dim);
        Ok(e)
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.cap.is_some_and(|c| self.len() >= c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.dim.unwrap_or(0);
        &self.centers[i * d..(i + 1) * d]
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        (0..self.len()).map(move |i| (self.coeffs[i], self.center(i)))
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) => check_dim(d, x.len()),
            None if x.is_empty() => Err(Error::Empty("expansion input")),
            None => Ok(()),
        }
    }

    /// `Σ c_i k(x_i, x)`; zero for an empty expansion.
    pub fn sum(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.sum_unchecked(x))
    }

    pub(crate) fn sum_unchecked(&self, x: &[f64]) -> f64 {
        let Some(d) = self.dim else { return 0.0 };
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let kernel = self.kernel;
        self.coeffs
            .iter()
            .zip(self.centers.chunks_exact(d))
            .map(|(c, center)| c * kernel.eval_unchecked(center, x))
            .sum()
    }

    /// Appends `(coeff, x)` unless the cap has been reached. Returns whether
    /// the entry was stored.
    pub fn push(&mut self, coeff: f64, x: &[f64]) -> Result<bool> {
        self.check_input(x)?;
        if self.is_full() {
            return Ok(false);
        }
        self.dim.get_or_insert(x.len());
        self.coeffs.push(coeff);
        self.centers.extend_from_slice(x);
        Ok(true)
    }

    /// Copy holding only the first `n` entries (all of them if `n ≥ len`).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let d = self.dim.unwrap_or(0);
        Self {
            kernel: self.kernel,
            dim: self.dim,
            cap: self.cap,
            coeffs: self.coeffs[..n].to_vec(),
            centers: self.centers[..n * d].to_vec(),
        }
    }
}

/// Serialized form: kernel, cap, and `[coeff, [input...]]` rows.
#[derive(Serialize, Deserialize)]
struct ExpansionDoc {
    kernel: KernelSpec,
    #[serde(default)]
    dim: Option<usize>,
    #[serde(default)]
    cap: Option<usize>,
    dictionary: Vec<(f64, Vec<f64>)>,
}

impl From<KernelExpansion> for ExpansionDoc {
    fn from(e: KernelExpansion) -> Self {
        let dictionary = e.entries().map(|(c, x)| (c, x.to_vec())).collect();
        ExpansionDoc {
            kernel: e.kernel,
            dim: e.dim,
            cap: e.cap,
            dictionary,
        }
    }
}

impl TryFrom<ExpansionDoc> for KernelExpansion {
    type Error = Error;

    fn try_from(doc: ExpansionDoc) -> Result<Self> {
        let mut e = match doc.dim {
            Some(d) => KernelExpansion::with_dim(doc.kernel, None, d)?,
            None => KernelExpansion::new(doc.kernel, None)?,
        };
        for (c, x) in &doc.dictionary {
            e.push(*c, x)?;
        }
        if doc.cap == Some(0) {
            return Err(Error::InvalidParameter("dictionary cap must be positive".into()));
        }
        e.cap = doc.cap;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sum_is_zero() {
        let e = KernelExpansion::new(KernelSpec::Linear, None).unwrap();
        assert_eq!(e.sum(&[3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_locked_by_first_push() {
        let mut e = KernelExpansion::new(KernelSpec::Linear, None).unwrap();
        e.push(1.0, &[1.0, 2.0]).unwrap();
        assert!(matches!(
            e.push(1.0, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(e.sum(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn cap_freezes_first_entries() {
        let mut e = KernelExpansion::new(KernelSpec::Linear, Some(2)).unwrap();
        assert!(e.push(1.0, &[1.0]).unwrap());
        assert!(e.push(2.0, &[2.0]).unwrap());
        assert!(!e.push(3.0, &[3.0]).unwrap());
        assert_eq!(e.coeffs(), &[1.0, 2.0]);
        assert!(KernelExpansion::new(KernelSpec::Linear, Some(0)).is_err());
    }

    #[test]
    fn json_rows_round_trip() {
        let mut e = KernelExpansion::new(KernelSpec::gaussian(0.7), Some(5)).unwrap();
        e.push(0.1 + 0.2, &[1.0 / 3.0, -2.5e-17]).unwrap();
        e.push(-7.0e300, &[f64::MIN_POSITIVE, 1.0]).unwrap();
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"dictionary\":[[0.30000000000000004,"));
        let back: KernelExpansion = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }
}
