use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Soft outputs of `BN` base classifiers for one sample: a `BN × CN` matrix,
/// row `i` holding classifier `i`'s class supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProfile {
    num_base: usize,
    num_classes: usize,
    values: Vec<f64>,
}

impl DecisionProfile {
    /// Builds a profile from row-major values. Entries must be finite and
    /// lie in `[0, 1]`.
    pub fn new(num_base: usize, num_classes: usize, values: Vec<f64>) -> Result<Self> {
        if num_base == 0 || num_classes == 0 {
            return Err(Error::Empty("decision profile"));
        }
        if values.len() != num_base * num_classes {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {num_base}x{num_classes} profile",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::InvalidParameter(format!("profile entry {v} outside [0, 1]")));
        }
        Ok(Self {
            num_base,
            num_classes,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged profile rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn num_base(&self) -> usize {
        self.num_base
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_base, self.num_classes)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_classes)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_classes + j]
    }

    /// Row-major (classifier-major) flattening fed to the combiner.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn check_shape(&self, num_base: usize, num_classes: usize) -> Result<()> {
        if self.shape() == (num_base, num_classes) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "expected a {num_base}x{num_classes} profile, got {}x{}",
                self.num_base, self.num_classes
            )))
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_rows() {
        let p = DecisionProfile::from_rows(&[vec![0.9, 0.1], vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        assert_eq!(p.shape(), (3, 2));
        assert_eq!(p.row(2), &[0.2, 0.8]);
        assert_eq!(p.as_flat(), &[0.9, 0.1, 0.6, 0.4, 0.2, 0.8]);
        assert!(p.check_shape(3, 3).is_err());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(DecisionProfile::new(1, 2, vec![0.5]).is_err());
        assert!(DecisionProfile::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(DecisionProfile::new(1, 2, vec![0.5, f64::NAN]).is_err());
        assert!(DecisionProfile::from_rows(&[vec![0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn argmax_tie_break() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1]), 0);
    }
}
