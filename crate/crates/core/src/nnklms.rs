//! The kernel LMS neuron and the one-vs-all combiner built from it.
//!
//! A neuron computes `y = f(s)` with `s = eta · Σ E_i k(X_i, x)` and logistic
//! `f`. Training on `(x, d)` computes the a-priori error `e = d − y`, folds the
//! activation slope into it, `E = e · f′(s)`, and appends `(E, x)` to the
//! expansion. `E` is exactly `−∂(½e²)/∂s`, so each step is a stochastic
//! gradient step taken in feature space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::KernelExpansion;
use crate::kernels::KernelSpec;
use crate::profile::{argmax, DecisionProfile};
use crate::seed;

/// Logistic sigmoid `1 / (1 + e^(−s))`, evaluated without overflow.
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let z = s.exp();
        z / (1.0 + z)
    }
}

/// Derivative of [`logistic`]: `f(s)(1 − f(s))`, at most `0.25`.
pub fn logistic_prime(s: f64) -> f64 {
    // e^{-|s|} / (1 + e^{-|s|})², exactly even in s
    let z = (-s.abs()).exp();
    z / ((1.0 + z) * (1.0 + z))
}

/// Output nonlinearity of a neuron.
///
/// `Identity` (with unit slope) turns the neuron back into a plain KLMS
/// regressor; it exists for equivalence testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Logistic,
    Identity,
}

impl Activation {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            Activation::Logistic => logistic(s),
            Activation::Identity => s,
        }
    }

    pub fn slope(self, s: f64) -> f64 {
        match self {
            Activation::Logistic => logistic_prime(s),
            Activation::Identity => 1.0,
        }
    }
}

/// Single kernel LMS neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    eta: f64,
    #[serde(default)]
    activation: Activation,
    expansion: KernelExpansion,
}

impl Neuron {
    pub fn new(kernel: KernelSpec, eta: f64, cap: Option<usize>) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self {
            eta,
            activation: Activation::Logistic,
            expansion: KernelExpansion::new(kernel, cap)?,
        })
    }

    fn with_dim(kernel: KernelSpec, eta: f64, cap: Option<usize>, dim: usize) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self {
            eta,
            activation: Activation::Logistic,
            expansion: KernelExpansion::with_dim(kernel, cap, dim)?,
        })
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dictionary(&self) -> &KernelExpansion {
        &self.expansion
    }

    pub fn preactivation(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eta * self.expansion.sum(x)?)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.activation.apply(self.preactivation(x)?))
    }

    /// One training step toward target `d ∈ [0, 1]`. Returns the a-priori
    /// error `d − y`.
    pub fn step(&mut self, x: &[f64], d: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::TargetOutOfRange(d));
        }
        let s = self.preactivation(x)?;
        let e = d - self.activation.apply(s);
        self.expansion.push(e * self.activation.slope(s), x)?;
        Ok(e)
    }

    /// Runs `passes` epochs over `(samples, targets)`, each pass visiting the
    /// samples in a fresh shuffled order drawn from `seed`.
    pub fn train(&mut self, samples: &[Vec<f64>], targets: &[f64], passes: usize, seed: u64) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if samples.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples but {} targets",
                samples.len(),
                targets.len()
            )));
        }
        for order in seed::pass_orders(samples.len(), passes, seed) {
            for i in order {
                self.step(&samples[i], targets[i])?;
            }
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")))
    }
}

/// Hyperparameters shared by every neuron of a [`Combiner`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombinerConfig {
    pub kernel: KernelSpec,
    pub eta: f64,
    pub cap: Option<usize>,
    pub passes: usize,
    pub seed: u64,
}

impl Default for CombinerConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::gaussian(1.0),
            eta: 1.0,
            cap: None,
            passes: 5,
            seed: 0,
        }
    }
}

/// One neuron per class over flattened `BN × CN` decision profiles; the
/// decision is the argmax of the neuron outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combiner {
    num_base: usize,
    num_classes: usize,
    passes: usize,
    neurons: Vec<Neuron>,
}

/// Neuron outputs `NY` and the class they select.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerOutput {
    pub supports: Vec<f64>,
    pub class: usize,
}

impl Combiner {
    /// Fresh model with empty dictionaries.
    pub fn untrained(num_base: usize, num_classes: usize, config: &CombinerConfig) -> Result<Self> {
        if num_base == 0 || num_classes == 0 {
            return Err(Error::Empty("combiner shape"));
        }
        if config.passes == 0 {
            return Err(Error::InvalidParameter("passes must be at least 1".into()));
        }
        let dim = num_base * num_classes;
        let neurons = (0..num_classes)
            .map(|_| Neuron::with_dim(config.kernel, config.eta, config.cap, dim))
            .collect::<Result<_>>()?;
        Ok(Self {
            num_base,
            num_classes,
            passes: config.passes,
            neurons,
        })
    }

    /// Trains one-vs-all on one-hot targets.
    ///
    /// Every neuron sees the same per-pass sample order, so the neurons are
    /// trained in parallel without affecting the result.
    pub fn train(profiles: &[DecisionProfile], labels: &[usize], config: &CombinerConfig) -> Result<Self> {
        let first = profiles.first().ok_or(Error::Empty("training set"))?;
        let (num_base, num_classes) = first.shape();
        if profiles.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} profiles but {} labels",
                profiles.len(),
                labels.len()
            )));
        }
        for p in profiles {
            p.check_shape(num_base, num_classes)?;
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        let mut model = Self::untrained(num_base, num_classes, config)?;
        let orders = seed::pass_orders(profiles.len(), config.passes, config.seed);
        model
            .neurons
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(class, neuron)| -> Result<()> {
                for order in &orders {
                    for &i in order {
                        let target = if labels[i] == class { 1.0 } else { 0.0 };
                        neuron.step(profiles[i].as_flat(), target)?;
                    }
                }
                Ok(())
            })?;
        Ok(model)
    }

    pub fn num_base(&self) -> usize {
        self.num_base
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn predict(&self, profile: &DecisionProfile) -> Result<CombinerOutput> {
        profile.check_shape(self.num_base, self.num_classes)?;
        let supports = self
            .neurons
            .iter()
            .map(|n| n.predict(profile.as_flat()))
            .collect::<Result<Vec<_>>>()?;
        let class = argmax(&supports);
        Ok(CombinerOutput { supports, class })
    }

    pub fn predict_class(&self, profile: &DecisionProfile) -> Result<usize> {
        Ok(self.predict(profile)?.class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert_abs_diff_eq!(logistic(0.125), 0.531209, epsilon = 1e-6);
        for s in [-40.0, -3.3, 0.01, 2.0, 17.5] {
            assert_abs_diff_eq!(logistic(s) + logistic(-s), 1.0, epsilon = 1e-15);
        }
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
    }

    #[test]
    fn logistic_prime_values() {
        assert_eq!(logistic_prime(0.0), 0.25);
        for s in [0.3, 1.7, 6.0] {
            assert_eq!(logistic_prime(s), logistic_prime(-s));
        }
        let (s, h) = (0.7, 1e-5);
        let fd = (logistic(s + h) - logistic(s - h)) / (2.0 * h);
        assert_abs_diff_eq!(logistic_prime(s), fd, epsilon = 1e-8);
    }

    #[test]
    fn preactivation_examples() {
        let n = Neuron::new(KernelSpec::Linear, 1.0, None).unwrap();
        assert_eq!(n.preactivation(&[1.0]).unwrap(), 0.0);
        assert_eq!(n.predict(&[3.0]).unwrap(), 0.5);

        let mut n = Neuron::new(KernelSpec::Linear, 1.0, None).unwrap();
        let e = n.step(&[1.0], 1.0).unwrap();
        assert_eq!(e, 0.5);
        assert_eq!(n.dictionary().coeffs(), &[0.125]);
        assert_eq!(n.preactivation(&[1.0]).unwrap(), 0.125);
        assert_abs_diff_eq!(n.predict(&[1.0]).unwrap(), 0.531209, epsilon = 1e-6);

        let mut n2 = Neuron::new(KernelSpec::Linear, 2.0, None).unwrap();
        n2.expansion.push(0.125, &[1.0]).unwrap();
        assert_eq!(n2.preactivation(&[1.0]).unwrap(), 0.25);
    }

    #[test]
    fn zero_error_step_appends_zero() {
        let mut n = Neuron::new(KernelSpec::gaussian(1.0), 1.0, None).unwrap();
        n.step(&[0.2, 0.4], 1.0).unwrap();
        let y = n.predict(&[0.9, 0.1]).unwrap();
        let before = n.predict(&[0.5, 0.5]).unwrap();
        let e = n.step(&[0.9, 0.1], y).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(*n.dictionary().coeffs().last().unwrap(), 0.0);
        assert_eq!(n.predict(&[0.5, 0.5]).unwrap(), before);
    }

    #[test]
    fn step_errors() {
        let mut n = Neuron::new(KernelSpec::Linear, 1.0, None).unwrap();
        assert!(matches!(n.step(&[1.0], 1.5), Err(Error::TargetOutOfRange(_))));
        assert!(matches!(n.step(&[1.0], -0.1), Err(Error::TargetOutOfRange(_))));
        n.step(&[1.0], 1.0).unwrap();
        assert!(matches!(n.step(&[1.0, 2.0], 1.0), Err(Error::DimensionMismatch { .. })));
        assert!(Neuron::new(KernelSpec::Linear, 0.0, None).is_err());
    }

    fn profile(rows: &[&[f64]]) -> DecisionProfile {
        DecisionProfile::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn untrained_predicts_class_zero() {
        let m = Combiner::untrained(2, 3, &CombinerConfig::default()).unwrap();
        let out = m.predict(&profile(&[&[0.1, 0.8, 0.1], &[0.2, 0.7, 0.1]])).unwrap();
        assert_eq!(out.supports, vec![0.5; 3]);
        assert_eq!(out.class, 0);
    }

    #[test]
    fn dictionary_counts() {
        let cfg = CombinerConfig {
            passes: 1,
            ..Default::default()
        };
        let p = profile(&[&[0.9, 0.1]]);
        let m = Combiner::train(std::slice::from_ref(&p), &[0], &cfg).unwrap();
        assert!(m.neurons().iter().all(|n| n.dictionary().len() == 1));

        let ps = vec![p.clone(), profile(&[&[0.2, 0.8]]), profile(&[&[0.4, 0.6]])];
        let cfg = CombinerConfig { passes: 4, ..cfg };
        let m = Combiner::train(&ps, &[0, 1, 1], &cfg).unwrap();
        assert!(m.neurons().iter().all(|n| n.dictionary().len() == 12));
    }

    #[test]
    fn argmax_follows_higher_preactivation() {
        let cfg = CombinerConfig::default();
        let ps = vec![profile(&[&[0.9, 0.1]]), profile(&[&[0.1, 0.9]])];
        let m = Combiner::train(&ps, &[0, 1], &cfg).unwrap();
        let q = profile(&[&[0.05, 0.95]]);
        let s0 = m.neurons()[0].preactivation(q.as_flat()).unwrap();
        let s1 = m.neurons()[1].preactivation(q.as_flat()).unwrap();
        assert!(s1 > s0);
        assert_eq!(m.predict_class(&q).unwrap(), 1);
    }

    #[test]
    fn train_errors() {
        let cfg = CombinerConfig::default();
        assert!(matches!(Combiner::train(&[], &[], &cfg), Err(Error::Empty(_))));
        let ps = vec![profile(&[&[0.9, 0.1]]), profile(&[&[0.9, 0.1, 0.0]])];
        assert!(matches!(
            Combiner::train(&ps, &[0, 1], &cfg),
            Err(Error::ShapeMismatch(_))
        ));
        let ps = vec![profile(&[&[0.9, 0.1]])];
        assert!(matches!(
            Combiner::train(&ps, &[2], &cfg),
            Err(Error::LabelOutOfRange { .. })
        ));
        let m = Combiner::train(&ps, &[0], &cfg).unwrap();
        assert!(m.predict(&profile(&[&[0.9, 0.1], &[0.9, 0.1]])).is_err());
    }
}
