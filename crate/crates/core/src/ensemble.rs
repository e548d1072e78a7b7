//! Multilayer-perceptron base classifiers and the ensemble that produces
//! decision profiles.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nnklms::logistic;
use crate::profile::{argmax, DecisionProfile};
use crate::seed;

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| logistic(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)),
        );
    }
}

/// Logistic multilayer perceptron trained by backpropagation on squared
/// error against one-hot targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidParameter("an MLP needs at least two layers".into()));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidParameter("layer sizes must be positive".into()));
    }
    Ok(())
}

impl Mlp {
    /// Weights and biases drawn uniformly from `[-0.5, 0.5]`.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut rng = seed::rng(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| rng.gen_range(-0.5..=0.5)).collect(),
                    biases: (0..outputs).map(|_| rng.gen_range(-0.5..=0.5)).collect(),
                }
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        let mut m = Self::init(layer_sizes, 0)?;
        for l in &mut m.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
        Ok(m)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// All parameters, layer by layer: weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
        check_dim(total, params.len())?;
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            let (b, r) = r.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.num_inputs(), x.len())?;
        let mut acts = Vec::new();
        self.activations_into(x, &mut acts);
        Ok(acts.pop().unwrap())
    }

    fn activations_into(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize_with(self.layers.len(), Vec::new);
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(i);
            let input = if i == 0 { x } else { &done[i - 1] };
            layer.forward_into(input, &mut rest[0]);
        }
    }

    /// `½‖f(x) − target‖²`
    pub fn loss(&self, x: &[f64], target: &[f64]) -> Result<f64> {
        let y = self.forward(x)?;
        check_dim(y.len(), target.len())?;
        Ok(0.5 * y.iter().zip(target).map(|(a, t)| (a - t) * (a - t)).sum::<f64>())
    }

    /// Backpropagated gradient of [`Mlp::loss`], ordered like [`Mlp::params`].
    pub fn gradient(&self, x: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.num_inputs(), x.len())?;
        check_dim(self.num_outputs(), target.len())?;
        let mut acts = Vec::new();
        self.activations_into(x, &mut acts);
        let deltas = self.deltas(&acts, target);
        let mut grad = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            for d in &deltas[i] {
                grad.extend(input.iter().map(|a| d * a));
            }
            grad.extend_from_slice(&deltas[i]);
            debug_assert_eq!(deltas[i].len(), l.outputs);
        }
        Ok(grad)
    }

    fn deltas(&self, acts: &[Vec<f64>], target: &[f64]) -> Vec<Vec<f64>> {
        let n = self.layers.len();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); n];
        deltas[n - 1] = acts[n - 1]
            .iter()
            .zip(target)
            .map(|(y, t)| (y - t) * y * (1.0 - y))
            .collect();
        for i in (0..n - 1).rev() {
            let next = &self.layers[i + 1];
            let mut back = vec![0.0; next.inputs];
            for (row, d) in next.weights.chunks_exact(next.inputs).zip(&deltas[i + 1]) {
                for (b, w) in back.iter_mut().zip(row) {
                    *b += w * d;
                }
            }
            deltas[i] = back.iter().zip(&acts[i]).map(|(b, a)| b * a * (1.0 - a)).collect();
        }
        deltas
    }

    /// Per-epoch shuffled SGD. Returns the online training error of every
    /// epoch: the fraction of samples whose pre-update prediction was wrong.
    pub fn train(
        &mut self,
        samples: &[Vec<f64>],
        labels: &[usize],
        epochs: usize,
        learn_rate: f64,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if samples.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !(learn_rate.is_finite() && learn_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be nonnegative, got {learn_rate}"
            )));
        }
        let classes = self.num_outputs();
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: classes,
            });
        }
        for s in samples {
            check_dim(self.num_inputs(), s.len())?;
        }

        let mut rng = seed::rng(seed);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut acts = Vec::new();
        let mut target = vec![0.0; classes];
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut wrong = 0usize;
            for &i in &order {
                let x = &samples[i];
                self.activations_into(x, &mut acts);
                if argmax(acts.last().unwrap()) != labels[i] {
                    wrong += 1;
                }
                target.fill(0.0);
                target[labels[i]] = 1.0;
                let deltas = self.deltas(&acts, &target);
                for (li, layer) in self.layers.iter_mut().enumerate() {
                    let input = if li == 0 { x.as_slice() } else { &acts[li - 1] };
                    for ((row, b), d) in layer
                        .weights
                        .chunks_exact_mut(layer.inputs)
                        .zip(layer.biases.iter_mut())
                        .zip(&deltas[li])
                    {
                        let g = learn_rate * d;
                        for (w, a) in row.iter_mut().zip(input) {
                            *w -= g * a;
                        }
                        *b -= g;
                    }
                }
            }
            history.push(wrong as f64 / samples.len() as f64);
        }
        Ok(history)
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

/// How to build the base-classifier ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Number of base classifiers.
    pub count: usize,
    /// Hidden-layer widths cycled across members. Empty selects
    /// `{FN, ⌈1.5·FN⌉, 2·FN}`.
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub learn_rate: f64,
    /// Member `i` is initialized and shuffled with `seed + i`.
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            count: 10,
            hidden_sizes: Vec::new(),
            epochs: 300,
            learn_rate: 0.5,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn hidden_size(&self, member: usize, num_features: usize) -> usize {
        if self.hidden_sizes.is_empty() {
            let cycle = [num_features, (3 * num_features).div_ceil(2), 2 * num_features];
            cycle[member % 3]
        } else {
            self.hidden_sizes[member % self.hidden_sizes.len()]
        }
    }

    pub fn member_seed(&self, member: usize) -> u64 {
        self.seed.wrapping_add(member as u64)
    }
}

/// Trained base classifiers sharing input and output dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    num_features: usize,
    num_classes: usize,
    members: Vec<Mlp>,
}

impl Ensemble {
    /// Trains `config.count` members on the full training set, in parallel.
    pub fn build(config: &EnsembleConfig, samples: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<Self> {
        if config.count < 2 {
            return Err(Error::InvalidParameter(format!(
                "an ensemble needs at least 2 members, got {}",
                config.count
            )));
        }
        if config.hidden_sizes.contains(&0) {
            return Err(Error::InvalidParameter("hidden sizes must be positive".into()));
        }
        let num_features = samples.first().ok_or(Error::Empty("training set"))?.len();
        let members = (0..config.count)
            .into_par_iter()
            .map(|i| {
                let sizes = [num_features, config.hidden_size(i, num_features), num_classes];
                let seed = config.member_seed(i);
                let mut m = Mlp::init(&sizes, seed)?;
                m.train(samples, labels, config.epochs, config.learn_rate, seed)?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members)
    }

    pub fn from_members(members: Vec<Mlp>) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("ensemble members"))?;
        let (num_features, num_classes) = (first.num_inputs(), first.num_outputs());
        if members
            .iter()
            .any(|m| m.num_inputs() != num_features || m.num_outputs() != num_classes)
        {
            return Err(Error::ShapeMismatch(
                "ensemble members disagree on feature or class count".into(),
            ));
        }
        Ok(Self {
            num_features,
            num_classes,
            members,
        })
    }

    pub fn members(&self) -> &[Mlp] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Whether some pair of members differs in architecture or parameters.
    pub fn is_diverse(&self) -> bool {
        self.members.windows(2).any(|w| w[0] != w[1])
    }

    /// Row `i` is member `i`'s output on `x`.
    pub fn profile(&self, x: &[f64]) -> Result<DecisionProfile> {
        check_dim(self.num_features, x.len())?;
        let mut values = Vec::with_capacity(self.members.len() * self.num_classes);
        for m in &self.members {
            values.extend(m.forward(x)?);
        }
        DecisionProfile::new(self.members.len(), self.num_classes, values)
    }
}

/// Fraction of samples on which two members' argmax decisions differ,
/// averaged over all member pairs.
pub fn pairwise_disagreement(profiles: &[DecisionProfile]) -> f64 {
    let Some(first) = profiles.first() else { return 0.0 };
    let bn = first.num_base();
    if bn < 2 {
        return 0.0;
    }
    let mut differ = 0usize;
    for p in profiles {
        let votes: Vec<usize> = p.rows().map(argmax).collect();
        for a in 0..bn {
            for b in a + 1..bn {
                differ += usize::from(votes[a] != votes[b]);
            }
        }
    }
    let pairs = bn * (bn - 1) / 2;
    differ as f64 / (pairs * profiles.len()) as f64
}
