//! Confusion matrices, the two-stage fusion pipeline and the experiment
//! runner.
//!
//! A fold is evaluated in two stages. The base ensemble is trained on the
//! fold's training rows; the training rows' decision profiles then train the
//! kernel combiner and the decision templates. Each test row's profile is
//! computed once and handed to all nine fusion methods.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{choose_protocol, Dataset, Fold, FoldKind, MinMaxScaler, ProtocolConfig};
use crate::ensemble::{Ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::fusion::{predict_baseline, DecisionTemplates, Method};
use crate::nnklms::{Combiner, CombinerConfig};
use crate::profile::DecisionProfile;
use crate::seed;

/// Counts indexed by (true class, predicted class).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_predictions(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} predictions but {} labels",
                preds.len(),
                labels.len()
            )));
        }
        let mut m = Self::new(num_classes);
        for (&p, &t) in preds.iter().zip(labels) {
            m.record(t, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for label in [truth, predicted] {
            if label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_classes: self.num_classes,
                });
            }
        }
        self.counts[truth * self.num_classes + predicted] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn errors(&self) -> u64 {
        self.total() - self.trace()
    }

    /// `1 − trace / total`; zero for an empty matrix.
    pub fn error_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.errors() as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::ShapeMismatch("confusion matrices of different sizes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Rows of the matrix as text, right-aligned to `width`.
    pub fn lines(&self, width: usize) -> Vec<String> {
        (0..self.num_classes)
            .map(|t| {
                (0..self.num_classes)
                    .map(|p| format!("{:>width$}", self.get(t, p)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.counts.iter().max().map_or(1, |m| m.to_string().len());
        for line in self.lines(width) {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolConfig,
    /// Fit the min-max scaler on each fold's training rows instead of the
    /// whole dataset.
    pub fit_on_train: bool,
    pub ensemble: EnsembleConfig,
    pub combiner: CombinerConfig,
}

impl ExperimentConfig {
    /// Sets every seed in the configuration.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.protocol.seed = seed;
        self.ensemble.seed = seed;
        self.combiner.seed = seed;
        self
    }

    /// Ensemble and combiner seeds used for fold `fold`.
    pub fn for_fold(&self, fold: usize) -> (EnsembleConfig, CombinerConfig) {
        let mut ensemble = self.ensemble.clone();
        ensemble.seed = seed::derive(self.ensemble.seed, fold as u64);
        let mut combiner = self.combiner;
        combiner.seed = seed::derive(self.combiner.seed, fold as u64);
        (ensemble, combiner)
    }
}

/// A trained two-stage system: scaler, base ensemble, decision templates and
/// kernel combiner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub scaler: Option<MinMaxScaler>,
    pub ensemble: Ensemble,
    pub templates: DecisionTemplates,
    pub combiner: Combiner,
}

/// Predictions of one sample by every method and every base classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePrediction {
    /// Indexed like [`Method::ALL`].
    pub methods: [usize; 9],
    pub members: Vec<usize>,
}

impl FusionModel {
    /// Trains both stages on the `train` rows of `d`. The scaler is fit on
    /// the training rows when `fit_on_train` is set, on all of `d` otherwise.
    pub fn fit(
        d: &Dataset,
        train: &[usize],
        fit_on_train: bool,
        ensemble: &EnsembleConfig,
        combiner: &CombinerConfig,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training fold"));
        }
        let (raw_x, train_y) = d.gather(train);
        let mut present = vec![false; d.num_classes()];
        train_y.iter().for_each(|&l| present[l] = true);
        if let Some(c) = present.iter().position(|p| !p) {
            return Err(Error::MissingClass(c));
        }
        let scaler = if fit_on_train {
            MinMaxScaler::fit(&raw_x)?
        } else {
            MinMaxScaler::fit(d.features())?
        };
        let train_x = scaler.transform_all(&raw_x);
        let members = Ensemble::build(ensemble, &train_x, &train_y, d.num_classes())?;
        let mut model = Self::from_ensemble(members, &train_x, &train_y, combiner)?;
        model.scaler = Some(scaler);
        Ok(model)
    }

    /// Second stage only: templates and combiner over the profiles an
    /// already trained ensemble gives on `(train_x, train_y)`.
    pub fn from_ensemble(
        ensemble: Ensemble,
        train_x: &[Vec<f64>],
        train_y: &[usize],
        combiner: &CombinerConfig,
    ) -> Result<Self> {
        let profiles = train_x
            .iter()
            .map(|x| ensemble.profile(x))
            .collect::<Result<Vec<_>>>()?;
        let templates = DecisionTemplates::build(&profiles, train_y, ensemble.num_classes())?;
        let combiner = Combiner::train(&profiles, train_y, combiner)?;
        Ok(Self {
            scaler: None,
            ensemble,
            templates,
            combiner,
        })
    }

    /// Profile of a raw (unscaled) sample.
    pub fn profile(&self, raw: &[f64]) -> Result<DecisionProfile> {
        match &self.scaler {
            Some(s) => {
                crate::error::check_dim(s.mins.len(), raw.len())?;
                self.ensemble.profile(&s.transform(raw))
            }
            None => self.ensemble.profile(raw),
        }
    }

    pub fn predict_profile(&self, profile: &DecisionProfile) -> Result<[usize; 9]> {
        let mut out = [0usize; 9];
        for (slot, method) in out.iter_mut().zip(Method::ALL) {
            *slot = match method {
                Method::Nnklms => self.combiner.predict_class(profile)?,
                m => predict_baseline(m, profile, &self.templates)?,
            };
        }
        Ok(out)
    }

    pub fn predict(&self, raw: &[f64]) -> Result<SamplePrediction> {
        let profile = self.profile(raw)?;
        let methods = self.predict_profile(&profile)?;
        let members = profile.rows().map(crate::profile::argmax).collect();
        Ok(SamplePrediction { methods, members })
    }

    /// Evaluates every method and member on the given raw rows.
    pub fn evaluate(&self, xs: &[Vec<f64>], labels: &[usize]) -> Result<Evaluation> {
        let cn = self.ensemble.num_classes();
        let mut methods = vec![ConfusionMatrix::new(cn); 9];
        let mut members = vec![ConfusionMatrix::new(cn); self.ensemble.len()];
        for (x, &t) in xs.iter().zip(labels) {
            let p = self.predict(x)?;
            for (m, &c) in methods.iter_mut().zip(&p.methods) {
                m.record(t, c)?;
            }
            for (m, &c) in members.iter_mut().zip(&p.members) {
                m.record(t, c)?;
            }
        }
        Ok(Evaluation { methods, members })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Confusion matrices of every fusion method and every base classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Indexed like [`Method::ALL`].
    pub methods: Vec<ConfusionMatrix>,
    pub members: Vec<ConfusionMatrix>,
}

impl Evaluation {
    pub fn method(&self, m: Method) -> &ConfusionMatrix {
        &self.methods[m.index()]
    }
}

/// Per-sample results of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub test: Vec<usize>,
    pub labels: Vec<usize>,
    /// `predictions[method][sample]`, methods indexed like [`Method::ALL`].
    pub predictions: Vec<Vec<usize>>,
    /// `members[member][sample]`
    pub members: Vec<Vec<usize>>,
}

impl FoldOutcome {
    pub fn confusion(&self, m: Method, num_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix::from_predictions(&self.predictions[m.index()], &self.labels, num_classes)
            .expect("fold predictions are in range")
    }

    pub fn member_confusion(&self, member: usize, num_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix::from_predictions(&self.members[member], &self.labels, num_classes)
            .expect("fold predictions are in range")
    }
}

/// Trains and evaluates one fold. A fold whose training rows miss a class
/// fails with [`Error::MissingClass`].
pub fn run_fold(d: &Dataset, fold: &Fold, index: usize, config: &ExperimentConfig) -> Result<FoldOutcome> {
    let (ensemble, combiner) = config.for_fold(index);
    let model = FusionModel::fit(d, &fold.train, config.fit_on_train, &ensemble, &combiner)?;
    let (test_x, labels) = d.gather(&fold.test);
    let mut predictions: Vec<Vec<usize>> = (0..9).map(|_| Vec::with_capacity(labels.len())).collect();
    let mut members: Vec<Vec<usize>> = (0..model.ensemble.len())
        .map(|_| Vec::with_capacity(labels.len()))
        .collect();
    for x in &test_x {
        let p = model.predict(x)?;
        for (col, &c) in predictions.iter_mut().zip(&p.methods) {
            col.push(c);
        }
        for (col, &c) in members.iter_mut().zip(&p.members) {
            col.push(c);
        }
    }
    Ok(FoldOutcome {
        fold: index,
        test: fold.test.clone(),
        labels,
        predictions,
        members,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodError {
    pub method: Method,
    pub errors: u64,
    pub samples: u64,
    /// Pooled error in percent.
    pub error_pct: f64,
}

/// Pooled per-method error of a whole experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub dataset: String,
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub protocol: FoldKind,
    pub folds: usize,
    pub folds_evaluated: usize,
    pub methods: Vec<MethodError>,
    /// Pooled error percentage of each base classifier.
    pub base_classifiers: Vec<f64>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
    /// Hex SHA-256 over the configuration and the dataset contents.
    pub fingerprint: String,
}

fn pct(errors: u64, samples: u64) -> f64 {
    if samples == 0 {
        0.0
    } else {
        100.0 * errors as f64 / samples as f64
    }
}

impl FusionReport {
    pub fn error(&self, m: Method) -> Option<f64> {
        self.methods.iter().find(|e| e.method == m).map(|e| e.error_pct)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn table_header() -> String {
        let mut line = format!("{:<12}", "dataset");
        for m in Method::ALL {
            line.push_str(&format!(" {:>7}", m.label()));
        }
        line
    }

    pub fn table_row(&self) -> String {
        let mut line = format!("{:<12}", self.dataset);
        for m in Method::ALL {
            match self.error(m) {
                Some(e) => line.push_str(&format!(" {e:>7.2}")),
                None => line.push_str(&format!(" {:>7}", "-")),
            }
        }
        line
    }

    /// Human-readable summary: the method table followed by base-classifier
    /// errors and any warnings.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} ({} samples, {} features, {} classes), protocol {:?}, {}/{} folds evaluated\n",
            self.dataset, self.samples, self.features, self.classes, self.protocol, self.folds_evaluated, self.folds
        ));
        out.push_str("error (%)\n");
        out.push_str(&Self::table_header());
        out.push('\n');
        out.push_str(&self.table_row());
        out.push('\n');
        out.push_str("base classifiers (%):");
        for e in &self.base_classifiers {
            out.push_str(&format!(" {e:.2}"));
        }
        out.push('\n');
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// Digest of a configuration and dataset pair.
pub fn fingerprint(d: &Dataset, config: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("configs serialize"));
    h.update(d.name().as_bytes());
    for (row, label) in d.features().iter().zip(d.labels()) {
        for v in row {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((*label as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Runs every fold of the dataset's protocol and pools the results.
pub fn run_experiment(d: &Dataset, config: &ExperimentConfig) -> Result<FusionReport> {
    Ok(run_experiment_detailed(d, config)?.0)
}

/// [`run_experiment`] that also returns the per-fold outcomes. Folds run in
/// parallel on the current rayon pool; results do not depend on the pool
/// size.
pub fn run_experiment_detailed(d: &Dataset, config: &ExperimentConfig) -> Result<(FusionReport, Vec<FoldOutcome>)> {
    let plan = choose_protocol(d, &config.protocol)?;
    let results: Vec<(usize, Result<FoldOutcome>)> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| (i, run_fold(d, fold, i, config)))
        .collect();

    let mut warnings = Vec::new();
    let mut outcomes = Vec::new();
    for (i, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e @ Error::MissingClass(_)) => {
                let msg = format!("fold {i} skipped: {e}");
                log::warn!("{}: {msg}", d.name());
                warnings.push(msg);
            }
            Err(e) => {
                let msg = format!("fold {i} failed: {e}");
                log::warn!("{}: {msg}", d.name());
                warnings.push(msg);
            }
        }
    }
    if outcomes.is_empty() {
        return Err(Error::AllFoldsFailed(warnings.join("; ")));
    }
    let report = pool(d, config, plan.kind, plan.folds.len(), &outcomes, warnings);
    Ok((report, outcomes))
}

fn pool(
    d: &Dataset,
    config: &ExperimentConfig,
    protocol: FoldKind,
    folds: usize,
    outcomes: &[FoldOutcome],
    warnings: Vec<String>,
) -> FusionReport {
    let samples: u64 = outcomes.iter().map(|o| o.labels.len() as u64).sum();
    let wrong = |preds: &dyn Fn(&FoldOutcome) -> &Vec<usize>| -> u64 {
        outcomes
            .iter()
            .map(|o| preds(o).iter().zip(&o.labels).filter(|(p, t)| p != t).count() as u64)
            .sum()
    };
    let methods = Method::ALL
        .iter()
        .map(|&m| {
            let errors = wrong(&|o| &o.predictions[m.index()]);
            MethodError {
                method: m,
                errors,
                samples,
                error_pct: pct(errors, samples),
            }
        })
        .collect();
    let members = outcomes[0].members.len();
    let base_classifiers = (0..members).map(|k| pct(wrong(&|o| &o.members[k]), samples)).collect();
    let mut notes = Vec::new();
    if config.fit_on_train {
        notes.push("min-max scaling fit on each fold's training rows".into());
    } else {
        notes.push("min-max scaling fit on the whole dataset".into());
    }
    FusionReport {
        dataset: d.name().to_string(),
        samples: d.len(),
        features: d.num_features(),
        classes: d.num_classes(),
        protocol,
        folds,
        folds_evaluated: outcomes.len(),
        methods,
        base_classifiers,
        warnings,
        notes,
        config: config.clone(),
        fingerprint: fingerprint(d, config),
    }
}
