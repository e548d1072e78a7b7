//! Fixed and template-based fusion rules used as baselines for the trained
//! combiner. Every rule breaks ties toward the lowest class index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{argmax, DecisionProfile};

/// Fusion methods, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "VT")]
    Vote,
    #[serde(rename = "DS")]
    DempsterShafer,
    #[serde(rename = "DTED")]
    DtEuclidean,
    #[serde(rename = "DTSD")]
    DtSymDiff,
    #[serde(rename = "SM")]
    Mean,
    #[serde(rename = "MAX")]
    Max,
    #[serde(rename = "PT")]
    Product,
    #[serde(rename = "MIN")]
    Min,
    #[serde(rename = "NNKLMS")]
    Nnklms,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Vote,
        Method::DempsterShafer,
        Method::DtEuclidean,
        Method::DtSymDiff,
        Method::Mean,
        Method::Max,
        Method::Product,
        Method::Min,
        Method::Nnklms,
    ];

    /// The eight rules that need no training beyond decision templates.
    pub const BASELINES: [Method; 8] = [
        Method::Vote,
        Method::DempsterShafer,
        Method::DtEuclidean,
        Method::DtSymDiff,
        Method::Mean,
        Method::Max,
        Method::Product,
        Method::Min,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Vote => "VT",
            Method::DempsterShafer => "DS",
            Method::DtEuclidean => "DTED",
            Method::DtSymDiff => "DTSD",
            Method::Mean => "SM",
            Method::Max => "MAX",
            Method::Product => "PT",
            Method::Min => "MIN",
            Method::Nnklms => "NNKLMS",
        }
    }

    pub fn index(self) -> usize {
        Method::ALL.iter().position(|&m| m == self).unwrap()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let upper = match upper.as_str() {
            "DT ED" => "DTED",
            "AV" => "SM",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.label() == upper)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fusion method {s:?}")))
    }
}

/// Majority vote over the rows' argmax decisions.
pub fn vote(profile: &DecisionProfile) -> usize {
    let mut counts = vec![0usize; profile.num_classes()];
    for row in profile.rows() {
        counts[argmax(row)] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn column_fold(profile: &DecisionProfile, init: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut acc = vec![init; profile.num_classes()];
    for row in profile.rows() {
        for (a, v) in acc.iter_mut().zip(row) {
            *a = f(*a, *v);
        }
    }
    acc
}

pub fn mean_supports(profile: &DecisionProfile) -> Vec<f64> {
    let n = profile.num_base() as f64;
    column_fold(profile, 0.0, |a, v| a + v)
        .into_iter()
        .map(|s| s / n)
        .collect()
}

pub fn max_supports(profile: &DecisionProfile) -> Vec<f64> {
    column_fold(profile, f64::NEG_INFINITY, f64::max)
}

pub fn min_supports(profile: &DecisionProfile) -> Vec<f64> {
    column_fold(profile, f64::INFINITY, f64::min)
}

pub fn product_supports(profile: &DecisionProfile) -> Vec<f64> {
    column_fold(profile, 1.0, |a, v| a * v)
}

pub fn mean_rule(profile: &DecisionProfile) -> usize {
    argmax(&mean_supports(profile))
}

pub fn max_rule(profile: &DecisionProfile) -> usize {
    argmax(&max_supports(profile))
}

pub fn min_rule(profile: &DecisionProfile) -> usize {
    argmax(&min_supports(profile))
}

pub fn product_rule(profile: &DecisionProfile) -> usize {
    argmax(&product_supports(profile))
}

/// Class-conditional mean decision profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTemplates {
    num_base: usize,
    num_classes: usize,
    counts: Vec<usize>,
    // one BN×CN row-major matrix per class
    templates: Vec<Vec<f64>>,
}

impl DecisionTemplates {
    /// `DT_c` is the elementwise mean of the profiles labelled `c`. Every
    /// class in `0..num_classes` needs at least one profile.
    pub fn build(profiles: &[DecisionProfile], labels: &[usize], num_classes: usize) -> Result<Self> {
        let first = profiles.first().ok_or(Error::Empty("training set"))?;
        if profiles.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} profiles but {} labels",
                profiles.len(),
                labels.len()
            )));
        }
        let (bn, cn) = first.shape();
        if cn != num_classes {
            return Err(Error::ShapeMismatch(format!(
                "profiles have {cn} classes, expected {num_classes}"
            )));
        }
        let mut sums = vec![vec![0.0; bn * cn]; num_classes];
        let mut counts = vec![0usize; num_classes];
        for (p, &label) in profiles.iter().zip(labels) {
            p.check_shape(bn, cn)?;
            if label >= num_classes {
                return Err(Error::LabelOutOfRange { label, num_classes });
            }
            counts[label] += 1;
            for (s, v) in sums[label].iter_mut().zip(p.as_flat()) {
                *s += v;
            }
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::MissingClass(c));
        }
        for (t, &n) in sums.iter_mut().zip(&counts) {
            t.iter_mut().for_each(|v| *v /= n as f64);
        }
        Ok(Self {
            num_base: bn,
            num_classes,
            counts,
            templates: sums,
        })
    }

    pub fn num_base(&self) -> usize {
        self.num_base
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `DT_c`, row-major `BN × CN`.
    pub fn template(&self, class: usize) -> &[f64] {
        &self.templates[class]
    }

    fn check(&self, profile: &DecisionProfile) -> Result<()> {
        profile.check_shape(self.num_base, self.num_classes)
    }

    /// `S_c = 1 − mean((DT_c − DP)²)`
    pub fn euclidean_similarities(&self, profile: &DecisionProfile) -> Result<Vec<f64>> {
        self.check(profile)?;
        let n = (self.num_base * self.num_classes) as f64;
        Ok(self
            .templates
            .iter()
            .map(|t| {
                let sq: f64 = t.iter().zip(profile.as_flat()).map(|(a, b)| (a - b) * (a - b)).sum();
                1.0 - sq / n
            })
            .collect())
    }

    /// `S_c = 1 − mean(max(min(DT, 1 − DP), min(1 − DT, DP)))`, the fuzzy
    /// symmetric difference.
    pub fn symdiff_similarities(&self, profile: &DecisionProfile) -> Result<Vec<f64>> {
        self.check(profile)?;
        let n = (self.num_base * self.num_classes) as f64;
        Ok(self
            .templates
            .iter()
            .map(|t| {
                let d: f64 = t
                    .iter()
                    .zip(profile.as_flat())
                    .map(|(&a, &b)| a.min(1.0 - b).max((1.0 - a).min(b)))
                    .sum();
                1.0 - d / n
            })
            .collect())
    }

    /// Dempster–Shafer supports, normalized to sum to one.
    ///
    /// For each classifier the template-row proximities are turned into
    /// belief degrees; the per-class beliefs are then multiplied across
    /// classifiers.
    pub fn ds_supports(&self, profile: &DecisionProfile) -> Result<Vec<f64>> {
        self.check(profile)?;
        let cn = self.num_classes;
        let mut support = vec![1.0; cn];
        let mut prox = vec![0.0; cn];
        for i in 0..self.num_base {
            let row = profile.row(i);
            for (c, p) in prox.iter_mut().enumerate() {
                let t = &self.templates[c][i * cn..(i + 1) * cn];
                let sq: f64 = t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                *p = 1.0 / (1.0 + sq);
            }
            let total: f64 = prox.iter().sum();
            prox.iter_mut().for_each(|p| *p /= total);
            let beliefs = ds_beliefs(&prox);
            for (s, b) in support.iter_mut().zip(beliefs) {
                *s *= b;
            }
        }
        let total: f64 = support.iter().sum();
        if total > 0.0 && total.is_finite() {
            support.iter_mut().for_each(|s| *s /= total);
        }
        Ok(support)
    }

    pub fn predict_euclidean(&self, profile: &DecisionProfile) -> Result<usize> {
        Ok(argmax(&self.euclidean_similarities(profile)?))
    }

    pub fn predict_symdiff(&self, profile: &DecisionProfile) -> Result<usize> {
        Ok(argmax(&self.symdiff_similarities(profile)?))
    }

    pub fn predict_ds(&self, profile: &DecisionProfile) -> Result<usize> {
        Ok(argmax(&self.ds_supports(profile)?))
    }
}

/// Belief degrees of one classifier from its normalized proximities. A
/// degenerate classifier contributes uniform belief.
fn ds_beliefs(prox: &[f64]) -> Vec<f64> {
    let cn = prox.len();
    let beliefs: Vec<f64> = (0..cn)
        .map(|c| {
            let others: f64 = (0..cn).filter(|&k| k != c).map(|k| 1.0 - prox[k]).product();
            let num = prox[c] * others;
            let den = 1.0 - prox[c] * (1.0 - others);
            num / den
        })
        .collect();
    if beliefs.iter().all(|b| b.is_finite()) && beliefs.iter().any(|&b| b > 0.0) {
        beliefs
    } else {
        vec![1.0 / cn as f64; cn]
    }
}

/// Applies one of the eight baseline rules.
pub fn predict_baseline(method: Method, profile: &DecisionProfile, templates: &DecisionTemplates) -> Result<usize> {
    match method {
        Method::Vote => Ok(vote(profile)),
        Method::DempsterShafer => templates.predict_ds(profile),
        Method::DtEuclidean => templates.predict_euclidean(profile),
        Method::DtSymDiff => templates.predict_symdiff(profile),
        Method::Mean => Ok(mean_rule(profile)),
        Method::Max => Ok(max_rule(profile)),
        Method::Product => Ok(product_rule(profile)),
        Method::Min => Ok(min_rule(profile)),
        Method::Nnklms => Err(Error::InvalidParameter(
            "NNKLMS is a trained combiner, not a baseline rule".into(),
        )),
    }
}
