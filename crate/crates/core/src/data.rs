//! Dataset loading, min-max normalization and fold generation.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
    class_names: Vec<String>,
}

impl Dataset {
    /// Labels must cover every class in `0..class_names.len()`.
    pub fn new(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let fn_ = features[0].len();
        if fn_ == 0 {
            return Err(Error::Empty("feature columns"));
        }
        if let Some(row) = features.iter().find(|r| r.len() != fn_) {
            return Err(Error::DimensionMismatch {
                expected: fn_,
                found: row.len(),
            });
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature value".into()));
        }
        let num_classes = class_names.len();
        let mut seen = vec![false; num_classes];
        for &l in &labels {
            if l >= num_classes {
                return Err(Error::LabelOutOfRange { label: l, num_classes });
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::MissingClass(c));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            num_classes,
            class_names,
        })
    }

    /// Builds a dataset whose classes are named by their index.
    pub fn from_indexed(name: impl Into<String>, features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let cn = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(name, features, labels, (0..cn).map(|c| c.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn gather(&self, indices: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
        indices
            .iter()
            .map(|&i| (self.features[i].clone(), self.labels[i]))
            .unzip()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// What to do with rows holding a missing-value token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    #[default]
    Drop,
    ImputeMean,
}

/// Layout of a delimited text dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    /// Column holding the class label; negative values count from the end
    /// (`-1` is the last column).
    pub label_column: i64,
    pub delimiter: char,
    pub has_header: bool,
    /// Columns ignored entirely (e.g. sample ids), same indexing as
    /// `label_column`.
    pub skip_columns: Vec<i64>,
    pub missing: MissingPolicy,
    pub missing_tokens: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label_column: -1,
            delimiter: ',',
            has_header: false,
            skip_columns: Vec::new(),
            missing: MissingPolicy::Drop,
            missing_tokens: vec!["?".into(), "NA".into(), String::new()],
        }
    }
}

fn resolve_column(index: i64, width: usize) -> Option<usize> {
    let i = if index < 0 { width as i64 + index } else { index };
    (0..width as i64).contains(&i).then_some(i as usize)
}

/// Reads a dataset from a delimited file. Labels are mapped to
/// `0..CN` in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(file, &name, schema).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// [`load_csv`] over any reader.
pub fn parse_csv(reader: impl Read, name: &str, schema: &CsvSchema) -> Result<Dataset> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::InvalidParameter(
            "delimiter must be a single ASCII character".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.into(),
        line,
        message,
    };

    let mut width = None;
    let mut label_col = 0;
    let mut keep: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert_with(|| record.len());
        if width == Some(record.len()) && keep.is_empty() {
            label_col = resolve_column(schema.label_column, w)
                .ok_or_else(|| parse_err(line, format!("label column {} out of range", schema.label_column)))?;
            let skip: Vec<usize> = schema
                .skip_columns
                .iter()
                .filter_map(|&c| resolve_column(c, w))
                .collect();
            keep = (0..w).filter(|c| *c != label_col && !skip.contains(c)).collect();
            if keep.is_empty() {
                return Err(parse_err(line, "no feature columns".into()));
            }
        }
        if record.len() != w {
            return Err(parse_err(line, format!("expected {w} fields, found {}", record.len())));
        }
        let mut row = Vec::with_capacity(keep.len());
        for &c in &keep {
            let field = &record[c];
            if schema.missing_tokens.iter().any(|t| t == field) {
                row.push(None);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("non-numeric feature {field:?} in column {c}")))?;
                row.push(Some(v));
            }
        }
        rows.push(row);
        raw_labels.push(record[label_col].to_string());
    }
    if rows.is_empty() {
        return Err(Error::Empty("dataset"));
    }

    let features: Vec<Vec<f64>>;
    let labels_kept: Vec<String>;
    match schema.missing {
        MissingPolicy::Drop => {
            let (f, l): (Vec<_>, Vec<_>) = rows
                .into_iter()
                .zip(raw_labels)
                .filter_map(|(r, l)| r.into_iter().collect::<Option<Vec<f64>>>().map(|r| (r, l)))
                .unzip();
            features = f;
            labels_kept = l;
        }
        MissingPolicy::ImputeMean => {
            let cols = rows[0].len();
            let means: Vec<f64> = (0..cols)
                .map(|c| {
                    let (s, n) = rows
                        .iter()
                        .filter_map(|r| r[c])
                        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                    if n == 0 {
                        0.0
                    } else {
                        s / n as f64
                    }
                })
                .collect();
            features = rows
                .into_iter()
                .map(|r| r.into_iter().zip(&means).map(|(v, m)| v.unwrap_or(*m)).collect())
                .collect();
            labels_kept = raw_labels;
        }
    }
    if features.is_empty() {
        return Err(Error::Empty("dataset after dropping rows with missing values"));
    }
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let labels = labels_kept
        .into_iter()
        .map(|l| {
            *index.entry(l.clone()).or_insert_with(|| {
                names.push(l);
                names.len() - 1
            })
        })
        .collect();
    Dataset::new(name, features, labels, names)
}

/// Per-feature min-max bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("rows to fit"))?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for r in rows {
            crate::error::check_dim(mins.len(), r.len())?;
            for (j, &v) in r.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    /// `(x − min) / (max − min)`, with constant features mapped to 0. Values
    /// outside the fitted range are clamped into `[0, 1]`.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Min-max normalization fit over the whole dataset.
pub fn normalize_minmax(d: &Dataset) -> Dataset {
    let scaler = MinMaxScaler::fit(&d.features).expect("datasets are non-empty");
    Dataset {
        features: scaler.transform_all(&d.features),
        ..d.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    Holdout,
    WindowCv,
    Loo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test: Vec<usize>,
    pub train: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub kind: FoldKind,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fold plans serialize")
    }
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    test.iter().for_each(|&i| in_test[i] = true);
    (0..n).filter(|&i| !in_test[i]).collect()
}

/// Single stratified train/test split. Each class contributes
/// `round(fraction · count)` training samples (at least one, leaving at
/// least one for testing), with largest-remainder rounding so the training
/// total matches `round(fraction · n)` whenever those bounds allow it.
pub fn holdout_split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<FoldPlan> {
    stratified_holdout(d.labels(), d.num_classes(), train_fraction, seed)
}

pub fn stratified_holdout(labels: &[usize], num_classes: usize, train_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or(Error::LabelOutOfRange { label: l, num_classes })?
            .push(i);
    }
    if let Some(c) = by_class.iter().position(|idx| idx.len() < 2) {
        return Err(Error::InvalidParameter(format!(
            "class {c} has fewer than 2 samples and cannot be stratified"
        )));
    }

    let n = labels.len();
    let target = (train_fraction * n as f64).round() as usize;
    let exact: Vec<f64> = by_class.iter().map(|idx| train_fraction * idx.len() as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..num_classes).collect();
    // largest fractional part first, lower class on ties
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let assigned: usize = take.iter().sum();
    for &c in order.iter().take(target.saturating_sub(assigned)) {
        take[c] += 1;
    }
    for (t, idx) in take.iter_mut().zip(&by_class) {
        *t = (*t).clamp(1, idx.len() - 1);
    }

    let mut rng = seed::rng(seed);
    let mut train = Vec::with_capacity(target);
    for (idx, &t) in by_class.iter_mut().zip(&take) {
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..t]);
    }
    train.sort_unstable();
    let test = complement(n, &train);
    Ok(FoldPlan {
        kind: FoldKind::Holdout,
        folds: vec![Fold { test, train }],
    })
}

/// Contiguous test windows `[0, m), [m, 2m), …`; a shorter final window is
/// kept when `m` does not divide `n`.
pub fn window_cv(n: usize, m: usize) -> Result<FoldPlan> {
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!(
            "window size must satisfy 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    Ok(windows_over(&(0..n).collect::<Vec<_>>(), m, FoldKind::WindowCv))
}

fn windows_over(order: &[usize], m: usize, kind: FoldKind) -> FoldPlan {
    let n = order.len();
    let folds = order
        .chunks(m)
        .map(|chunk| {
            let mut test = chunk.to_vec();
            test.sort_unstable();
            let train = complement(n, &test);
            Fold { test, train }
        })
        .collect();
    FoldPlan { kind, folds }
}

pub fn leave_one_out(n: usize) -> Result<FoldPlan> {
    let mut plan = window_cv(n, 1)?;
    plan.kind = FoldKind::Loo;
    Ok(plan)
}

/// Validation protocol selection. `Auto` applies the size rule of
/// [`choose_protocol`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    Auto,
    Holdout,
    WindowCv,
    Loo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub window: usize,
    pub train_fraction: f64,
    /// Shuffle the sample order before cutting windows.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::Auto,
            window: 20,
            train_fraction: 0.6,
            shuffle: false,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    /// Concrete protocol for a dataset of `n` samples: leave-one-out below
    /// 200 samples, window cross-validation below 500, holdout otherwise.
    pub fn resolve(&self, n: usize) -> FoldKind {
        match self.kind {
            ProtocolKind::Auto if n < 200 => FoldKind::Loo,
            ProtocolKind::Auto if n < 500 => FoldKind::WindowCv,
            ProtocolKind::Auto | ProtocolKind::Holdout => FoldKind::Holdout,
            ProtocolKind::WindowCv => FoldKind::WindowCv,
            ProtocolKind::Loo => FoldKind::Loo,
        }
    }
}

pub fn choose_protocol(d: &Dataset, config: &ProtocolConfig) -> Result<FoldPlan> {
    let n = d.len();
    let shuffled = || {
        let mut order: Vec<usize> = (0..n).collect();
        if config.shuffle {
            order.shuffle(&mut seed::rng(config.seed));
        }
        order
    };
    match config.resolve(n) {
        FoldKind::Holdout => holdout_split(d, config.train_fraction, config.seed),
        FoldKind::WindowCv => {
            window_cv(n, config.window)?;
            Ok(windows_over(&shuffled(), config.window, FoldKind::WindowCv))
        }
        FoldKind::Loo => {
            leave_one_out(n)?;
            Ok(windows_over(&shuffled(), 1, FoldKind::Loo))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_toy_fixture() {
        let text = "1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n";
        let d = parse_csv(text.as_bytes(), "toy", &CsvSchema::default()).unwrap();
        assert_eq!((d.len(), d.num_features(), d.num_classes()), (3, 2, 2));
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["a", "b"]);
    }

    #[test]
    fn parse_header_label_first_and_skip() {
        let text = "id;label;x;y\n10;pos;1;2\n11;neg;3;4\n";
        let schema = CsvSchema {
            label_column: 1,
            delimiter: ';',
            has_header: true,
            skip_columns: vec![0],
            ..Default::default()
        };
        let d = parse_csv(text.as_bytes(), "t", &schema).unwrap();
        assert_eq!(d.features(), &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(d.class_names(), &["pos", "neg"]);
    }

    #[test]
    fn missing_value_policies() {
        let text = "1,?,a\n3,4,b\n5,8,a\n";
        let d = parse_csv(text.as_bytes(), "t", &CsvSchema::default()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels(), &[0, 1]);
        let schema = CsvSchema {
            missing: MissingPolicy::ImputeMean,
            ..Default::default()
        };
        let d = parse_csv(text.as_bytes(), "t", &schema).unwrap();
        assert_eq!(d.features()[0], vec![1.0, 6.0]);
    }

    #[test]
    fn parse_errors() {
        let s = CsvSchema::default();
        assert!(matches!(
            parse_csv("1,x,a\n".as_bytes(), "t", &s),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("1,2,a\n1,a\n".as_bytes(), "t", &s),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_csv("".as_bytes(), "t", &s), Err(Error::Empty(_))));
        assert!(matches!(load_csv("/nonexistent/file.csv", &s), Err(Error::Io { .. })));
    }

    #[test]
    fn normalization_examples() {
        let d = Dataset::from_indexed(
            "n",
            vec![vec![2.0, 0.0, 5.0], vec![4.0, 1.0, 5.0], vec![6.0, 0.25, 5.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        let n = normalize_minmax(&d);
        let col = |j: usize| n.features().iter().map(|r| r[j]).collect::<Vec<_>>();
        assert_eq!(col(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(col(1), vec![0.0, 1.0, 0.25]);
        assert_eq!(col(2), vec![0.0, 0.0, 0.0]);
        assert_eq!(n.labels(), d.labels());
    }

    #[test]
    fn holdout_counts() {
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let plan = stratified_holdout(&labels, 2, 0.6, 3).unwrap();
        let fold = &plan.folds[0];
        assert_eq!((fold.train.len(), fold.test.len()), (6, 4));
        let class0 = fold.train.iter().filter(|&&i| labels[i] == 0).count();
        assert_eq!(class0, 3);
        assert_eq!(plan, stratified_holdout(&labels, 2, 0.6, 3).unwrap());
        assert_ne!(plan, stratified_holdout(&labels, 2, 0.6, 4).unwrap());
        assert!(stratified_holdout(&[0, 0, 1], 2, 0.6, 0).is_err());
        assert!(stratified_holdout(&labels, 2, 1.0, 0).is_err());
    }

    #[test]
    fn window_examples() {
        let p = window_cv(10, 5).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.folds[1].test, vec![5, 6, 7, 8, 9]);
        let p = window_cv(150, 20).unwrap();
        let sizes: Vec<_> = p.folds.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, [20, 20, 20, 20, 20, 20, 20, 10]);
        let w1 = window_cv(7, 1).unwrap();
        let loo = leave_one_out(7).unwrap();
        assert_eq!(w1.folds, loo.folds);
        assert!(window_cv(5, 5).is_err());
        assert!(window_cv(5, 0).is_err());
    }

    fn sized(n: usize) -> Dataset {
        let feats = (0..n).map(|i| vec![i as f64]).collect();
        Dataset::from_indexed("s", feats, (0..n).map(|i| i % 2).collect()).unwrap()
    }

    #[test]
    fn protocol_rule() {
        let cfg = ProtocolConfig::default();
        assert_eq!(choose_protocol(&sized(150), &cfg).unwrap().kind, FoldKind::Loo);
        let glass = choose_protocol(&sized(214), &cfg).unwrap();
        assert_eq!(glass.kind, FoldKind::WindowCv);
        assert_eq!(glass.folds[0].test.len(), 20);
        let breast = choose_protocol(&sized(699), &cfg).unwrap();
        assert_eq!(breast.kind, FoldKind::Holdout);
        assert_eq!(breast.folds[0].train.len(), 419);

        let forced = ProtocolConfig {
            kind: ProtocolKind::WindowCv,
            ..cfg.clone()
        };
        assert_eq!(choose_protocol(&sized(150), &forced).unwrap().len(), 8);
    }

    #[test]
    fn shuffled_windows_still_partition() {
        let cfg = ProtocolConfig {
            kind: ProtocolKind::WindowCv,
            window: 7,
            shuffle: true,
            seed: 9,
            ..Default::default()
        };
        let plan = choose_protocol(&sized(50), &cfg).unwrap();
        let mut all: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_ne!(plan.folds[0].test, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn fold_plan_json() {
        let json = window_cv(4, 2).unwrap().to_json();
        let back: FoldPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back.kind, FoldKind::WindowCv);
        assert_eq!(back.folds[1].test, vec![2, 3]);
    }
}
