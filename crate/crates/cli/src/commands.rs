//! The subcommands, as library functions writing into an output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kfusion::{
    choose_protocol, load_csv, run_experiment_detailed, ConfusionMatrix, CsvSchema, Dataset, FoldOutcome, FusionModel,
    FusionReport, Method,
};
use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, RunConfig};

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let d = load_csv(&cfg.data.path, &cfg.data.schema)
        .with_context(|| format!("loading dataset {}", cfg.data.path.display()))?;
    Ok(match &cfg.data.name {
        Some(name) => d.with_name(name.clone()),
        None => d,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Runs one experiment and writes `report.json`, `report.txt`,
/// `confusion.csv` (per fold, per method and member), `folds.json` and the
/// resolved `config.toml` into `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<FusionReport> {
    let d = load_dataset(cfg)?;
    let exp = cfg.experiment();
    let (mut report, outcomes) = run_experiment_detailed(&d, &exp)?;
    report.notes.extend(cfg.data.notes.iter().cloned());

    create_dir(out)?;
    write(&out.join("report.json"), &(report.to_json() + "\n"))?;
    write(&out.join("report.txt"), &report.to_table())?;
    write(&out.join("confusion.csv"), &confusion_csv(&outcomes, d.num_classes())?)?;
    write(
        &out.join("folds.json"),
        &(choose_protocol(&d, &exp.protocol)?.to_json() + "\n"),
    )?;
    write(&out.join("config.toml"), &cfg.to_toml()?)?;
    Ok(report)
}

/// Long-format confusion counts: `fold,classifier,true,predicted,count`.
fn confusion_csv(outcomes: &[FoldOutcome], num_classes: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "classifier", "true", "predicted", "count"])?;
    let mut emit = |fold: usize, name: &str, m: &ConfusionMatrix| -> Result<()> {
        for t in 0..num_classes {
            for p in 0..num_classes {
                w.write_record([
                    fold.to_string(),
                    name.to_string(),
                    t.to_string(),
                    p.to_string(),
                    m.get(t, p).to_string(),
                ])?;
            }
        }
        Ok(())
    };
    for o in outcomes {
        for m in Method::ALL {
            emit(o.fold, m.label(), &o.confusion(m, num_classes))?;
        }
        for k in 0..o.members.len() {
            emit(o.fold, &format!("member{k}"), &o.member_confusion(k, num_classes))?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Reference error percentages keyed by lower-cased dataset name.
pub type Reference = BTreeMap<String, BTreeMap<Method, f64>>;

/// Reads a `dataset,VT,DS,...` table of reference error percentages.
pub fn load_reference(path: &Path) -> Result<Reference> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let methods = rdr
        .headers()?
        .iter()
        .skip(1)
        .map(|h| h.parse::<Method>())
        .collect::<kfusion::Result<Vec<_>>>()?;
    let mut table = Reference::new();
    for row in rdr.records() {
        let row = row?;
        let mut values = BTreeMap::new();
        for (m, v) in methods.iter().zip(row.iter().skip(1)) {
            let v = v.trim();
            if !v.is_empty() {
                values.insert(
                    *m,
                    v.parse::<f64>()
                        .with_context(|| format!("bad value {v:?} in {}", path.display()))?,
                );
            }
        }
        table.insert(row[0].trim().to_lowercase(), values);
    }
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub reports: Vec<FusionReport>,
    pub skipped: Vec<String>,
    pub table: String,
}

/// Runs every configured experiment, skipping (with a warning) any whose
/// config or data cannot be loaded, and writes `bench.txt`, `bench.csv` and
/// one `<dataset>.json` report per row.
pub fn cmd_bench(bench: &BenchConfig, reference: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<BenchOutcome> {
    let reference = reference.map(load_reference).transpose()?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for path in &bench.runs {
        let loaded = RunConfig::load(path).and_then(|c| {
            let c = c.resolved(seed);
            load_dataset(&c).map(|d| (c, d))
        });
        let (cfg, d) = match loaded {
            Ok(v) => v,
            Err(e) => {
                let msg = format!("{}: skipped: {e:#}", path.display());
                log::warn!("{msg}");
                skipped.push(msg);
                continue;
            }
        };
        log::info!("running {}", d.name());
        let mut report = kfusion::run_experiment(&d, &cfg.experiment())?;
        report.notes.extend(cfg.data.notes.iter().cloned());
        reports.push(report);
    }
    if reports.is_empty() {
        bail!("no benchmark dataset could be run: {}", skipped.join("; "));
    }

    create_dir(out)?;
    let table = bench_table(&reports, reference.as_ref(), &skipped);
    write(&out.join("bench.txt"), &table)?;
    write(&out.join("bench.csv"), &bench_csv(&reports, reference.as_ref())?)?;
    for r in &reports {
        write(
            &out.join(format!("{}.json", file_stem(&r.dataset))),
            &(r.to_json() + "\n"),
        )?;
    }
    Ok(BenchOutcome {
        reports,
        skipped,
        table,
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn reference_for<'a>(reference: Option<&'a Reference>, r: &FusionReport) -> Option<&'a BTreeMap<Method, f64>> {
    reference.and_then(|t| t.get(&r.dataset.to_lowercase()))
}

/// Rows are datasets, columns the nine methods; with a reference each
/// method gets `ref` and `Δ` (measured − reference) columns.
pub fn bench_table(reports: &[FusionReport], reference: Option<&Reference>, skipped: &[String]) -> String {
    let mut out = String::from("error (%)\n");
    let mut header = format!("{:<10}", "dataset");
    for m in Method::ALL {
        header.push_str(&format!(" {:>7}", m.label()));
        if reference.is_some() {
            header.push_str(&format!(" {:>6} {:>6}", "ref", "Δ"));
        }
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for r in reports {
        let refs = reference_for(reference, r);
        let mut line = format!("{:<10}", r.dataset);
        for m in Method::ALL {
            let measured = r.error(m);
            match measured {
                Some(e) => line.push_str(&format!(" {e:>7.2}")),
                None => line.push_str(&format!(" {:>7}", "-")),
            }
            if reference.is_some() {
                match (measured, refs.and_then(|v| v.get(&m))) {
                    (Some(e), Some(&p)) => line.push_str(&format!(" {p:>6.2} {:>+6.2}", e - p)),
                    (_, Some(&p)) => line.push_str(&format!(" {p:>6.2} {:>6}", "-")),
                    _ => line.push_str(&format!(" {:>6} {:>6}", "-", "-")),
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    for r in reports {
        for w in &r.warnings {
            let _ = writeln!(out, "warning: {}: {w}", r.dataset);
        }
        for n in &r.notes {
            let _ = writeln!(out, "note: {}: {n}", r.dataset);
        }
    }
    for s in skipped {
        let _ = writeln!(out, "warning: {s}");
    }
    out
}

fn bench_csv(reports: &[FusionReport], reference: Option<&Reference>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", "error_pct", "reference_pct", "delta_pct"])?;
    for r in reports {
        let refs = reference_for(reference, r);
        for m in &r.methods {
            let p = refs.and_then(|v| v.get(&m.method)).copied();
            w.write_record([
                r.dataset.clone(),
                m.method.label().to_string(),
                m.error_pct.to_string(),
                p.map(|v| v.to_string()).unwrap_or_default(),
                p.map(|v| (m.error_pct - v).to_string()).unwrap_or_default(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// A trained model together with what is needed to evaluate it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dataset: String,
    pub schema: CsvSchema,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub config: RunConfig,
    pub model: FusionModel,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid model file", path.display()))
    }
}

/// Trains the full two-stage system on fold `fold` of the configured
/// protocol and writes `model.json`.
pub fn cmd_train(cfg: &RunConfig, fold: usize, out: &Path) -> Result<(PathBuf, ModelFile)> {
    let d = load_dataset(cfg)?;
    let exp = cfg.experiment();
    let plan = choose_protocol(&d, &exp.protocol)?;
    let Some(f) = plan.folds.get(fold) else {
        bail!("fold {fold} out of range: the protocol has {} folds", plan.len());
    };
    let (ensemble, combiner) = exp.for_fold(fold);
    let model = FusionModel::fit(&d, &f.train, exp.fit_on_train, &ensemble, &combiner)?;
    let file = ModelFile {
        dataset: d.name().to_string(),
        schema: cfg.data.schema.clone(),
        fold,
        train: f.train.clone(),
        test: f.test.clone(),
        config: cfg.clone(),
        model,
    };
    create_dir(out)?;
    let path = out.join("model.json");
    write(&path, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    Ok((path, file))
}

/// Which rows of the dataset `inspect` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum RowSelection {
    /// The test rows of the fold the model was trained on.
    #[default]
    Test,
    Train,
    All,
}

#[derive(Debug, Clone)]
pub struct Inspection {
    pub members: Vec<ConfusionMatrix>,
    pub combiner: ConfusionMatrix,
    pub text: String,
}

/// Evaluates a saved model and lays out every member's confusion matrix
/// next to the combiner's.
pub fn cmd_inspect(model_path: &Path, data_path: &Path, rows: RowSelection) -> Result<Inspection> {
    let file = ModelFile::load(model_path)?;
    let d = load_csv(data_path, &file.schema).with_context(|| format!("loading {}", data_path.display()))?;
    let cn = file.model.ensemble.num_classes();
    if d.num_features() != file.model.ensemble.num_features() || d.num_classes() != cn {
        bail!(
            "{} has {} features and {} classes but the model expects {} and {}",
            data_path.display(),
            d.num_features(),
            d.num_classes(),
            file.model.ensemble.num_features(),
            cn
        );
    }
    let idx: Vec<usize> = match rows {
        RowSelection::Test => file.test.clone(),
        RowSelection::Train => file.train.clone(),
        RowSelection::All => (0..d.len()).collect(),
    };
    if let Some(&bad) = idx.iter().find(|&&i| i >= d.len()) {
        bail!(
            "row {bad} of the model's fold is outside {} ({} rows)",
            data_path.display(),
            d.len()
        );
    }
    let (xs, ys) = d.gather(&idx);
    let eval = file.model.evaluate(&xs, &ys)?;
    let combiner = eval.method(Method::Nnklms).clone();

    let mut blocks: Vec<(String, &ConfusionMatrix)> = eval
        .members
        .iter()
        .enumerate()
        .map(|(k, m)| (format!("member {k}"), m))
        .collect();
    blocks.push(("NNKLMS".to_string(), &combiner));
    let width = blocks
        .iter()
        .flat_map(|(_, m)| (0..cn).flat_map(move |t| (0..cn).map(move |p| m.get(t, p))))
        .max()
        .map_or(1, |v| v.to_string().len());
    let mut text = format!(
        "{} fold {} ({:?} rows, {} samples); rows = true class, columns = predicted\n",
        file.dataset,
        file.fold,
        rows,
        idx.len()
    );
    for chunk in blocks.chunks(4) {
        text.push('\n');
        text.push_str(&side_by_side(chunk, cn, width));
    }
    Ok(Inspection {
        members: eval.members.clone(),
        combiner,
        text,
    })
}

fn side_by_side(blocks: &[(String, &ConfusionMatrix)], cn: usize, width: usize) -> String {
    let cell = (cn * (width + 1)).saturating_sub(1).max(16);
    let gap = "   ";
    let mut lines = vec![String::new(); cn + 2];
    for (i, (title, m)) in blocks.iter().enumerate() {
        let sep = if i == 0 { "" } else { gap };
        let body = m.lines(width);
        let cols = [title.clone(), format!("error {:.2}%", 100.0 * m.error_rate())]
            .into_iter()
            .chain(body);
        for (line, col) in lines.iter_mut().zip(cols) {
            let _ = write!(line, "{sep}{col:<cell$}");
        }
    }
    lines.iter().map(|l| l.trim_end().to_string() + "\n").collect()
}
