use std::collections::BTreeSet;

use kfusion::{
    choose_protocol, leave_one_out, load_csv, normalize_minmax, parse_csv, stratified_holdout, window_cv, CsvSchema,
    Dataset, FoldKind, FoldPlan, MissingPolicy, ProtocolConfig,
};
use proptest::prelude::*;

fn data(file: &str) -> String {
    format!("{}/../../data/{file}", env!("CARGO_MANIFEST_DIR"))
}

fn check_partition(plan: &FoldPlan, n: usize) {
    let mut seen = vec![0usize; n];
    for fold in &plan.folds {
        let test: BTreeSet<usize> = fold.test.iter().copied().collect();
        let train: BTreeSet<usize> = fold.train.iter().copied().collect();
        assert_eq!(test.len(), fold.test.len());
        assert!(test.is_disjoint(&train));
        assert_eq!(test.len() + train.len(), n);
        fold.test.iter().for_each(|&i| seen[i] += 1);
    }
    if plan.kind != FoldKind::Holdout {
        assert!(seen.iter().all(|&c| c == 1), "every sample is tested exactly once");
    }
}

proptest! {
    #[test]
    fn windows_partition_the_samples(n in 2usize..400, m in 1usize..60) {
        prop_assume!(m < n);
        let plan = window_cv(n, m).unwrap();
        prop_assert_eq!(plan.len(), n.div_ceil(m));
        check_partition(&plan, n);
    }

    #[test]
    fn holdout_is_stratified(counts in prop::collection::vec(2usize..60, 2..5), frac in 0.1f64..0.9, seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| vec![c; k]).collect();
        let plan = stratified_holdout(&labels, counts.len(), frac, seed).unwrap();
        check_partition(&plan, labels.len());
        let fold = &plan.folds[0];
        for (c, &k) in counts.iter().enumerate() {
            let tr = fold.train.iter().filter(|&&i| labels[i] == c).count();
            prop_assert!(tr >= 1 && tr < k);
        }
    }

    #[test]
    fn normalized_columns_span_the_unit_interval(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 4..30),
    ) {
        let n = rows.len();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let d = normalize_minmax(&Dataset::from_indexed("p", rows.clone(), labels).unwrap());
        for j in 0..3 {
            let col: Vec<f64> = d.features().iter().map(|r| r[j]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let raw_lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let raw_hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            if raw_hi > raw_lo {
                prop_assert!(lo.abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn loo_has_one_sample_per_fold() {
    let plan = leave_one_out(37).unwrap();
    assert_eq!(plan.len(), 37);
    check_partition(&plan, 37);
}

#[test]
fn invalid_windows_are_rejected() {
    assert!(window_cv(10, 0).is_err());
    assert!(window_cv(10, 10).is_err());
}

fn iris() -> Dataset {
    load_csv(
        data("iris.csv"),
        &CsvSchema {
            has_header: true,
            ..Default::default()
        },
    )
    .unwrap()
}

fn breast(missing: MissingPolicy) -> Dataset {
    let schema = CsvSchema {
        skip_columns: vec![0],
        missing,
        ..Default::default()
    };
    load_csv(data("breast-cancer-wisconsin.data"), &schema).unwrap()
}

#[test]
fn bundled_files_load() {
    let d = iris();
    assert_eq!((d.len(), d.num_features(), d.num_classes()), (150, 4, 3));
    assert_eq!(d.class_names()[0], "Iris-setosa");

    let imputed = breast(MissingPolicy::ImputeMean);
    assert_eq!(
        (imputed.len(), imputed.num_features(), imputed.num_classes()),
        (699, 9, 2)
    );
    assert_eq!(breast(MissingPolicy::Drop).len(), 683);

    let wine = load_csv(
        data("wine.csv"),
        &CsvSchema {
            label_column: 0,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!((wine.len(), wine.num_features(), wine.num_classes()), (178, 13, 3));

    let pima = load_csv(data("pima-indians-diabetes.csv"), &CsvSchema::default()).unwrap();
    assert_eq!((pima.len(), pima.num_features(), pima.num_classes()), (768, 8, 2));

    let glass = load_csv(
        data("glass.data"),
        &CsvSchema {
            skip_columns: vec![0],
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!((glass.len(), glass.num_features(), glass.num_classes()), (214, 9, 6));
}

#[test]
fn protocols_follow_dataset_size() {
    let cfg = ProtocolConfig::default();
    assert_eq!(choose_protocol(&iris(), &cfg).unwrap().kind, FoldKind::Loo);
    assert_eq!(
        choose_protocol(&breast(MissingPolicy::Drop), &cfg).unwrap().kind,
        FoldKind::Holdout
    );
    let glass = load_csv(
        data("glass.data"),
        &CsvSchema {
            skip_columns: vec![0],
            ..Default::default()
        },
    )
    .unwrap();
    let plan = choose_protocol(&glass, &cfg).unwrap();
    assert_eq!(plan.kind, FoldKind::WindowCv);
    assert_eq!(plan.len(), 11);
    check_partition(&plan, 214);
}

#[test]
fn parsing_is_deterministic_and_reports_lines() {
    let text = "1,2,a\n3,4,b\n5,6,a\n";
    let a = parse_csv(text.as_bytes(), "t", &CsvSchema::default()).unwrap();
    let b = parse_csv(text.as_bytes(), "t", &CsvSchema::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.labels(), &[0, 1, 0]);
    let err = parse_csv("1,2,a\n3,x,b\n".as_bytes(), "t", &CsvSchema::default()).unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
}

#[test]
fn fold_plans_export_as_json() {
    let json = window_cv(5, 2).unwrap().to_json();
    let back: FoldPlan = serde_json::from_str(&json).unwrap();
    assert_eq!(back, window_cv(5, 2).unwrap());
}
