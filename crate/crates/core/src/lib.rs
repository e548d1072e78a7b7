//! Kernel least-mean-square neurons as trainable fusers of classifier
//! ensembles.
//!
//! The crate is organized bottom-up:
//!
//! - [`kernels`]: Mercer kernels and an explicit degree-2 feature map.
//! - [`adaptive`]: input-space LMS and kernel LMS filters.
//! - [`nnklms`]: the logistic kernel LMS neuron and the one-vs-all
//!   [`Combiner`] over decision profiles.
//! - [`ensemble`]: MLP base classifiers producing [`DecisionProfile`]s.
//! - [`fusion`]: voting, algebraic, decision-template and Dempster–Shafer
//!   baselines.
//! - [`data`]: CSV ingestion, normalization and fold plans.
//! - [`eval`]: confusion matrices, the two-stage pipeline and experiment
//!   reports.
//!
//! ```
//! use kfusion::{Combiner, CombinerConfig, DecisionProfile};
//!
//! let profiles = vec![
//!     DecisionProfile::from_rows(&[vec![0.9, 0.1], vec![0.8, 0.2]]).unwrap(),
//!     DecisionProfile::from_rows(&[vec![0.2, 0.8], vec![0.3, 0.7]]).unwrap(),
//! ];
//! let model = Combiner::train(&profiles, &[0, 1], &CombinerConfig::default()).unwrap();
//! assert_eq!(model.predict(&profiles[1]).unwrap().class, 1);
//! ```

pub mod adaptive;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod fixtures;
pub mod fusion;
pub mod kernels;
pub mod nnklms;
pub mod profile;
pub mod seed;

pub use adaptive::{Klms, LmsFilter};
pub use data::{
    choose_protocol, holdout_split, leave_one_out, load_csv, normalize_minmax, parse_csv, stratified_holdout,
    window_cv, CsvSchema, Dataset, Fold, FoldKind, FoldPlan, MinMaxScaler, MissingPolicy, ProtocolConfig, ProtocolKind,
};
pub use ensemble::{pairwise_disagreement, Ensemble, EnsembleConfig, Mlp};
pub use error::{Error, Result};
pub use eval::{
    run_experiment, run_experiment_detailed, run_fold, ConfusionMatrix, Evaluation, ExperimentConfig, FoldOutcome,
    FusionModel, FusionReport,
};
pub use expansion::KernelExpansion;
pub use fusion::{DecisionTemplates, Method};
pub use kernels::{explicit_poly2_map, KernelSpec};
pub use nnklms::{logistic, logistic_prime, Activation, Combiner, CombinerConfig, Neuron};
pub use profile::{argmax, DecisionProfile};
