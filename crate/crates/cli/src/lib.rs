//! Library side of the `kfusion` command-line tool: configuration files and
//! the subcommands, callable without spawning the binary.

pub mod commands;
pub mod config;

pub use commands::{
    bench_table, cmd_bench, cmd_inspect, cmd_run, cmd_train, load_dataset, load_reference, BenchOutcome, Inspection,
    ModelFile, Reference, RowSelection,
};
pub use config::{documented_defaults, BenchConfig, DataConfig, RunConfig};
