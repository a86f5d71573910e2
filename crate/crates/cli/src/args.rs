use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Batch pipeline for training and checking logistic models on datasets
/// thinned by a known per-label sampling probability.
#[derive(Debug, Parser)]
#[command(name = "biascorrect", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset from a known logistic ground truth.
    Generate {
        /// Number of instances.
        #[arg(long)]
        n: usize,
        /// Feature dimension; coordinates are i.i.d. standard normal.
        #[arg(long)]
        features: usize,
        /// Ground-truth intercept.
        #[arg(long, allow_negative_numbers = true)]
        intercept: f64,
        /// Ground-truth weights, comma-separated, one per feature.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        weights: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset path; a truth manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
    },

    /// Thin a dataset: keep each instance with probability s(x, y).
    Sample {
        /// Input dataset.
        #[arg(long = "in")]
        input: PathBuf,
        /// Inclusion rate for label-0 instances (default 1).
        #[arg(long)]
        s0: Option<f64>,
        /// Inclusion rate for label-1 instances (default 1).
        #[arg(long)]
        s1: Option<f64>,
        /// Use the dataset's own s0/s1 columns instead of constants.
        #[arg(long, conflicts_with_all = ["s0", "s1"])]
        per_instance: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset path; a sampling manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
    },

    /// Fit a logistic model, correcting for how the data was sampled.
    Train {
        /// Training dataset.
        #[arg(long = "in")]
        input: PathBuf,
        /// Constant inclusion rate for label 0 (default 1: no correction).
        #[arg(long)]
        s0: Option<f64>,
        /// Constant inclusion rate for label 1 (default 1: no correction).
        #[arg(long)]
        s1: Option<f64>,
        /// Take rates from the dataset's s0/s1 columns.
        #[arg(long, conflicts_with_all = ["s0", "s1"])]
        per_instance: bool,
        /// Take the sampling spec from a sampling manifest file.
        #[arg(long, conflicts_with_all = ["s0", "s1", "per_instance"])]
        manifest: Option<PathBuf>,
        /// Ridge strength on the weights.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Largest gradient-descent step.
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Stop once the gradient max-norm falls below this.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Where to write the fitted model document.
        #[arg(long)]
        out_model: PathBuf,
    },

    /// Append a predicted-probability column to a dataset.
    Predict {
        /// Model document from `train`.
        #[arg(long)]
        model: PathBuf,
        /// Input dataset.
        #[arg(long = "in")]
        input: PathBuf,
        /// Sample ratio to answer under; 1 targets the unthinned population.
        #[arg(long, default_value_t = 1.0)]
        deploy_ratio: f64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Report likelihood, calibration and (optionally) parameter recovery.
    Evaluate {
        /// Model document from `train`.
        #[arg(long)]
        model: PathBuf,
        /// Evaluation dataset.
        #[arg(long = "in")]
        input: PathBuf,
        /// Truth manifest from `generate`, for parameter-error reporting.
        #[arg(long)]
        truth_manifest: Option<PathBuf>,
    },

    /// Check the closed-form correction against rejection sampling.
    VerifyOracle {
        /// Label-space size.
        #[arg(long, default_value_t = 3)]
        labels: usize,
        /// Monte-Carlo trials per label.
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}
