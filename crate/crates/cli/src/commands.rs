use std::fmt;
use std::path::{Path, PathBuf};

use biascorrect::correction::{
    corrected_distribution, monte_carlo_corrected_prob, TablePredictor, DEFAULT_MAX_REJECTIONS,
};
use biascorrect::datagen::{self, GenSpec};
use biascorrect::io::{self, ModelDocument};
use biascorrect::logistic::{self, TrainConfig};
use biascorrect::sampling;
use biascorrect::{Error, FeatureVector, SamplingSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::Command;

/// Usage problems exit with 2, data and numeric problems with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Generate {
            n,
            features,
            intercept,
            weights,
            seed,
            out,
        } => generate(n, features, intercept, &weights, seed, &out),
        Command::Sample {
            input,
            s0,
            s1,
            per_instance,
            seed,
            out,
        } => sample(&input, s0, s1, per_instance, seed, &out),
        Command::Train {
            input,
            s0,
            s1,
            per_instance,
            manifest,
            lambda,
            lr,
            max_iters,
            tol,
            out_model,
        } => train(
            &input,
            s0,
            s1,
            per_instance,
            manifest.as_deref(),
            lambda,
            lr,
            max_iters,
            tol,
            &out_model,
        ),
        Command::Predict {
            model,
            input,
            deploy_ratio,
            out,
        } => predict(&model, &input, deploy_ratio, &out),
        Command::Evaluate {
            model,
            input,
            truth_manifest,
        } => evaluate(&model, &input, truth_manifest.as_deref()),
        Command::VerifyOracle {
            labels,
            trials,
            seed,
        } => verify_oracle(labels, trials, seed),
    }
}

/// Companion file written next to a primary output: `dir/name.csv` gets
/// `dir/name.<ext>`.
fn companion(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn parse_weights(text: &str) -> Result<Vec<f64>, CliError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|entry| {
            let entry = entry.trim();
            let v: f64 = entry
                .parse()
                .map_err(|e| usage(format!("--weights entry '{entry}': {e}")))?;
            if !v.is_finite() {
                return Err(usage(format!("--weights entry '{entry}' is not finite")));
            }
            Ok(v)
        })
        .collect()
}

fn constant_spec(s0: Option<f64>, s1: Option<f64>) -> Result<SamplingSpec, CliError> {
    SamplingSpec::binary_constant(s0.unwrap_or(1.0), s1.unwrap_or(1.0))
        .map_err(|e| usage(e.to_string()))
}

fn generate(
    n: usize,
    features: usize,
    intercept: f64,
    weights: &str,
    seed: u64,
    out: &Path,
) -> Result<i32, CliError> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let weights = parse_weights(weights)?;
    if weights.len() != features {
        return Err(usage(format!(
            "--weights lists {} values but --features is {features}",
            weights.len()
        )));
    }
    if !intercept.is_finite() {
        return Err(usage("--intercept must be finite"));
    }
    let spec = GenSpec {
        n,
        feature_count: features,
        intercept,
        weights,
        seed,
    };
    let data = datagen::generate(&spec)?;
    io::write_dataset(&data, out)?;
    let truth_path = companion(out, "truth.json");
    io::write_truth_manifest(&datagen::truth_manifest(&spec), &truth_path)?;
    let positives = data.instances().iter().filter(|i| i.label == 1).count();
    println!("instances,{}", data.len());
    println!("positives,{positives}");
    println!("dataset,{}", out.display());
    println!("truth_manifest,{}", truth_path.display());
    Ok(0)
}

fn sample(
    input: &Path,
    s0: Option<f64>,
    s1: Option<f64>,
    per_instance: bool,
    seed: u64,
    out: &Path,
) -> Result<i32, CliError> {
    let spec = if per_instance {
        SamplingSpec::PerInstance
    } else {
        constant_spec(s0, s1)?
    };
    let data = io::read_dataset(input)?;
    let (kept, manifest) = sampling::downsample(&data, &spec, seed)?;
    io::write_dataset(&kept, out)?;
    let manifest_path = companion(out, "manifest.json");
    io::write_sampling_manifest(&manifest, &manifest_path)?;
    println!("original_count,{}", manifest.original_count);
    println!("retained_count,{}", manifest.retained_count);
    for (label, count) in manifest.retained_per_label.iter().enumerate() {
        println!("retained_label{label},{count}");
    }
    println!("dataset,{}", out.display());
    println!("manifest,{}", manifest_path.display());
    Ok(0)
}

fn spec_mode_name(spec: &SamplingSpec) -> &'static str {
    match spec {
        SamplingSpec::Constant { .. } => "constant",
        SamplingSpec::PerInstance => "per-instance",
    }
}

#[allow(clippy::too_many_arguments)]
fn train(
    input: &Path,
    s0: Option<f64>,
    s1: Option<f64>,
    per_instance: bool,
    manifest: Option<&Path>,
    lambda: f64,
    lr: f64,
    max_iters: usize,
    tol: f64,
    out_model: &Path,
) -> Result<i32, CliError> {
    let spec = if let Some(manifest_path) = manifest {
        io::read_sampling_manifest(manifest_path)?.spec
    } else if per_instance {
        SamplingSpec::PerInstance
    } else {
        constant_spec(s0, s1)?
    };
    let config = TrainConfig {
        lambda,
        learning_rate: lr,
        max_iters,
        grad_tol: tol,
        backtracking: true,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let data = io::read_dataset(input)?;
    let report = logistic::train(&data, &spec, &config)?;
    let doc = ModelDocument {
        model: report.model,
        lambda,
        train_s_r_mode: spec_mode_name(&spec).to_string(),
    };
    io::write_model(&doc, out_model)?;
    println!("final_loss,{}", report.loss_trace.last().expect("trace never empty"));
    println!("grad_norm,{}", report.final_grad_norm);
    println!("iterations,{}", report.iterations);
    println!("converged,{}", report.converged);
    println!("model,{}", out_model.display());
    Ok(0)
}

fn predict(model: &Path, input: &Path, deploy_ratio: f64, out: &Path) -> Result<i32, CliError> {
    if !(deploy_ratio.is_finite() && deploy_ratio > 0.0) {
        return Err(usage(format!(
            "--deploy-ratio is {deploy_ratio}, must be a positive finite number"
        )));
    }
    let doc = io::read_model(model)?;
    let data = io::read_dataset(input)?;
    if doc.model.feature_count() != data.feature_count() {
        return Err(CliError::Data(Error::Domain(format!(
            "model has {} weights but the dataset has {} features",
            doc.model.feature_count(),
            data.feature_count()
        ))));
    }
    let predictions: Vec<f64> = data
        .instances()
        .iter()
        .map(|inst| logistic::predict(&doc.model, &inst.features, deploy_ratio))
        .collect();
    io::write_dataset_with_predictions(&data, &predictions, out)?;
    println!("instances,{}", data.len());
    println!("predictions,{}", out.display());
    Ok(0)
}

fn evaluate(model: &Path, input: &Path, truth_manifest: Option<&Path>) -> Result<i32, CliError> {
    let doc = io::read_model(model)?;
    let data = io::read_dataset(input)?;
    if doc.model.feature_count() != data.feature_count() {
        return Err(CliError::Data(Error::Domain(format!(
            "model has {} weights but the dataset has {} features",
            doc.model.feature_count(),
            data.feature_count()
        ))));
    }
    if data.is_empty() {
        return Err(CliError::Data(Error::Domain(
            "cannot evaluate on an empty dataset".into(),
        )));
    }
    println!("instances,{}", data.len());
    if let Some(truth_path) = truth_manifest {
        let truth = io::read_truth_manifest(truth_path)?;
        if truth.weights.len() != doc.model.feature_count() {
            return Err(CliError::Data(Error::Domain(format!(
                "truth manifest has {} weights but the model has {}",
                truth.weights.len(),
                doc.model.feature_count()
            ))));
        }
        let weight_error = doc
            .model
            .weights
            .iter()
            .zip(&truth.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        println!("intercept_error,{}", (doc.model.intercept - truth.intercept).abs());
        println!("weight_error_max,{weight_error}");
    }

    // deployment view: probabilities and likelihood at sample ratio 1
    let mut nll = 0.0;
    let mut counts = [0usize; 10];
    let mut predicted_sum = [0.0f64; 10];
    let mut positives = [0usize; 10];
    for inst in data.instances() {
        nll += logistic::instance_loss(&doc.model, &inst.features, inst.label, 1.0);
        let p = logistic::predict(&doc.model, &inst.features, 1.0);
        let bin = ((p * 10.0).floor() as usize).min(9);
        counts[bin] += 1;
        predicted_sum[bin] += p;
        positives[bin] += inst.label;
    }
    println!("mean_nll,{}", nll / data.len() as f64);
    println!("bin,count,mean_predicted,observed_freq");
    for bin in 0..10 {
        if counts[bin] == 0 {
            println!("{bin},0,nan,nan");
        } else {
            let count = counts[bin] as f64;
            println!(
                "{bin},{},{},{}",
                counts[bin],
                predicted_sum[bin] / count,
                positives[bin] as f64 / count
            );
        }
    }
    Ok(0)
}

fn verify_oracle(labels: usize, trials: u64, seed: u64) -> Result<i32, CliError> {
    if labels < 2 {
        return Err(usage("--labels must be at least 2"));
    }
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    // stream 0 picks the scenario; stream 1 + y drives label y's simulation
    let mut setup = ChaCha8Rng::seed_from_u64(seed);
    setup.set_stream(0);
    let rel: Vec<f64> = (0..labels).map(|_| 0.1 + 0.9 * setup.random::<f64>()).collect();
    let rates: Vec<f64> = (0..labels).map(|_| 0.05 + 0.95 * setup.random::<f64>()).collect();
    let pred = TablePredictor::new(rel)?;
    let x = FeatureVector::new(vec![])?;
    let closed = corrected_distribution(&pred, &rates, &x)?;

    println!("label,closed_form,estimate,std_error,z");
    let mut max_abs_z = 0.0f64;
    for label in 0..labels {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + label as u64);
        let mc = monte_carlo_corrected_prob(
            &pred,
            &rates,
            &x,
            label,
            trials,
            &mut rng,
            DEFAULT_MAX_REJECTIONS,
        )?;
        // z against the standard error the closed form implies
        let se = (closed[label] * (1.0 - closed[label]) / trials as f64).sqrt();
        let z = if se > 0.0 {
            (mc.estimate - closed[label]) / se
        } else if mc.estimate == closed[label] {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z.abs());
        println!(
            "{label},{},{},{},{z}",
            closed[label], mc.estimate, mc.std_error
        );
    }
    println!("max_abs_z,{max_abs_z}");
    Ok(if max_abs_z > 5.0 { 1 } else { 0 })
}
