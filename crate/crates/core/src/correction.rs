//! Correcting discrete predictive distributions for label-dependent
//! downsampling, plus a rejection-sampling oracle for checking the closed
//! form by simulation.
//!
//! The setting: a model scores each label with a nonnegative relative
//! probability `f(x, y)` (not necessarily normalized), but the data it was
//! fit to was thinned by keeping each instance with a known probability
//! `s(x, y)` that may depend on the label. The distribution the model then
//! describes is not `normalize(f)` but
//!
//! ```text
//! P(y | x) = f(x, y) s(x, y) / sum_y' f(x, y') s(x, y')
//! ```
//!
//! which this module evaluates directly, and which the generative process
//! below reproduces by drawing from `normalize(f)` and accepting each draw
//! with probability `s(x, y)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{Dataset, FeatureVector, SamplingSpec};

/// Cap on consecutive rejected draws before [`generative_draw`] gives up.
pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

/// A model producing nonnegative relative probabilities over a fixed label
/// set. Scores need not be normalized; only ratios matter.
pub trait DiscretePredictor {
    fn label_count(&self) -> usize;

    /// Relative probability of `label` at input `x`. Must be finite and
    /// nonnegative for every label in range.
    fn rel_prob(&self, x: &FeatureVector, label: usize) -> f64;
}

/// An input-independent predictor given by an explicit table of relative
/// probabilities, one per label.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePredictor {
    rel: Vec<f64>,
}

impl TablePredictor {
    pub fn new(rel: Vec<f64>) -> Result<Self> {
        if rel.len() < 2 {
            return Err(Error::domain(format!(
                "need at least 2 labels, got {}",
                rel.len()
            )));
        }
        if let Some(i) = rel.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(format!(
                "relative probability for label {i} is {}, must be finite and nonnegative",
                rel[i]
            )));
        }
        Ok(TablePredictor { rel })
    }
}

impl DiscretePredictor for TablePredictor {
    fn label_count(&self) -> usize {
        self.rel.len()
    }

    fn rel_prob(&self, _x: &FeatureVector, label: usize) -> f64 {
        self.rel[label]
    }
}

fn rel_probs<P: DiscretePredictor>(pred: &P, x: &FeatureVector) -> Result<Vec<f64>> {
    let rel: Vec<f64> = (0..pred.label_count()).map(|y| pred.rel_prob(x, y)).collect();
    if let Some(y) = rel.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain(format!(
            "predictor returned {} for label {y}, must be finite and nonnegative",
            rel[y]
        )));
    }
    Ok(rel)
}

fn normalize_in_place(mut weights: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::zero_mass(format!(
            "{what} sum to {total}, nothing to normalize"
        )));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// The predictor's own distribution at `x`: `f(x, .)` scaled to sum to 1.
pub fn normalize<P: DiscretePredictor>(pred: &P, x: &FeatureVector) -> Result<Vec<f64>> {
    normalize_in_place(rel_probs(pred, x)?, "relative probabilities")
}

fn check_rates(rates: &[f64], labels: usize) -> Result<()> {
    if rates.len() != labels {
        return Err(Error::domain(format!(
            "got {} sampling rates for {labels} labels",
            rates.len()
        )));
    }
    if let Some(y) = rates.iter().position(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::domain(format!(
            "sampling rate for label {y} is {}, outside [0, 1]",
            rates[y]
        )));
    }
    Ok(())
}

/// The label distribution at `x` once each label's mass is reweighted by its
/// inclusion rate: `P(y) = f(x, y) s(x, y) / sum_y' f(x, y') s(x, y')`.
pub fn corrected_distribution<P: DiscretePredictor>(
    pred: &P,
    rates: &[f64],
    x: &FeatureVector,
) -> Result<Vec<f64>> {
    check_rates(rates, pred.label_count())?;
    let mut weights = rel_probs(pred, x)?;
    for (w, s) in weights.iter_mut().zip(rates) {
        *w *= s;
    }
    normalize_in_place(weights, "rate-weighted relative probabilities")
}

/// One entry of [`corrected_distribution`].
pub fn corrected_prob<P: DiscretePredictor>(
    pred: &P,
    rates: &[f64],
    x: &FeatureVector,
    label: usize,
) -> Result<f64> {
    if label >= pred.label_count() {
        return Err(Error::domain(format!(
            "label {label} outside the {}-label space",
            pred.label_count()
        )));
    }
    Ok(corrected_distribution(pred, rates, x)?[label])
}

/// Negative log likelihood of `data` under the rate-corrected distribution,
/// plus `regularizer`:
///
/// ```text
/// sum_n [ -ln f(x_n, y_n) - ln s(x_n, y_n) + ln sum_y f(x_n, y) s(x_n, y) ] + r
/// ```
///
/// An observed label with `f(x_n, y_n) = 0` contributes `+inf`; an observed
/// label with `s(x_n, y_n) = 0` is an error, since an instance that can
/// never be sampled cannot have been observed.
pub fn corrected_nll<P: DiscretePredictor>(
    data: &Dataset,
    pred: &P,
    spec: &SamplingSpec,
    regularizer: f64,
) -> Result<f64> {
    if pred.label_count() != data.label_space().len() {
        return Err(Error::domain(format!(
            "predictor covers {} labels but the dataset has {}",
            pred.label_count(),
            data.label_space().len()
        )));
    }
    let mut total = regularizer;
    for (n, inst) in data.instances().iter().enumerate() {
        let rates = spec.rates_for(data, n)?;
        check_rates(rates, pred.label_count())?;
        let rel = rel_probs(pred, &inst.features)?;
        let denom: f64 = rel.iter().zip(rates).map(|(f, s)| f * s).sum();
        if denom <= 0.0 {
            return Err(Error::zero_mass(format!(
                "instance {n}: every label has zero rate-weighted mass"
            )));
        }
        if rates[inst.label] == 0.0 {
            return Err(Error::domain(format!(
                "instance {n}: observed label {} has sampling rate 0",
                inst.label
            )));
        }
        total += -rel[inst.label].ln() - rates[inst.label].ln() + denom.ln();
    }
    Ok(total)
}

fn draw_from(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (y, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return y;
        }
    }
    // u landed in the rounding slack past the last cumulative sum
    probs.len() - 1
}

/// Simulate the process that produced the thinned data: draw a candidate
/// label from the predictor's own distribution, keep it with probability
/// equal to its sampling rate, retry on rejection. Fails with
/// [`Error::RejectionLimit`] after `max_rejections` consecutive rejections,
/// which a zero or tiny acceptance mass makes inevitable.
pub fn generative_draw<P: DiscretePredictor>(
    pred: &P,
    rates: &[f64],
    x: &FeatureVector,
    rng: &mut impl Rng,
    max_rejections: u64,
) -> Result<usize> {
    check_rates(rates, pred.label_count())?;
    let probs = normalize(pred, x)?;
    let mut rejections = 0;
    loop {
        let candidate = draw_from(&probs, rng);
        let u: f64 = rng.random();
        if u < rates[candidate] {
            return Ok(candidate);
        }
        rejections += 1;
        if rejections >= max_rejections {
            return Err(Error::RejectionLimit(rejections));
        }
    }
}

/// A simulated estimate of a corrected label probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
}

/// Estimate `P(label)` under the corrected distribution by running
/// [`generative_draw`] `trials` times and counting hits. Agreement with
/// [`corrected_prob`] within a few standard errors is the simulation check
/// that the closed form and the generative process describe the same law.
pub fn monte_carlo_corrected_prob<P: DiscretePredictor>(
    pred: &P,
    rates: &[f64],
    x: &FeatureVector,
    label: usize,
    trials: u64,
    rng: &mut impl Rng,
    max_rejections: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    if label >= pred.label_count() {
        return Err(Error::domain(format!(
            "label {label} outside the {}-label space",
            pred.label_count()
        )));
    }
    check_rates(rates, pred.label_count())?;
    let probs = normalize(pred, x)?;
    let mut hits: u64 = 0;
    for _ in 0..trials {
        let mut rejections = 0;
        let drawn = loop {
            let candidate = draw_from(&probs, rng);
            let u: f64 = rng.random();
            if u < rates[candidate] {
                break candidate;
            }
            rejections += 1;
            if rejections >= max_rejections {
                return Err(Error::RejectionLimit(rejections));
            }
        };
        if drawn == label {
            hits += 1;
        }
    }
    let estimate = hits as f64 / trials as f64;
    let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(MonteCarloEstimate {
        estimate,
        std_error,
    })
}
