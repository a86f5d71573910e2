//! Binary logistic regression corrected for label-dependent downsampling.
//!
//! The model scores label 1 with relative probability `e^z`, `z = c + w.x`,
//! and label 0 with 1. When the training data kept label-0 instances with
//! probability `s0` and label-1 instances with probability `s1`, the whole
//! correction collapses into the sample ratio `s_r = s0 / s1`: the corrected
//! probability of label 1 is `e^z / (s_r + e^z)`, its negative log
//! likelihood is `ln(s_r + e^z) - y z` up to a parameter-free constant, and
//! the gradient keeps the familiar `(P - y)` residual form. Setting
//! `s_r = 1` recovers plain logistic regression, so the uncorrected path is
//! the same code.
//!
//! Everything that exponentiates `z` goes through shifted log-sum-exp forms
//! so that losses and gradients stay finite for logits far beyond the point
//! where `e^z` itself overflows.

use crate::correction::DiscretePredictor;
use crate::error::{Error, Result};
use crate::types::{Dataset, FeatureVector, Label, SamplingSpec};

/// Intercept and weights of a binary logistic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LogisticModel {
    pub fn new(intercept: f64, weights: Vec<f64>) -> Result<Self> {
        if !intercept.is_finite() {
            return Err(Error::domain(format!("intercept is not finite: {intercept}")));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::domain(format!(
                "weight {i} is not finite: {}",
                weights[i]
            )));
        }
        Ok(LogisticModel { intercept, weights })
    }

    /// The all-zero model of a given dimension, the training start point.
    pub fn zeros(feature_count: usize) -> Self {
        LogisticModel {
            intercept: 0.0,
            weights: vec![0.0; feature_count],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    /// `z = c + w.x`.
    pub fn logit(&self, x: &FeatureVector) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        let mut z = self.intercept;
        for (w, v) in self.weights.iter().zip(x.values()) {
            z += w * v;
        }
        z
    }
}

/// The logistic model viewed as a relative-probability predictor over
/// `{0, 1}`: label 0 scores 1, label 1 scores `e^z`.
///
/// This is the bridge to the general correction engine and inherits the raw
/// exponential, so it is only usable while `e^z` stays finite; the
/// label-specific functions below are the stable path.
#[derive(Debug, Clone, Copy)]
pub struct LogisticPredictor<'a> {
    model: &'a LogisticModel,
}

impl<'a> LogisticPredictor<'a> {
    pub fn new(model: &'a LogisticModel) -> Self {
        LogisticPredictor { model }
    }
}

impl DiscretePredictor for LogisticPredictor<'_> {
    fn label_count(&self) -> usize {
        2
    }

    fn rel_prob(&self, x: &FeatureVector, label: usize) -> f64 {
        match label {
            0 => 1.0,
            1 => self.model.logit(x).exp(),
            _ => 0.0,
        }
    }
}

/// `s_r = s(x, 0) / s(x, 1)` from a resolved binary rate pair.
///
/// `s(x, 1) = 0` is an error: a dataset containing label-1 instances that
/// could never be sampled admits no correction. `s(x, 0) = 0` yields ratio
/// 0, which [`SampleRatioView`] additionally rejects for training.
pub fn sample_ratio(rates: &[f64]) -> Result<f64> {
    if rates.len() != 2 {
        return Err(Error::domain(format!(
            "sample ratio needs exactly 2 rates, got {}",
            rates.len()
        )));
    }
    if rates[1] <= 0.0 {
        return Err(Error::domain(format!(
            "sampling rate for label 1 is {}, must be positive",
            rates[1]
        )));
    }
    Ok(rates[0] / rates[1])
}

/// Per-instance sample ratios materialized once per dataset; the ratios are
/// parameter-free, so training computes them a single time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRatioView {
    ratios: Vec<f64>,
}

impl SampleRatioView {
    /// Resolve `s_r` for every instance, enforcing the training
    /// requirements: both labels' rates positive, so every ratio is finite
    /// and positive.
    pub fn from_spec(data: &Dataset, spec: &SamplingSpec) -> Result<Self> {
        if data.label_space().len() != 2 {
            return Err(Error::domain(format!(
                "logistic regression needs binary labels, dataset has {}",
                data.label_space().len()
            )));
        }
        let mut ratios = Vec::with_capacity(data.len());
        for n in 0..data.len() {
            let rates = spec.rates_for(data, n)?;
            let r = sample_ratio(rates)
                .map_err(|e| Error::domain(format!("instance {n}: {e}")))?;
            if r <= 0.0 {
                return Err(Error::domain(format!(
                    "instance {n}: sampling rate for label 0 is 0; training needs \
                     positive rates for both labels"
                )));
            }
            ratios.push(r);
        }
        Ok(SampleRatioView { ratios })
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }
}

/// Stable `P(y = 1) = e^z / (s_r + e^z) = sigmoid(z - ln s_r)`.
fn prob_from_logit(z: f64, ln_sr: f64) -> f64 {
    let d = z - ln_sr;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Stable `ln(s_r + e^z) - y z` via
/// `ln(s_r + e^z) = max(z, ln s_r) + ln(1 + e^{-|z - ln s_r|})`.
fn loss_from_logit(z: f64, y: Label, ln_sr: f64) -> f64 {
    let lse = z.max(ln_sr) + (-(z - ln_sr).abs()).exp().ln_1p();
    lse - (y as f64) * z
}

/// Corrected probability of label 1 at `x`.
///
/// Requires `s_r` finite and positive.
pub fn target_prob(m: &LogisticModel, x: &FeatureVector, s_r: f64) -> f64 {
    debug_assert!(s_r.is_finite() && s_r > 0.0);
    prob_from_logit(m.logit(x), s_r.ln())
}

/// Per-instance negative log likelihood `ln(s_r + e^z) - y z`, which drops
/// the parameter-free `-(1 - y) ln s_r` of the full form and therefore has
/// the same gradient.
///
/// Requires `s_r` finite and positive, `y` in `{0, 1}`.
pub fn instance_loss(m: &LogisticModel, x: &FeatureVector, y: Label, s_r: f64) -> f64 {
    debug_assert!(s_r.is_finite() && s_r > 0.0);
    debug_assert!(y <= 1);
    loss_from_logit(m.logit(x), y, s_r.ln())
}

/// Probability of label 1 for deployment, where the deployment-time ratio
/// defaults to 1: a model trained with correction then queried at ratio 1
/// answers for the original, unthinned population.
pub fn predict(m: &LogisticModel, x: &FeatureVector, s_r_deploy: f64) -> f64 {
    target_prob(m, x, s_r_deploy)
}

fn check_dimensions(data: &Dataset, m: &LogisticModel) -> Result<()> {
    if m.feature_count() != data.feature_count() {
        return Err(Error::domain(format!(
            "model has {} weights but the dataset has {} features",
            m.feature_count(),
            data.feature_count()
        )));
    }
    Ok(())
}

fn loss_with_view(data: &Dataset, m: &LogisticModel, view: &SampleRatioView, lambda: f64) -> f64 {
    let mut total = 0.0;
    for (inst, &s_r) in data.instances().iter().zip(view.ratios()) {
        total += loss_from_logit(m.logit(&inst.features), inst.label, s_r.ln());
    }
    let sq: f64 = m.weights.iter().map(|w| w * w).sum();
    total + 0.5 * lambda * sq
}

/// Total corrected loss: the sum of [`instance_loss`] over the dataset plus
/// the ridge term `lambda/2 * |w|^2`. The intercept is not regularized.
pub fn total_loss(data: &Dataset, m: &LogisticModel, s: &SamplingSpec, lambda: f64) -> Result<f64> {
    check_dimensions(data, m)?;
    if lambda < 0.0 {
        return Err(Error::domain(format!("lambda is {lambda}, must be nonnegative")));
    }
    let view = SampleRatioView::from_spec(data, s)?;
    Ok(loss_with_view(data, m, &view, lambda))
}

/// Gradient of [`total_loss`] in the intercept and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LossGradient {
    /// Largest absolute component across intercept and weights.
    pub fn max_norm(&self) -> f64 {
        self.weights
            .iter()
            .fold(self.intercept.abs(), |m, w| m.max(w.abs()))
    }

    /// Squared Euclidean norm across intercept and weights.
    pub fn sq_norm(&self) -> f64 {
        self.intercept * self.intercept + self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

fn gradient_with_view(
    data: &Dataset,
    m: &LogisticModel,
    view: &SampleRatioView,
    lambda: f64,
) -> LossGradient {
    let mut d_c = 0.0;
    let mut d_w = vec![0.0; m.feature_count()];
    for (inst, &s_r) in data.instances().iter().zip(view.ratios()) {
        let p = prob_from_logit(m.logit(&inst.features), s_r.ln());
        let residual = p - inst.label as f64;
        d_c += residual;
        for (g, v) in d_w.iter_mut().zip(inst.features.values()) {
            *g += residual * v;
        }
    }
    for (g, w) in d_w.iter_mut().zip(&m.weights) {
        *g += lambda * w;
    }
    LossGradient {
        intercept: d_c,
        weights: d_w,
    }
}

/// Analytic gradient of the corrected loss: with `P_n` the corrected
/// probability of label 1, the intercept component is `sum_n (P_n - y_n)`
/// and weight `f` gets `sum_n x_{n,f} (P_n - y_n) + lambda w_f`.
pub fn gradient(
    data: &Dataset,
    m: &LogisticModel,
    s: &SamplingSpec,
    lambda: f64,
) -> Result<LossGradient> {
    check_dimensions(data, m)?;
    if lambda < 0.0 {
        return Err(Error::domain(format!("lambda is {lambda}, must be nonnegative")));
    }
    let view = SampleRatioView::from_spec(data, s)?;
    Ok(gradient_with_view(data, m, &view, lambda))
}

/// Gradient-descent settings. `learning_rate` is the largest step ever
/// taken; with `backtracking` on (the default) the step is adapted per
/// iteration by an Armijo halving search, otherwise it is used as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Convergence threshold on the gradient max-norm. The reachable floor
    /// scales with the loss magnitude: once per-step decreases shrink to the
    /// loss's float resolution the trainer stops with `converged` false
    /// rather than loop, so large datasets may need a looser value than the
    /// 1e-8 default.
    pub grad_tol: f64,
    pub backtracking: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.0,
            learning_rate: 1.0,
            max_iters: 10_000,
            grad_tol: 1e-8,
            backtracking: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda is {}, must be finite and nonnegative",
                self.lambda
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "learning rate is {}, must be finite and positive",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::domain(format!(
                "gradient tolerance is {}, must be positive",
                self.grad_tol
            )));
        }
        Ok(())
    }
}

/// Outcome of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: LogisticModel,
    /// Loss before training followed by the loss after each accepted step;
    /// non-increasing when backtracking is enabled.
    pub loss_trace: Vec<f64>,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: u32 = 100;

fn stepped(m: &LogisticModel, g: &LossGradient, step: f64) -> LogisticModel {
    LogisticModel {
        intercept: m.intercept - step * g.intercept,
        weights: m
            .weights
            .iter()
            .zip(&g.weights)
            .map(|(w, gw)| w - step * gw)
            .collect(),
    }
}

/// Fit the corrected model by full-batch gradient descent from the all-zero
/// start. Stops when the gradient max-norm drops below `grad_tol`, when
/// `max_iters` steps have been taken, or when the line search can no longer
/// make progress (at which point the gradient is re-examined so `converged`
/// is reported honestly).
pub fn train(data: &Dataset, s: &SamplingSpec, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let view = SampleRatioView::from_spec(data, s)?;
    let mut model = LogisticModel::zeros(data.feature_count());
    let mut loss = loss_with_view(data, &model, &view, config.lambda);
    let mut trace = vec![loss];
    let mut carried_step = config.learning_rate;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm = f64::NAN;

    for _ in 0..config.max_iters {
        let g = gradient_with_view(data, &model, &view, config.lambda);
        grad_norm = g.max_norm();
        if grad_norm < config.grad_tol {
            converged = true;
            break;
        }
        if config.backtracking {
            let sq = g.sq_norm();
            let mut step = (carried_step * 2.0).min(config.learning_rate);
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACKS {
                let candidate = stepped(&model, &g, step);
                if candidate == model {
                    break;
                }
                let candidate_loss = loss_with_view(data, &candidate, &view, config.lambda);
                if candidate_loss <= loss - ARMIJO * step * sq {
                    model = candidate;
                    loss = candidate_loss;
                    carried_step = step;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        } else {
            model = stepped(&model, &g, config.learning_rate);
            loss = loss_with_view(data, &model, &view, config.lambda);
        }
        trace.push(loss);
        iterations += 1;
    }

    if !converged {
        grad_norm = gradient_with_view(data, &model, &view, config.lambda).max_norm();
        converged = grad_norm < config.grad_tol;
    }

    Ok(TrainReport {
        model,
        loss_trace: trace,
        final_grad_norm: grad_norm,
        converged,
        iterations,
    })
}
