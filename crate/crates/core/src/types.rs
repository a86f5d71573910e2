//! Shared domain types: label spaces, feature vectors, datasets and sampling
//! specifications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A label is an index into a [`LabelSpace`]. The binary case is `{0, 1}` in
/// that order, so label `1` is always the target condition.
pub type Label = usize;

/// An ordered finite set of `K >= 2` labels, identified by index `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    count: usize,
}

impl LabelSpace {
    pub fn new(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::domain(format!(
                "a label space needs at least 2 labels, got {count}"
            )));
        }
        Ok(LabelSpace { count })
    }

    /// The `{0, 1}` space used by binary classification.
    pub fn binary() -> Self {
        LabelSpace { count: 2 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        0..self.count
    }

    pub fn contains(&self, label: Label) -> bool {
        label < self.count
    }
}

/// A dense row of real-valued features. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "feature {i} is not finite: {}",
                values[i]
            )));
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One training example: an input point and its observed label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub features: FeatureVector,
    pub label: Label,
}

/// An ordered collection of labeled instances with a fixed feature dimension,
/// optionally carrying per-instance per-label sampling rates (the tabulated
/// values of the inclusion function `s` at each instance).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_count: usize,
    label_space: LabelSpace,
    instances: Vec<LabeledInstance>,
    /// Row-major, `label_space.len()` entries per instance.
    rates: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        feature_count: usize,
        label_space: LabelSpace,
        instances: Vec<LabeledInstance>,
    ) -> Result<Self> {
        Self::build(feature_count, label_space, instances, None)
    }

    /// As [`Dataset::new`], attaching one inclusion rate per label per
    /// instance (`rates.len() == instances.len() * label_space.len()`).
    pub fn with_rates(
        feature_count: usize,
        label_space: LabelSpace,
        instances: Vec<LabeledInstance>,
        rates: Vec<f64>,
    ) -> Result<Self> {
        Self::build(feature_count, label_space, instances, Some(rates))
    }

    fn build(
        feature_count: usize,
        label_space: LabelSpace,
        instances: Vec<LabeledInstance>,
        rates: Option<Vec<f64>>,
    ) -> Result<Self> {
        for (i, inst) in instances.iter().enumerate() {
            if inst.features.len() != feature_count {
                return Err(Error::domain(format!(
                    "instance {i} has {} features, dataset declares {feature_count}",
                    inst.features.len()
                )));
            }
            if !label_space.contains(inst.label) {
                return Err(Error::domain(format!(
                    "instance {i} has label {} outside the {}-label space",
                    inst.label,
                    label_space.len()
                )));
            }
        }
        if let Some(rates) = &rates {
            let expected = instances.len() * label_space.len();
            if rates.len() != expected {
                return Err(Error::domain(format!(
                    "expected {expected} sampling rates, got {}",
                    rates.len()
                )));
            }
            if let Some(i) = rates.iter().position(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::domain(format!(
                    "sampling rate {} at flat index {i} is outside [0, 1]",
                    rates[i]
                )));
            }
        }
        Ok(Dataset {
            feature_count,
            label_space,
            instances,
            rates,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn has_rates(&self) -> bool {
        self.rates.is_some()
    }

    /// The per-label inclusion rates recorded for instance `index`, if any.
    pub fn rates_of(&self, index: usize) -> Option<&[f64]> {
        let k = self.label_space.len();
        self.rates.as_ref().map(|r| &r[index * k..(index + 1) * k])
    }
}

/// How each instance's inclusion probability `s(x, y)` is determined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SamplingSpec {
    /// One rate per label, the same for every input.
    Constant { rates: Vec<f64> },
    /// Rates are read from the dataset's per-instance rate columns.
    PerInstance,
}

impl SamplingSpec {
    pub fn constant(rates: Vec<f64>) -> Result<Self> {
        if rates.len() < 2 {
            return Err(Error::domain(format!(
                "need one rate per label (at least 2), got {}",
                rates.len()
            )));
        }
        if let Some(i) = rates.iter().position(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::domain(format!(
                "sampling rate for label {i} is {}, outside [0, 1]",
                rates[i]
            )));
        }
        Ok(SamplingSpec::Constant { rates })
    }

    /// Constant rates for the binary case: `s(x, 0) = s0`, `s(x, 1) = s1`.
    pub fn binary_constant(s0: f64, s1: f64) -> Result<Self> {
        Self::constant(vec![s0, s1])
    }

    /// Uniform sampling with probability 1: keeps everything, corrects nothing.
    pub fn keep_all() -> Self {
        SamplingSpec::Constant {
            rates: vec![1.0, 1.0],
        }
    }

    /// Resolve `s(x_i, .)` for instance `index` of `data`.
    pub fn rates_for<'a>(&'a self, data: &'a Dataset, index: usize) -> Result<&'a [f64]> {
        match self {
            SamplingSpec::Constant { rates } => {
                if rates.len() != data.label_space().len() {
                    return Err(Error::domain(format!(
                        "sampling spec has {} rates but the dataset has {} labels",
                        rates.len(),
                        data.label_space().len()
                    )));
                }
                Ok(rates)
            }
            SamplingSpec::PerInstance => data.rates_of(index).ok_or_else(|| {
                Error::domain("per-instance sampling requested but the dataset has no rate columns")
            }),
        }
    }
}
