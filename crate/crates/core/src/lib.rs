//! Correcting supervised learning for label-dependent downsampling.
//!
//! When a dataset has been thinned by keeping each instance with a known
//! probability `s(x, y)` that depends on the label (say, to tame a huge
//! majority class), a model fit naively to the survivors learns the thinned
//! distribution, not the real one. Because the thinning probability is
//! known, no information is actually lost: reweighting each label's
//! probability mass by its inclusion rate and renormalizing recovers the
//! original conditional distribution, and the fix folds directly into the
//! likelihood used for training.
//!
//! The crate provides that correction at two levels plus the tooling to
//! exercise it end to end:
//!
//! - [`correction`]: the general engine for any finite label set: corrected
//!   conditional probabilities, the corrected negative log likelihood, and a
//!   rejection-sampling simulation of the thinning process that serves as an
//!   independent check of the closed form.
//! - [`logistic`]: binary logistic regression where the correction reduces
//!   to a single scalar per instance, the sample ratio `s_r = s0/s1`;
//!   includes stable losses, analytic gradients, ridge regularization, and a
//!   deterministic gradient-descent trainer.
//! - [`sampling`]: the Bernoulli downsampler producing biased subsets (and
//!   the manifest recording how, so training can undo it).
//! - [`datagen`]: synthetic data from a known logistic ground truth, for
//!   verifying parameter recovery.
//! - [`io`]: CSV datasets, JSON model documents and manifests.
//!
//! ```
//! use biascorrect::datagen::{generate, GenSpec};
//! use biascorrect::logistic::{predict, train, TrainConfig};
//! use biascorrect::sampling::downsample;
//! use biascorrect::SamplingSpec;
//!
//! // Data from a known model, thinned to 30% on label 0.
//! let spec = GenSpec { n: 4000, feature_count: 1, intercept: -1.0, weights: vec![2.0], seed: 7 };
//! let full = generate(&spec)?;
//! let thin = SamplingSpec::binary_constant(0.3, 1.0)?;
//! let (biased, _manifest) = downsample(&full, &thin, 11)?;
//!
//! // Training on the biased subset with the matching spec corrects for it.
//! let report = train(&biased, &thin, &TrainConfig::default())?;
//! assert!((report.model.intercept - spec.intercept).abs() < 0.3);
//!
//! // Deployment-time probabilities answer for the unthinned population.
//! let p = predict(&report.model, &full.instances()[0].features, 1.0);
//! assert!((0.0..=1.0).contains(&p));
//! # Ok::<(), biascorrect::Error>(())
//! ```

pub mod correction;
pub mod datagen;
mod error;
pub mod io;
pub mod logistic;
pub mod sampling;
pub mod types;

pub use error::{Error, Result};
pub use types::{Dataset, FeatureVector, Label, LabelSpace, LabeledInstance, SamplingSpec};
