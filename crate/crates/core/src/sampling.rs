//! Label-dependent downsampling: each instance is kept independently with
//! probability `s(x_n, y_n)`, producing the biased subsets the rest of the
//! crate knows how to correct for.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{Dataset, SamplingSpec};

/// Provenance record of a [`downsample`] run, persisted alongside the output
/// so training can later reconstruct exactly which `s` produced the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingManifest {
    pub seed: u64,
    pub spec: SamplingSpec,
    pub original_count: usize,
    pub retained_count: usize,
    /// Retained instances per label; sums to `retained_count`.
    pub retained_per_label: Vec<usize>,
}

/// The uniform variate deciding instance `ordinal`'s retention: the instance
/// is kept iff `inclusion_draw(seed, ordinal) < rate`.
///
/// Each ordinal gets its own generator stream, so the decision depends only
/// on `(seed, ordinal, rate)`: decisions can be made in any order or in
/// parallel, and editing one instance never disturbs another's draw.
pub fn inclusion_draw(seed: u64, ordinal: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng.random()
}

/// Thin `data` by one independent Bernoulli trial per instance with success
/// probability `s(x_n, y_n)`, preserving the order of survivors. Per-instance
/// rate columns, when present, are carried into the output so the subset
/// remains self-describing. An empty result is legal.
pub fn downsample(
    data: &Dataset,
    spec: &SamplingSpec,
    seed: u64,
) -> Result<(Dataset, SamplingManifest)> {
    let label_count = data.label_space().len();
    let mut retained = Vec::new();
    let mut retained_rates = Vec::new();
    let mut per_label = vec![0usize; label_count];
    for (n, inst) in data.instances().iter().enumerate() {
        let rates = spec.rates_for(data, n)?;
        if inclusion_draw(seed, n as u64) < rates[inst.label] {
            per_label[inst.label] += 1;
            retained.push(inst.clone());
            if let Some(rows) = data.rates_of(n) {
                retained_rates.extend_from_slice(rows);
            }
        }
    }
    let manifest = SamplingManifest {
        seed,
        spec: spec.clone(),
        original_count: data.len(),
        retained_count: retained.len(),
        retained_per_label: per_label,
    };
    let out = if data.has_rates() {
        Dataset::with_rates(
            data.feature_count(),
            data.label_space().clone(),
            retained,
            retained_rates,
        )?
    } else {
        Dataset::new(data.feature_count(), data.label_space().clone(), retained)?
    };
    Ok((out, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FeatureVector, LabelSpace, LabeledInstance};

    fn coin_data(n: usize) -> Dataset {
        let instances = (0..n)
            .map(|i| LabeledInstance {
                features: FeatureVector::new(vec![i as f64]).unwrap(),
                label: i % 2,
            })
            .collect();
        Dataset::new(1, LabelSpace::binary(), instances).unwrap()
    }

    #[test]
    fn rate_one_keeps_everything_rate_zero_drops_everything() {
        let data = coin_data(500);
        let (all, m) = downsample(&data, &SamplingSpec::keep_all(), 1).unwrap();
        assert_eq!(all, data);
        assert_eq!(m.retained_count, 500);
        assert_eq!(m.retained_per_label, vec![250, 250]);

        let none_spec = SamplingSpec::binary_constant(0.0, 0.0).unwrap();
        let (none, m) = downsample(&data, &none_spec, 1).unwrap();
        assert!(none.is_empty());
        assert_eq!(m.retained_count, 0);
        assert_eq!(m.original_count, 500);
    }

    #[test]
    fn identical_inputs_give_identical_outputs() {
        let data = coin_data(2000);
        let spec = SamplingSpec::binary_constant(0.3, 0.7).unwrap();
        let (a, ma) = downsample(&data, &spec, 99).unwrap();
        let (b, mb) = downsample(&data, &spec, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let (c, _) = downsample(&data, &spec, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn survivors_keep_their_original_order() {
        let data = coin_data(1000);
        let spec = SamplingSpec::binary_constant(0.5, 0.5).unwrap();
        let (kept, _) = downsample(&data, &spec, 7).unwrap();
        let positions: Vec<f64> = kept
            .instances()
            .iter()
            .map(|i| i.features.values()[0])
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decisions_depend_only_on_seed_ordinal_and_rate() {
        // Deleting an instance means never sampling it: give instance j rate
        // 0 via per-instance columns and check every other decision is
        // untouched. Changing j's content must not matter either.
        let n = 200;
        let make = |drop: Option<usize>, perturb: Option<usize>| {
            let instances: Vec<LabeledInstance> = (0..n)
                .map(|i| LabeledInstance {
                    features: FeatureVector::new(vec![i as f64]).unwrap(),
                    label: usize::from(perturb == Some(i)),
                })
                .collect();
            let rates: Vec<f64> = (0..n)
                .flat_map(|i| {
                    if drop == Some(i) {
                        [0.0, 0.0]
                    } else {
                        [0.6, 0.6]
                    }
                })
                .collect();
            Dataset::with_rates(1, LabelSpace::binary(), instances, rates).unwrap()
        };
        let decisions = |data: &Dataset| -> Vec<usize> {
            let (kept, _) = downsample(data, &SamplingSpec::PerInstance, 4242).unwrap();
            kept.instances()
                .iter()
                .map(|i| i.features.values()[0] as usize)
                .collect()
        };
        let base = decisions(&make(None, None));
        assert!(!base.is_empty());
        let j = base[base.len() / 2];
        let without_j: Vec<usize> = base.iter().copied().filter(|&i| i != j).collect();
        assert_eq!(decisions(&make(Some(j), None)), without_j);
        // flipping j's label (rates symmetric) leaves all decisions alone
        assert_eq!(decisions(&make(None, Some(j))), base);
    }

    #[test]
    fn retention_frequency_tracks_the_rate() {
        // 50 seeds x 1,000 label-0 instances at rate 0.3: the total retained
        // count is Binomial(50,000, 0.3); 5 sigma ~ 512.
        let instances = (0..1000)
            .map(|i| LabeledInstance {
                features: FeatureVector::new(vec![i as f64]).unwrap(),
                label: 0,
            })
            .collect();
        let data = Dataset::new(1, LabelSpace::binary(), instances).unwrap();
        let spec = SamplingSpec::binary_constant(0.3, 1.0).unwrap();
        let mut total = 0usize;
        for seed in 0..50 {
            total += downsample(&data, &spec, seed).unwrap().1.retained_count;
        }
        let expected = 15_000.0;
        let sigma = (50_000.0f64 * 0.3 * 0.7).sqrt();
        assert!(
            (total as f64 - expected).abs() < 5.0 * sigma,
            "retained {total}, expected {expected} +- {}",
            5.0 * sigma
        );
    }

    #[test]
    fn per_instance_rate_columns_survive_into_the_output() {
        let instances: Vec<LabeledInstance> = (0..100)
            .map(|i| LabeledInstance {
                features: FeatureVector::new(vec![i as f64]).unwrap(),
                label: 0,
            })
            .collect();
        let rates: Vec<f64> = (0..100).flat_map(|i| [i as f64 / 100.0, 1.0]).collect();
        let data = Dataset::with_rates(1, LabelSpace::binary(), instances, rates).unwrap();
        let (kept, _) = downsample(&data, &SamplingSpec::PerInstance, 3).unwrap();
        assert!(kept.has_rates());
        for (i, inst) in kept.instances().iter().enumerate() {
            let original = inst.features.values()[0] / 100.0;
            assert_eq!(kept.rates_of(i).unwrap(), &[original, 1.0]);
        }
    }

    #[test]
    fn manifest_counts_are_consistent() {
        let data = coin_data(3000);
        let spec = SamplingSpec::binary_constant(0.2, 0.9).unwrap();
        let (kept, m) = downsample(&data, &spec, 5).unwrap();
        assert_eq!(m.retained_count, kept.len());
        assert_eq!(m.retained_per_label.iter().sum::<usize>(), m.retained_count);
        assert!(m.retained_count <= m.original_count);
        // label 1 is kept far more often than label 0
        assert!(m.retained_per_label[1] > m.retained_per_label[0]);
    }
}
