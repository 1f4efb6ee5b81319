//! Subgroup construction and the statistics reported for each metric.

mod hypothesis;
mod kde;

pub use hypothesis::{kruskal_wallis, ks_two_sample, Stars, TestResult};
pub use kde::{kde_1d, kde_2d, scott_bandwidth_1d, scott_bandwidth_2d};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::types::{EgoId, TraitName, TraitProfile};

/// Linear-interpolation percentile: the value at position `(n - 1) * q` of
/// the sorted sample, interpolating between neighbors. `q` is in `[0, 1]`.
pub fn percentile(sample: &[f64], q: f64) -> f64 {
    assert!(!sample.is_empty(), "percentile of an empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile must be in [0, 1]");
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let position = (sorted.len() - 1) as f64 * q;
    let below = position.floor() as usize;
    let above = position.ceil() as usize;
    if below == above {
        sorted[below]
    } else {
        let weight = position - below as f64;
        sorted[below] * (1.0 - weight) + sorted[above] * weight
    }
}

/// Median and quartiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn descriptive(sample: &[f64]) -> Result<DescriptiveStats> {
    if sample.is_empty() {
        return Err(Error::SampleTooSmall {
            what: "descriptive statistics",
            min: 1,
            got: 0,
        });
    }
    Ok(DescriptiveStats {
        n: sample.len(),
        median: percentile(sample, 0.5),
        q1: percentile(sample, 0.25),
        q3: percentile(sample, 0.75),
    })
}

/// Egos split into low, middle, and high scorers on one trait.
///
/// `low` holds scores at or below the lower cut, `high` scores at or above
/// the upper cut. When heavy ties make the cuts cross, the two end groups
/// overlap and `degenerate` is set; callers should warn rather than trust
/// the split.
#[derive(Debug, Clone)]
pub struct SubgroupPartition {
    pub trait_name: TraitName,
    pub low: BTreeSet<EgoId>,
    pub middle: BTreeSet<EgoId>,
    pub high: BTreeSet<EgoId>,
    pub low_cut: f64,
    pub high_cut: f64,
    pub degenerate: bool,
}

impl SubgroupPartition {
    pub fn group_label(&self, group: &str) -> String {
        format!("{}_{}", self.trait_name, group)
    }
}

/// Splits egos by trait score at the `low_q` and `high_q` percentiles.
pub fn percentile_split(
    profiles: &BTreeMap<EgoId, TraitProfile>,
    trait_name: TraitName,
    low_q: f64,
    high_q: f64,
) -> Result<SubgroupPartition> {
    if profiles.len() < 4 {
        return Err(Error::SampleTooSmall {
            what: "percentile split",
            min: 4,
            got: profiles.len(),
        });
    }
    assert!(low_q < high_q, "percentile cuts must be ordered");
    let scores: Vec<f64> = profiles.values().map(|p| p.score(trait_name)).collect();
    let low_cut = percentile(&scores, low_q);
    let high_cut = percentile(&scores, high_q);

    let mut low = BTreeSet::new();
    let mut middle = BTreeSet::new();
    let mut high = BTreeSet::new();
    let mut degenerate = false;
    for (ego, profile) in profiles {
        let score = profile.score(trait_name);
        let is_low = score <= low_cut;
        let is_high = score >= high_cut;
        if is_low && is_high {
            degenerate = true;
        }
        if is_low {
            low.insert(ego.clone());
        }
        if is_high {
            high.insert(ego.clone());
        }
        if !is_low && !is_high {
            middle.insert(ego.clone());
        }
    }
    debug_assert!(
        degenerate || low.len() + middle.len() + high.len() == profiles.len(),
        "split must cover all profiles"
    );
    Ok(SubgroupPartition {
        trait_name,
        low,
        middle,
        high,
        low_cut,
        high_cut,
        degenerate,
    })
}

/// High-vs-low comparison of one metric under one trait partition.
#[derive(Debug, Clone)]
pub struct SubgroupComparison {
    pub trait_name: TraitName,
    pub high: DescriptiveStats,
    pub low: DescriptiveStats,
    pub kw: TestResult,
    pub ks: TestResult,
}

fn pooled_sample(
    samples: &BTreeMap<EgoId, Vec<f64>>,
    egos: &BTreeSet<EgoId>,
    label: String,
) -> Result<Vec<f64>> {
    let mut pooled = Vec::new();
    for ego in egos {
        let values = samples
            .get(ego)
            .ok_or_else(|| Error::MissingMetricValues(ego.clone()))?;
        if values.is_empty() {
            return Err(Error::MissingMetricValues(ego.clone()));
        }
        pooled.extend_from_slice(values);
    }
    if pooled.is_empty() {
        return Err(Error::EmptySubgroup(label));
    }
    Ok(pooled)
}

/// Pools each end group's per-ego metric values and compares the pools with
/// Kruskal-Wallis and Kolmogorov-Smirnov tests.
pub fn compare_subgroups(
    samples: &BTreeMap<EgoId, Vec<f64>>,
    partition: &SubgroupPartition,
) -> Result<SubgroupComparison> {
    let high = pooled_sample(samples, &partition.high, partition.group_label("high"))?;
    let low = pooled_sample(samples, &partition.low, partition.group_label("low"))?;
    Ok(SubgroupComparison {
        trait_name: partition.trait_name,
        high: descriptive(&high)?,
        low: descriptive(&low)?,
        kw: kruskal_wallis(&high, &low)?,
        ks: ks_two_sample(&high, &low)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn percentile_interpolates_linearly() {
        let sample: Vec<f64> = (1..=8).map(|x| x as f64).collect();
        assert_eq!(percentile(&sample, 0.25), 2.75);
        assert_eq!(percentile(&sample, 0.75), 6.25);
        assert_eq!(percentile(&sample, 0.0), 1.0);
        assert_eq!(percentile(&sample, 1.0), 8.0);

        let odd = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&odd, 0.5), 3.0);
        assert_eq!(percentile(&odd, 0.25), 2.0);
        assert_eq!(percentile(&odd, 0.75), 4.0);
    }

    #[test]
    fn descriptive_reports_quartiles() {
        let stats = descriptive(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(stats.n, 5);
        assert_eq!(stats.median, 3.0);
        assert_eq!(stats.q1, 2.0);
        assert_eq!(stats.q3, 4.0);
        assert!(descriptive(&[]).is_err());
    }

    fn profiles_with_openness(scores: &[f64]) -> BTreeMap<EgoId, TraitProfile> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &score)| {
                let ego = EgoId::new(format!("e{i:02}"));
                (
                    ego.clone(),
                    TraitProfile {
                        ego_id: ego,
                        extraversion: 40.0,
                        agreeableness: 40.0,
                        conscientiousness: 40.0,
                        emotional_stability: 40.0,
                        openness: score,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn split_puts_quartile_tails_into_end_groups() {
        let profiles = profiles_with_openness(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let split = percentile_split(&profiles, TraitName::Openness, 0.25, 0.75).unwrap();
        assert_eq!(split.low_cut, 2.75);
        assert_eq!(split.high_cut, 6.25);
        assert!(!split.degenerate);
        let names = |set: &BTreeSet<EgoId>| -> Vec<String> {
            set.iter().map(|e| e.to_string()).collect()
        };
        assert_eq!(names(&split.low), ["e00", "e01"]);
        assert_eq!(names(&split.high), ["e06", "e07"]);
        assert_eq!(split.middle.len(), 4);
    }

    #[test]
    fn split_flags_overlapping_cuts() {
        let profiles = profiles_with_openness(&[5.0; 8]);
        let split = percentile_split(&profiles, TraitName::Openness, 0.25, 0.75).unwrap();
        assert!(split.degenerate);
        assert_eq!(split.low.len(), 8);
        assert_eq!(split.high.len(), 8);
    }

    #[test]
    fn split_needs_at_least_four_profiles() {
        let profiles = profiles_with_openness(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            percentile_split(&profiles, TraitName::Openness, 0.25, 0.75),
            Err(Error::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn comparison_pools_per_ego_values() {
        let profiles =
            profiles_with_openness(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let split = percentile_split(&profiles, TraitName::Openness, 0.25, 0.75).unwrap();
        let samples: BTreeMap<EgoId, Vec<f64>> = profiles
            .values()
            .map(|p| (p.ego_id.clone(), vec![p.openness, p.openness + 0.5]))
            .collect();
        let cmp = compare_subgroups(&samples, &split).unwrap();
        assert_eq!(cmp.high.n, split.high.len() * 2);
        assert_eq!(cmp.low.n, split.low.len() * 2);
        // End groups are far apart, so both tests should find a difference.
        assert!(cmp.kw.p_value < 0.05);
        assert!(cmp.high.median > cmp.low.median);
    }

    #[test]
    fn comparison_requires_values_for_every_end_group_ego() {
        let profiles = profiles_with_openness(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let split = percentile_split(&profiles, TraitName::Openness, 0.25, 0.75).unwrap();
        let mut samples: BTreeMap<EgoId, Vec<f64>> = profiles
            .values()
            .map(|p| (p.ego_id.clone(), vec![p.openness]))
            .collect();
        samples.remove(&EgoId::new("e07"));
        assert!(matches!(
            compare_subgroups(&samples, &split),
            Err(Error::MissingMetricValues(_))
        ));
    }

    proptest! {
        #[test]
        fn percentile_stays_within_sample_range(
            sample in proptest::collection::vec(-100.0..100.0f64, 1..40),
            q in 0.0..=1.0f64,
        ) {
            let value = percentile(&sample, q);
            let min = sample.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(value >= min && value <= max);
        }

        #[test]
        fn percentile_is_monotone_in_q(
            sample in proptest::collection::vec(-100.0..100.0f64, 2..40),
            q1 in 0.0..=1.0f64,
            q2 in 0.0..=1.0f64,
        ) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(percentile(&sample, lo) <= percentile(&sample, hi) + 1e-12);
        }

        #[test]
        fn non_degenerate_splits_cover_and_stay_disjoint(
            scores in proptest::collection::vec(15.0..70.0f64, 8..60),
        ) {
            let profiles = profiles_with_openness(&scores);
            let split =
                percentile_split(&profiles, TraitName::Openness, 0.25, 0.75).unwrap();
            prop_assume!(!split.degenerate);
            let total = split.low.len() + split.middle.len() + split.high.len();
            prop_assert_eq!(total, profiles.len());
            prop_assert!(split.low.intersection(&split.high).next().is_none());
            prop_assert!(split.low.intersection(&split.middle).next().is_none());
            prop_assert!(split.middle.intersection(&split.high).next().is_none());
            // Each end group captures at least a quarter-ish tail.
            prop_assert!(!split.low.is_empty());
            prop_assert!(!split.high.is_empty());
        }
    }
}
