//! Seeded synthetic call-record generator with known ground truth.
//!
//! Each ego gets a fixed set of rank slots whose weights decay as a power
//! law. Per interval, slot occupants may be replaced (churn), slot weights
//! may be jittered (rank noise), and calls are allocated to slots by
//! repeated categorical draws. Trait scores can shift an ego's churn and
//! noise, planting subgroup effects the analysis pipeline should recover.
//!
//! Every random decision comes from its own sub-stream keyed by
//! `(seed, ego, purpose)`, so output is byte-stable regardless of thread
//! count, and the call-allocation stream restarts identically each interval.
//! With churn and noise both zero an ego therefore repeats the exact same
//! interval, giving self-distance 0 and Jaccard 1.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{build_networks, partition_intervals, retain_active_egos, IntervalLength};
use crate::metrics::{metric_samples, MetricKind};
use crate::stats::{compare_subgroups, percentile_split, TestResult};
use crate::types::{
    AlterId, CallRecord, Direction, EgoId, IntervalSpec, TraitName, TraitProfile,
    TRAIT_SCALE_MAX, TRAIT_SCALE_MIN,
};

/// First instant of the default synthetic study window.
pub fn default_study_start() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2013-10-01T00:00:00Z")
        .expect("valid constant")
        .with_timezone(&Utc)
}

/// Days per synthetic interval, matching the analysis default.
pub const SYNTH_INTERVAL_DAYS: u32 = 153;

/// How one trait bends an ego's behavior. Scores are first centered and
/// scaled to `[-0.5, 0.5]`, then multiplied by these slopes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraitEffect {
    #[serde(default)]
    pub churn_slope: f64,
    #[serde(default)]
    pub noise_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_egos: usize,
    pub n_intervals: u32,
    /// Poisson mean of calls per ego per interval (drawn once per ego).
    pub calls_per_ego: f64,
    /// Poisson mean of rank slots per ego (drawn once per ego).
    pub network_size: f64,
    /// Alters each ego can ever call; must cover `network_size`.
    pub alter_pool_size: usize,
    /// Power-law exponent of slot weights: slot `r` weighs `r^-exponent`.
    pub signature_exponent: f64,
    /// Baseline probability that a slot's occupant is replaced between
    /// intervals.
    pub churn_prob: f64,
    /// Baseline log-normal jitter applied to slot weights each interval.
    pub rank_noise: f64,
    #[serde(default)]
    pub trait_effects: BTreeMap<TraitName, TraitEffect>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 42,
            n_egos: 100,
            n_intervals: 3,
            calls_per_ego: 250.0,
            network_size: 30.0,
            alter_pool_size: 120,
            signature_exponent: 1.0,
            churn_prob: 0.3,
            rank_noise: 0.1,
            trait_effects: BTreeMap::new(),
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InfeasibleConfig(msg.to_owned()));
        if self.n_egos == 0 {
            return bad("n_egos must be at least 1");
        }
        if self.n_intervals < 2 {
            return bad("n_intervals must be at least 2");
        }
        if !(self.calls_per_ego > 0.0) {
            return bad("calls_per_ego must be positive");
        }
        if !(self.network_size > 0.0) {
            return bad("network_size must be positive");
        }
        if self.alter_pool_size == 0 {
            return bad("alter_pool_size must be at least 1");
        }
        if self.network_size > self.alter_pool_size as f64 {
            return bad("network_size exceeds alter_pool_size");
        }
        if !(self.signature_exponent > 0.0) {
            return bad("signature_exponent must be positive");
        }
        if !(0.0..=1.0).contains(&self.churn_prob) {
            return bad("churn_prob must be within [0, 1]");
        }
        if !(self.rank_noise >= 0.0) {
            return bad("rank_noise must be non-negative");
        }
        for effect in self.trait_effects.values() {
            if !effect.churn_slope.is_finite() || !effect.noise_slope.is_finite() {
                return bad("trait effect slopes must be finite");
            }
        }
        Ok(())
    }
}

/// The parameters one ego actually ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoGroundTruth {
    pub ego_id: EgoId,
    pub churn: f64,
    pub noise: f64,
    pub n_calls: u64,
    pub n_slots: usize,
    pub scores: BTreeMap<TraitName, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub egos: Vec<EgoGroundTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub records: Vec<CallRecord>,
    pub profiles: Vec<TraitProfile>,
    pub manifest: GroundTruthManifest,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one `(seed, ego, purpose)` triple.
fn stream(seed: u64, ego_index: u64, purpose: &str) -> ChaCha12Rng {
    let mut state = splitmix(seed);
    state = splitmix(state ^ ego_index);
    for &byte in purpose.as_bytes() {
        state = splitmix(state ^ u64::from(byte));
    }
    ChaCha12Rng::seed_from_u64(state)
}

/// Centers a questionnaire score onto `[-0.5, 0.5]`.
fn z_score(score: f64) -> f64 {
    (score - (TRAIT_SCALE_MIN + TRAIT_SCALE_MAX) / 2.0) / (TRAIT_SCALE_MAX - TRAIT_SCALE_MIN)
}

fn ego_label(index: usize) -> EgoId {
    EgoId::new(format!("e{index:04}"))
}

fn alter_label(ego_index: usize, pool_index: usize) -> AlterId {
    AlterId::new(format!("e{ego_index:04}x{pool_index:04}"))
}

struct EgoData {
    records: Vec<CallRecord>,
    profile: TraitProfile,
    truth: EgoGroundTruth,
}

fn generate_ego(config: &GeneratorConfig, index: usize, intervals: &[IntervalSpec]) -> EgoData {
    let ego_id = ego_label(index);
    let mut rng_ego = stream(config.seed, index as u64, "ego");

    let mut scores = BTreeMap::new();
    for name in TraitName::ALL {
        scores.insert(name, rng_ego.gen_range(TRAIT_SCALE_MIN..TRAIT_SCALE_MAX));
    }
    let poisson_calls = Poisson::new(config.calls_per_ego).expect("validated mean");
    let n_calls = (poisson_calls.sample(&mut rng_ego) as u64).max(1);
    let poisson_slots = Poisson::new(config.network_size).expect("validated mean");
    let n_slots = (poisson_slots.sample(&mut rng_ego) as usize).clamp(1, config.alter_pool_size);

    let mut churn = config.churn_prob;
    let mut noise = config.rank_noise;
    for (name, effect) in &config.trait_effects {
        let z = z_score(scores[name]);
        churn += effect.churn_slope * z;
        noise += effect.noise_slope * z;
    }
    let churn = churn.clamp(0.0, 1.0);
    let noise = noise.max(0.0);

    let base_weights: Vec<f64> = (1..=n_slots)
        .map(|rank| (rank as f64).powf(-config.signature_exponent))
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut occupants: Vec<usize> = (0..n_slots).collect();
    let mut records = Vec::with_capacity(n_calls as usize * intervals.len());

    for interval in intervals {
        let t = interval.index;
        if t > 1 {
            // Two passes: survivors first, then replacements drawn from the
            // pool minus everyone already placed this interval. A dropped
            // occupant may re-enter at a different slot.
            let mut rng_churn = stream(config.seed, index as u64, &format!("churn_{t}"));
            let replace: Vec<bool> = (0..n_slots)
                .map(|_| rng_churn.gen::<f64>() < churn)
                .collect();
            let mut placed: BTreeSet<usize> = occupants
                .iter()
                .zip(&replace)
                .filter(|&(_, &r)| !r)
                .map(|(&occupant, _)| occupant)
                .collect();
            for slot in 0..n_slots {
                if !replace[slot] {
                    continue;
                }
                let old = occupants[slot];
                let candidates: Vec<usize> = (0..config.alter_pool_size)
                    .filter(|p| !placed.contains(p) && *p != old)
                    .collect();
                if let Some(&new) = candidates.get(rng_churn.gen_range(0..candidates.len().max(1)))
                {
                    occupants[slot] = new;
                }
                placed.insert(occupants[slot]);
            }
        }

        let mut rng_noise = stream(config.seed, index as u64, &format!("noise_{t}"));
        let weights: Vec<f64> = base_weights
            .iter()
            .map(|&w| w * (noise * normal.sample(&mut rng_noise)).exp())
            .collect();
        let mut cumulative = Vec::with_capacity(n_slots);
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        let total = acc;

        // Restarted identically every interval so that unchanged weights
        // reproduce the exact same allocation.
        let mut rng_alloc = stream(config.seed, index as u64, "alloc");
        let span_s = (interval.end - interval.start).num_seconds();
        for call in 0..n_calls {
            let u: f64 = rng_alloc.gen::<f64>() * total;
            let slot = cumulative.partition_point(|&c| c <= u).min(n_slots - 1);
            let offset = span_s * (call as i64 + 1) / (n_calls as i64 + 1);
            records.push(CallRecord {
                ego_id: ego_id.clone(),
                alter_id: alter_label(index, occupants[slot]),
                timestamp: interval.start + Duration::seconds(offset),
                direction: Direction::Outgoing,
                duration_s: Some(60),
            });
        }
    }

    let profile = TraitProfile {
        ego_id: ego_id.clone(),
        extraversion: scores[&TraitName::Extraversion],
        agreeableness: scores[&TraitName::Agreeableness],
        conscientiousness: scores[&TraitName::Conscientiousness],
        emotional_stability: scores[&TraitName::EmotionalStability],
        openness: scores[&TraitName::Openness],
    };
    EgoData {
        records,
        profile,
        truth: EgoGroundTruth {
            ego_id,
            churn,
            noise,
            n_calls,
            n_slots,
            scores,
        },
    }
}

/// Generates the full synthetic dataset described by `config`.
pub fn generate(config: &GeneratorConfig) -> Result<SynthOutput> {
    config.validate()?;
    let intervals = partition_intervals(
        default_study_start(),
        config.n_intervals,
        IntervalLength::Days(SYNTH_INTERVAL_DAYS),
    )?;

    let egos: Vec<EgoData> = (0..config.n_egos)
        .into_par_iter()
        .map(|index| generate_ego(config, index, &intervals))
        .collect();

    let mut records = Vec::new();
    let mut profiles = Vec::new();
    let mut truths = Vec::new();
    for ego in egos {
        records.extend(ego.records);
        profiles.push(ego.profile);
        truths.push(ego.truth);
    }
    Ok(SynthOutput {
        records,
        profiles,
        manifest: GroundTruthManifest {
            seed: config.seed,
            config: config.clone(),
            egos: truths,
        },
    })
}

/// Generates a dataset, runs it through the standard pipeline, and returns
/// the Kruskal-Wallis comparison of the high and low subgroups of
/// `trait_name` on `metric`.
pub fn effect_recovery_trial(
    config: &GeneratorConfig,
    metric: MetricKind,
    trait_name: TraitName,
    min_calls: u64,
    min_alters: usize,
) -> Result<TestResult> {
    let output = generate(config)?;
    let intervals = partition_intervals(
        default_study_start(),
        config.n_intervals,
        IntervalLength::Days(SYNTH_INTERVAL_DAYS),
    )?;
    let networks = build_networks(&output.records, &intervals);
    let retained = retain_active_egos(&networks, &intervals, min_calls, min_alters);

    let profiles: BTreeMap<EgoId, TraitProfile> = output
        .profiles
        .into_iter()
        .filter(|p| retained.contains(&p.ego_id))
        .map(|p| (p.ego_id.clone(), p))
        .collect();
    let partition = percentile_split(&profiles, trait_name, 0.25, 0.75)?;
    let samples = metric_samples(metric, &networks, &retained, config.n_intervals)?;
    Ok(compare_subgroups(&samples, &partition)?.kw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signatures::{build_signatures, jsd};
    use crate::turnover::jaccard;

    fn small_config() -> GeneratorConfig {
        GeneratorConfig {
            n_egos: 12,
            calls_per_ego: 120.0,
            network_size: 12.0,
            alter_pool_size: 60,
            ..GeneratorConfig::default()
        }
    }

    fn pipeline(output: &SynthOutput, n_intervals: u32) -> (crate::types::Networks, BTreeSet<EgoId>) {
        let intervals = partition_intervals(
            default_study_start(),
            n_intervals,
            IntervalLength::Days(SYNTH_INTERVAL_DAYS),
        )
        .unwrap();
        let networks = build_networks(&output.records, &intervals);
        let retained = retain_active_egos(&networks, &intervals, 0, 0);
        (networks, retained)
    }

    #[test]
    fn same_seed_reproduces_the_dataset() {
        let config = small_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.ego_id, y.ego_id);
            assert_eq!(x.alter_id, y.alter_id);
            assert_eq!(x.timestamp, y.timestamp);
        }
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&small_config()).unwrap();
        let b = generate(&GeneratorConfig {
            seed: 43,
            ..small_config()
        })
        .unwrap();
        let same = a
            .records
            .iter()
            .zip(&b.records)
            .all(|(x, y)| x.alter_id == y.alter_id);
        assert!(!same);
    }

    #[test]
    fn frozen_dynamics_repeat_each_interval_exactly() {
        let config = GeneratorConfig {
            churn_prob: 0.0,
            rank_noise: 0.0,
            ..small_config()
        };
        let output = generate(&config).unwrap();
        let (networks, retained) = pipeline(&output, config.n_intervals);
        assert!(!retained.is_empty());

        let signatures = build_signatures(&networks, &retained, config.n_intervals).unwrap();
        for ego in &retained {
            for t in 1..config.n_intervals {
                let a = &signatures[&(ego.clone(), t)];
                let b = &signatures[&(ego.clone(), t + 1)];
                assert_eq!(jsd(a, b), 0.0, "ego {ego} drifted between {t} and {}", t + 1);

                let set_a = networks.get(ego, t).unwrap().alter_set();
                let set_b = networks.get(ego, t + 1).unwrap().alter_set();
                assert_eq!(jaccard(&set_a, &set_b).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn full_churn_replaces_most_of_the_network() {
        let config = GeneratorConfig {
            churn_prob: 1.0,
            rank_noise: 0.0,
            ..small_config()
        };
        let output = generate(&config).unwrap();
        let (networks, retained) = pipeline(&output, config.n_intervals);
        let mut total = 0.0;
        let mut count = 0;
        for ego in &retained {
            for t in 1..config.n_intervals {
                let a = networks.get(ego, t).unwrap().alter_set();
                let b = networks.get(ego, t + 1).unwrap().alter_set();
                total += jaccard(&a, &b).unwrap();
                count += 1;
            }
        }
        assert!(total / (count as f64) < 0.3, "mean overlap too high");
    }

    #[test]
    fn rank_noise_raises_self_distance() {
        let quiet = GeneratorConfig {
            churn_prob: 0.0,
            rank_noise: 0.0,
            ..small_config()
        };
        let noisy = GeneratorConfig {
            churn_prob: 0.0,
            rank_noise: 0.4,
            ..small_config()
        };
        let mean_self = |config: &GeneratorConfig| {
            let output = generate(config).unwrap();
            let (networks, retained) = pipeline(&output, config.n_intervals);
            let signatures =
                build_signatures(&networks, &retained, config.n_intervals).unwrap();
            let mut total = 0.0;
            let mut count = 0;
            for ego in &retained {
                for t in 1..config.n_intervals {
                    total += jsd(
                        &signatures[&(ego.clone(), t)],
                        &signatures[&(ego.clone(), t + 1)],
                    );
                    count += 1;
                }
            }
            total / count as f64
        };
        let quiet_mean = mean_self(&quiet);
        let noisy_mean = mean_self(&noisy);
        assert_eq!(quiet_mean, 0.0);
        assert!(noisy_mean > 0.005, "noise had no effect: {noisy_mean}");
    }

    #[test]
    fn per_ego_call_volume_is_constant_across_intervals() {
        let config = small_config();
        let output = generate(&config).unwrap();
        let (networks, _) = pipeline(&output, config.n_intervals);
        let by_ego: BTreeSet<EgoId> = networks.egos();
        for ego in by_ego {
            let totals: Vec<u64> = (1..=config.n_intervals)
                .map(|t| networks.get(&ego, t).unwrap().total_calls())
                .collect();
            assert!(totals.windows(2).all(|w| w[0] == w[1]), "uneven volume: {totals:?}");
        }
    }

    #[test]
    fn records_and_manifest_respect_the_contract() {
        let config = small_config();
        let output = generate(&config).unwrap();
        let intervals = partition_intervals(
            default_study_start(),
            config.n_intervals,
            IntervalLength::Days(SYNTH_INTERVAL_DAYS),
        )
        .unwrap();
        let window_start = intervals.first().unwrap().start;
        let window_end = intervals.last().unwrap().end;
        for record in &output.records {
            assert_eq!(record.direction, Direction::Outgoing);
            assert!(record.timestamp >= window_start && record.timestamp < window_end);
            assert_ne!(record.ego_id.as_str(), record.alter_id.as_str());
        }
        assert_eq!(output.profiles.len(), config.n_egos);
        for profile in &output.profiles {
            for name in TraitName::ALL {
                let score = profile.score(name);
                assert!((TRAIT_SCALE_MIN..=TRAIT_SCALE_MAX).contains(&score));
            }
        }
        for truth in &output.manifest.egos {
            assert!((0.0..=1.0).contains(&truth.churn));
            assert!(truth.noise >= 0.0);
            assert!(truth.n_slots >= 1 && truth.n_slots <= config.alter_pool_size);
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let too_big = GeneratorConfig {
            network_size: 200.0,
            alter_pool_size: 120,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate(&too_big), Err(Error::InfeasibleConfig(_))));

        let bad_churn = GeneratorConfig {
            churn_prob: 1.5,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate(&bad_churn), Err(Error::InfeasibleConfig(_))));

        let one_interval = GeneratorConfig {
            n_intervals: 1,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate(&one_interval), Err(Error::InfeasibleConfig(_))));
    }

    #[test]
    fn planted_churn_effect_is_recovered() {
        let mut effects = BTreeMap::new();
        effects.insert(
            TraitName::Openness,
            TraitEffect {
                churn_slope: 0.6,
                noise_slope: 0.0,
            },
        );
        let config = GeneratorConfig {
            churn_prob: 0.35,
            rank_noise: 0.05,
            trait_effects: effects,
            ..GeneratorConfig::default()
        };
        let result =
            effect_recovery_trial(&config, MetricKind::Turnover, TraitName::Openness, 150, 20)
                .unwrap();
        assert!(
            result.p_value < 0.05,
            "planted effect not recovered: H = {}, p = {}",
            result.statistic,
            result.p_value
        );
    }
}
