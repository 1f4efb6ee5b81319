//! Social signatures and the Jensen-Shannon divergence between them.
//!
//! A signature is the rank-ordered list of call fractions an ego directs at
//! its alters within one interval: rank 1 is the most-called alter. Distances
//! between signatures use natural-log JSD, so values live in `[0, ln 2]`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{AlterId, EgoId, EgoIntervalNetwork, IntervalPair, Networks};

/// Upper bound of the Jensen-Shannon divergence under natural log.
pub const JSD_MAX: f64 = std::f64::consts::LN_2;

/// Rank-ordered call fractions of one ego in one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialSignature {
    pub ego_id: EgoId,
    pub interval_index: u32,
    fractions: Vec<f64>,
    alter_order: Vec<AlterId>,
}

impl SocialSignature {
    /// Builds a signature from already rank-ordered fractions. They must be
    /// positive, non-increasing, and sum to 1 within `1e-6`.
    pub fn from_fractions(ego_id: EgoId, interval_index: u32, fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::NotADistribution {
                reason: "no fractions".to_owned(),
            });
        }
        if fractions.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::NotADistribution {
                reason: "fractions must be positive".to_owned(),
            });
        }
        if fractions.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotADistribution {
                reason: "fractions must be non-increasing".to_owned(),
            });
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::NotADistribution {
                reason: format!("fractions sum to {sum}, not 1"),
            });
        }
        Ok(SocialSignature {
            ego_id,
            interval_index,
            fractions,
            alter_order: Vec::new(),
        })
    }

    /// Fraction of calls per rank, starting at rank 1.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Alters in rank order. Empty when the signature was built from bare
    /// fractions.
    pub fn alter_order(&self) -> &[AlterId] {
        &self.alter_order
    }

    /// Number of ranks (distinct alters).
    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }
}

/// Ranks a network's alters by call count (ties broken by alter id) and
/// normalizes the counts into fractions.
pub fn build_signature(network: &EgoIntervalNetwork) -> Result<SocialSignature> {
    if network.call_counts.is_empty() {
        return Err(Error::EmptyNetwork(network.ego_id.clone()));
    }
    let mut ranked: Vec<(&AlterId, u64)> = network
        .call_counts
        .iter()
        .map(|(alter, &count)| (alter, count))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let total = network.total_calls() as f64;
    let fractions = ranked.iter().map(|&(_, count)| count as f64 / total).collect();
    let alter_order = ranked.into_iter().map(|(alter, _)| alter.clone()).collect();
    Ok(SocialSignature {
        ego_id: network.ego_id.clone(),
        interval_index: network.interval_index,
        fractions,
        alter_order,
    })
}

/// Shannon entropy in nats, with `0 ln 0 = 0`. The input must be a
/// distribution: non-negative entries summing to 1 within `1e-6`.
pub fn shannon_entropy(fractions: &[f64]) -> Result<f64> {
    validate_distribution(fractions)?;
    Ok(entropy_unchecked(fractions))
}

fn validate_distribution(fractions: &[f64]) -> Result<()> {
    if fractions.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::NotADistribution {
            reason: "entries must be finite and non-negative".to_owned(),
        });
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::NotADistribution {
            reason: format!("entries sum to {sum}, not 1"),
        });
    }
    Ok(())
}

fn entropy_unchecked(fractions: &[f64]) -> f64 {
    fractions
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

/// Jensen-Shannon divergence between two signatures. The shorter fraction
/// vector is zero-padded so ranks line up. Identical signatures give exactly
/// zero; the result never leaves `[0, ln 2]`.
pub fn jsd(a: &SocialSignature, b: &SocialSignature) -> f64 {
    jsd_fractions(&a.fractions, &b.fractions)
}

/// JSD between two general probability vectors, zero-padded to a common
/// length. Unlike signatures, the inputs may hold zeros anywhere, so fully
/// disjoint supports (divergence exactly ln 2) are expressible.
pub fn jsd_distributions(p: &[f64], q: &[f64]) -> Result<f64> {
    validate_distribution(p)?;
    validate_distribution(q)?;
    Ok(jsd_fractions(p, q))
}

fn jsd_fractions(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |xs: &[f64], i: usize| xs.get(i).copied().unwrap_or(0.0);
    let mixture: Vec<f64> = (0..len).map(|i| (at(p, i) + at(q, i)) / 2.0).collect();
    let value = entropy_unchecked(&mixture)
        - (entropy_unchecked(p) + entropy_unchecked(q)) / 2.0;
    value.clamp(0.0, JSD_MAX)
}

/// All signatures of the retained egos, keyed by ego and interval index.
pub type Signatures = BTreeMap<(EgoId, u32), SocialSignature>;

/// Builds signatures for every retained ego in every interval `1..=n`.
pub fn build_signatures(
    networks: &Networks,
    retained: &BTreeSet<EgoId>,
    n_intervals: u32,
) -> Result<Signatures> {
    let mut signatures = Signatures::new();
    for ego in retained {
        for interval in 1..=n_intervals {
            let network = networks.get(ego, interval).ok_or_else(|| Error::MissingNetwork {
                ego: ego.clone(),
                interval,
            })?;
            signatures.insert((ego.clone(), interval), build_signature(network)?);
        }
    }
    Ok(signatures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    SelfDistance,
    Reference,
}

impl DistanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::SelfDistance => "self",
            DistanceKind::Reference => "reference",
        }
    }
}

/// One signature-to-signature distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRecord {
    pub ego_id: EgoId,
    pub kind: DistanceKind,
    pub pair: IntervalPair,
    /// The other ego for reference distances; absent for self-distances.
    pub counterpart: Option<EgoId>,
    pub value: f64,
}

/// How reference distances pair up intervals across egos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    /// Ego `i` at interval `t` against ego `j` at interval `t+1`.
    #[default]
    CrossInterval,
    /// Ego `i` against ego `j` within the same interval.
    SameInterval,
}

fn signature_of<'a>(
    signatures: &'a Signatures,
    ego: &EgoId,
    interval: u32,
) -> Result<&'a SocialSignature> {
    signatures
        .get(&(ego.clone(), interval))
        .ok_or_else(|| Error::MissingSignature {
            ego: ego.clone(),
            interval,
        })
}

/// Each ego's JSD between its own signatures in consecutive intervals.
pub fn self_distances(
    signatures: &Signatures,
    retained: &BTreeSet<EgoId>,
    n_intervals: u32,
) -> Result<Vec<DistanceRecord>> {
    let mut records = Vec::new();
    for ego in retained {
        for t in 1..n_intervals {
            let a = signature_of(signatures, ego, t)?;
            let b = signature_of(signatures, ego, t + 1)?;
            records.push(DistanceRecord {
                ego_id: ego.clone(),
                kind: DistanceKind::SelfDistance,
                pair: IntervalPair::new(t, t + 1),
                counterpart: None,
                value: jsd(a, b),
            });
        }
    }
    Ok(records)
}

/// JSD between different egos' signatures, for every ordered ego pair.
///
/// Cross-interval mode compares ego `i` at `t` with ego `j` at `t+1`, mirroring
/// the interval shift of a self-distance; same-interval mode compares within
/// each interval. Output order is deterministic regardless of thread count.
pub fn reference_distances(
    signatures: &Signatures,
    retained: &BTreeSet<EgoId>,
    n_intervals: u32,
    mode: ReferenceMode,
) -> Result<Vec<DistanceRecord>> {
    let egos: Vec<&EgoId> = retained.iter().collect();
    let per_ego: Vec<Result<Vec<DistanceRecord>>> = egos
        .par_iter()
        .map(|ego| {
            let mut records = Vec::new();
            for other in &egos {
                if *other == *ego {
                    continue;
                }
                match mode {
                    ReferenceMode::CrossInterval => {
                        for t in 1..n_intervals {
                            let a = signature_of(signatures, ego, t)?;
                            let b = signature_of(signatures, other, t + 1)?;
                            records.push(DistanceRecord {
                                ego_id: (*ego).clone(),
                                kind: DistanceKind::Reference,
                                pair: IntervalPair::new(t, t + 1),
                                counterpart: Some((*other).clone()),
                                value: jsd(a, b),
                            });
                        }
                    }
                    ReferenceMode::SameInterval => {
                        for t in 1..=n_intervals {
                            let a = signature_of(signatures, ego, t)?;
                            let b = signature_of(signatures, other, t)?;
                            records.push(DistanceRecord {
                                ego_id: (*ego).clone(),
                                kind: DistanceKind::Reference,
                                pair: IntervalPair::new(t, t),
                                counterpart: Some((*other).clone()),
                                value: jsd(a, b),
                            });
                        }
                    }
                }
            }
            Ok(records)
        })
        .collect();

    let mut records = Vec::new();
    for chunk in per_ego {
        records.extend(chunk?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn network(ego: &str, interval: u32, counts: &[(&str, u64)]) -> EgoIntervalNetwork {
        EgoIntervalNetwork {
            ego_id: EgoId::new(ego),
            interval_index: interval,
            call_counts: counts
                .iter()
                .map(|&(alter, count)| (AlterId::new(alter), count))
                .collect(),
        }
    }

    fn signature(fractions: &[f64]) -> SocialSignature {
        SocialSignature::from_fractions(EgoId::new("x"), 1, fractions.to_vec()).unwrap()
    }

    #[test]
    fn signature_ranks_by_count_then_alter_id() {
        let sig = build_signature(&network("e", 1, &[("c", 1), ("a", 6), ("b", 3)])).unwrap();
        assert_eq!(sig.fractions(), &[0.6, 0.3, 0.1]);
        assert_eq!(
            sig.alter_order(),
            &[AlterId::new("a"), AlterId::new("b"), AlterId::new("c")]
        );

        let tied = build_signature(&network("e", 1, &[("b", 5), ("a", 5)])).unwrap();
        assert_eq!(tied.alter_order(), &[AlterId::new("a"), AlterId::new("b")]);
        assert_eq!(tied.fractions(), &[0.5, 0.5]);
    }

    #[test]
    fn empty_network_has_no_signature() {
        assert!(matches!(
            build_signature(&network("e", 1, &[])),
            Err(Error::EmptyNetwork(_))
        ));
    }

    #[test]
    fn entropy_of_uniform_and_point_mass() {
        let uniform = [0.25; 4];
        let h = shannon_entropy(&uniform).unwrap();
        assert!((h - 4.0_f64.ln()).abs() < 1e-12);
        assert_eq!(shannon_entropy(&[1.0]).unwrap(), 0.0);

        let skewed = shannon_entropy(&[0.5, 0.25, 0.25]).unwrap();
        assert!((skewed - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_non_distributions() {
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
        assert!(shannon_entropy(&[-0.1, 1.1]).is_err());
        assert!(shannon_entropy(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn jsd_of_identical_signatures_is_exactly_zero() {
        let sig = signature(&[0.5, 0.3, 0.2]);
        assert_eq!(jsd(&sig, &sig), 0.0);
        let copy = signature(&[0.5, 0.3, 0.2]);
        assert_eq!(jsd(&sig, &copy), 0.0);
    }

    #[test]
    fn jsd_pads_the_shorter_signature() {
        // (0.5, 0.5) vs (1.0): mixture (0.75, 0.25), value -0.75 ln 0.75.
        let a = signature(&[0.5, 0.5]);
        let b = signature(&[1.0]);
        let expected = 0.215_761_554_338_836;
        assert!((jsd(&a, &b) - expected).abs() < 1e-12);
        assert_eq!(jsd(&a, &b), jsd(&b, &a));
    }

    #[test]
    fn jsd_against_vanishing_tail_approaches_zero() {
        let a = signature(&[1.0]);
        let eps = 1e-12;
        let b = signature(&[1.0 - eps, eps]);
        let d = jsd(&a, &b);
        assert!(d >= 0.0 && d < 1e-9);
    }

    #[test]
    fn jsd_distributions_accepts_zeros_and_maxes_out_when_disjoint() {
        let d = jsd_distributions(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.25, 0.75]).unwrap();
        assert!((d - JSD_MAX).abs() < 1e-12);
        assert_eq!(jsd_distributions(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!(jsd_distributions(&[0.5, 0.4], &[1.0]).is_err());
        assert!(jsd_distributions(&[1.0], &[0.5, -0.5, 1.0]).is_err());
    }

    fn toy_signatures() -> (Signatures, BTreeSet<EgoId>) {
        let mut signatures = Signatures::new();
        let egos: BTreeSet<EgoId> = ["e1", "e2", "e3"].iter().map(|&e| EgoId::new(e)).collect();
        for (i, ego) in egos.iter().enumerate() {
            for t in 1..=3u32 {
                let bias = 0.5 + 0.1 * i as f64 + 0.05 * (t - 1) as f64;
                let sig = SocialSignature::from_fractions(
                    ego.clone(),
                    t,
                    vec![bias, 1.0 - bias],
                )
                .unwrap();
                signatures.insert((ego.clone(), t), sig);
            }
        }
        (signatures, egos)
    }

    #[test]
    fn self_distances_cover_consecutive_pairs() {
        let (signatures, egos) = toy_signatures();
        let records = self_distances(&signatures, &egos, 3).unwrap();
        assert_eq!(records.len(), 3 * 2);
        for rec in &records {
            assert_eq!(rec.kind, DistanceKind::SelfDistance);
            assert_eq!(rec.pair.to, rec.pair.from + 1);
            assert!(rec.counterpart.is_none());
            let a = &signatures[&(rec.ego_id.clone(), rec.pair.from)];
            let b = &signatures[&(rec.ego_id.clone(), rec.pair.to)];
            assert_eq!(rec.value, jsd(a, b));
        }
    }

    #[test]
    fn missing_signature_is_reported_with_ego_and_interval() {
        let (mut signatures, egos) = toy_signatures();
        signatures.remove(&(EgoId::new("e2"), 2));
        match self_distances(&signatures, &egos, 3) {
            Err(Error::MissingSignature { ego, interval }) => {
                assert_eq!(ego, EgoId::new("e2"));
                assert_eq!(interval, 2);
            }
            other => panic!("expected MissingSignature, got {other:?}"),
        }
    }

    #[test]
    fn reference_distances_pair_distinct_egos_across_intervals() {
        let (signatures, egos) = toy_signatures();
        let records =
            reference_distances(&signatures, &egos, 3, ReferenceMode::CrossInterval).unwrap();
        // 3 egos, 2 counterparts each, 2 interval pairs.
        assert_eq!(records.len(), 3 * 2 * 2);
        for rec in &records {
            let other = rec.counterpart.as_ref().unwrap();
            assert_ne!(&rec.ego_id, other);
            assert_eq!(rec.pair.to, rec.pair.from + 1);
            let a = &signatures[&(rec.ego_id.clone(), rec.pair.from)];
            let b = &signatures[&(other.clone(), rec.pair.to)];
            assert_eq!(rec.value, jsd(a, b));
        }
    }

    #[test]
    fn same_interval_mode_compares_within_each_interval() {
        let (signatures, egos) = toy_signatures();
        let records =
            reference_distances(&signatures, &egos, 3, ReferenceMode::SameInterval).unwrap();
        assert_eq!(records.len(), 3 * 2 * 3);
        assert!(records.iter().all(|rec| rec.pair.from == rec.pair.to));
    }

    fn arb_fractions() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.05..1.0_f64, 1..8).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            let mut fractions: Vec<f64> = raw.into_iter().map(|x| x / total).collect();
            fractions.sort_by(|a, b| b.partial_cmp(a).unwrap());
            fractions
        })
    }

    proptest! {
        #[test]
        fn jsd_is_symmetric_and_bounded(p in arb_fractions(), q in arb_fractions()) {
            let a = signature(&p);
            let b = signature(&q);
            let d_ab = jsd(&a, &b);
            let d_ba = jsd(&b, &a);
            prop_assert_eq!(d_ab.to_bits(), d_ba.to_bits());
            prop_assert!((0.0..=JSD_MAX).contains(&d_ab));
        }

        #[test]
        fn jsd_of_any_signature_with_itself_is_zero(p in arb_fractions()) {
            let a = signature(&p);
            prop_assert_eq!(jsd(&a, &a), 0.0);
        }

        #[test]
        fn entropy_never_exceeds_log_support(p in arb_fractions()) {
            let h = shannon_entropy(&p).unwrap();
            prop_assert!(h >= -1e-12);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-9);
        }
    }
}
