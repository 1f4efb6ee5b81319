//! Rank-transition dynamics: where each alter of an ego moves in the rank
//! ordering between consecutive intervals.
//!
//! A transition matrix is a `(max_rank + 2)²` grid. Rows are the alter's
//! position in the earlier interval: ranks `1..=max_rank`, then `i` (present
//! but beyond the last tracked rank), then `in` (not in the network at all).
//! Columns describe the later interval the same way, labeled `o` and `on`.
//! Every alter seen in either interval contributes exactly one event, so the
//! `(in, on)` cell is structurally zero.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::SubgroupPartition;
use crate::types::{AlterId, EgoId, EgoIntervalNetwork, IntervalPair, Networks};

/// Deepest rank tracked individually; alters below it fall into the overflow
/// band.
pub const DEFAULT_MAX_RANK: usize = 20;

/// Where an alter sits relative to one interval's rank ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankState {
    /// Ranked `1..=max_rank`.
    Ranked(usize),
    /// In the network, but ranked deeper than `max_rank`.
    Beyond,
    /// Not in the network this interval.
    Absent,
}

impl RankState {
    fn index(self, max_rank: usize) -> usize {
        match self {
            RankState::Ranked(r) => {
                debug_assert!(r >= 1 && r <= max_rank);
                r - 1
            }
            RankState::Beyond => max_rank,
            RankState::Absent => max_rank + 1,
        }
    }

    /// Label for the source (row) axis.
    pub fn row_label(self) -> String {
        match self {
            RankState::Ranked(r) => r.to_string(),
            RankState::Beyond => "i".to_owned(),
            RankState::Absent => "in".to_owned(),
        }
    }

    /// Label for the destination (column) axis.
    pub fn col_label(self) -> String {
        match self {
            RankState::Ranked(r) => r.to_string(),
            RankState::Beyond => "o".to_owned(),
            RankState::Absent => "on".to_owned(),
        }
    }
}

/// All states in grid order for a given `max_rank`.
pub fn states(max_rank: usize) -> Vec<RankState> {
    (1..=max_rank)
        .map(RankState::Ranked)
        .chain([RankState::Beyond, RankState::Absent])
        .collect()
}

/// Event counts for one ego over one consecutive interval pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub ego_id: EgoId,
    pub pair: IntervalPair,
    max_rank: usize,
    counts: Vec<u64>,
}

impl TransitionMatrix {
    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    fn dim(&self) -> usize {
        self.max_rank + 2
    }

    pub fn count(&self, row: RankState, col: RankState) -> u64 {
        self.counts[row.index(self.max_rank) * self.dim() + col.index(self.max_rank)]
    }

    /// Total number of events: the size of the two alter sets' union.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, row: RankState) -> u64 {
        let base = row.index(self.max_rank) * self.dim();
        self.counts[base..base + self.dim()].iter().sum()
    }

    pub fn col_sum(&self, col: RankState) -> u64 {
        let offset = col.index(self.max_rank);
        self.counts.iter().skip(offset).step_by(self.dim()).sum()
    }
}

/// Alter ranks of one network: count-descending, ties broken by alter id.
fn rank_map(network: &EgoIntervalNetwork) -> BTreeMap<&AlterId, usize> {
    let mut ranked: Vec<(&AlterId, u64)> = network
        .call_counts
        .iter()
        .map(|(alter, &count)| (alter, count))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .enumerate()
        .map(|(position, (alter, _))| (alter, position + 1))
        .collect()
}

fn state_of(rank: Option<usize>, max_rank: usize) -> RankState {
    match rank {
        Some(r) if r <= max_rank => RankState::Ranked(r),
        Some(_) => RankState::Beyond,
        None => RankState::Absent,
    }
}

/// Counts one rank-movement event per alter in the union of the two
/// intervals' networks. Both networks must belong to the same ego.
pub fn transition_matrix(
    earlier: &EgoIntervalNetwork,
    later: &EgoIntervalNetwork,
    max_rank: usize,
) -> Result<TransitionMatrix> {
    if earlier.ego_id != later.ego_id {
        return Err(Error::EgoMismatch {
            a: earlier.ego_id.clone(),
            b: later.ego_id.clone(),
        });
    }
    let dim = max_rank + 2;
    let mut counts = vec![0u64; dim * dim];
    let ranks_earlier = rank_map(earlier);
    let ranks_later = rank_map(later);

    let union: BTreeSet<&AlterId> = earlier
        .call_counts
        .keys()
        .chain(later.call_counts.keys())
        .collect();
    for alter in union {
        let row = state_of(ranks_earlier.get(alter).copied(), max_rank);
        let col = state_of(ranks_later.get(alter).copied(), max_rank);
        counts[row.index(max_rank) * dim + col.index(max_rank)] += 1;
    }
    Ok(TransitionMatrix {
        ego_id: earlier.ego_id.clone(),
        pair: IntervalPair::new(earlier.interval_index, later.interval_index),
        max_rank,
        counts,
    })
}

/// Transition matrices of every listed ego over every consecutive interval
/// pair, ordered by ego and then pair.
pub fn ego_transition_matrices(
    networks: &Networks,
    egos: &BTreeSet<EgoId>,
    n_intervals: u32,
    max_rank: usize,
) -> Result<Vec<TransitionMatrix>> {
    let egos: Vec<&EgoId> = egos.iter().collect();
    let per_ego: Vec<Result<Vec<TransitionMatrix>>> = egos
        .par_iter()
        .map(|ego| {
            let mut matrices = Vec::new();
            for t in 1..n_intervals {
                let fetch = |interval: u32| {
                    networks
                        .get(ego, interval)
                        .ok_or_else(|| Error::MissingNetwork {
                            ego: (*ego).clone(),
                            interval,
                        })
                };
                matrices.push(transition_matrix(fetch(t)?, fetch(t + 1)?, max_rank)?);
            }
            Ok(matrices)
        })
        .collect();

    let mut matrices = Vec::new();
    for chunk in per_ego {
        matrices.extend(chunk?);
    }
    Ok(matrices)
}

/// What the elementwise sum of event counts is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizerMode {
    /// Number of (ego, interval-pair) matrices summed.
    #[default]
    PerMatrix,
    /// Number of distinct egos contributing.
    PerEgo,
}

/// Mean transition matrix of a set of egos.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMatrix {
    pub label: String,
    max_rank: usize,
    values: Vec<f64>,
    pub n_matrices: usize,
    pub n_egos: usize,
}

impl AggregateMatrix {
    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    fn dim(&self) -> usize {
        self.max_rank + 2
    }

    pub fn value(&self, row: RankState, col: RankState) -> f64 {
        self.values[row.index(self.max_rank) * self.dim() + col.index(self.max_rank)]
    }
}

/// Sums event counts elementwise (in integers) and divides once by the
/// chosen normalizer.
pub fn aggregate(
    matrices: &[TransitionMatrix],
    label: &str,
    normalizer: NormalizerMode,
) -> Result<AggregateMatrix> {
    let Some(first) = matrices.first() else {
        return Err(Error::NoMatrices);
    };
    let max_rank = first.max_rank;
    let dim = max_rank + 2;
    let mut sums = vec![0u64; dim * dim];
    let mut egos = BTreeSet::new();
    for matrix in matrices {
        if matrix.max_rank != max_rank {
            return Err(Error::MaxRankMismatch {
                a: max_rank,
                b: matrix.max_rank,
            });
        }
        egos.insert(matrix.ego_id.clone());
        for (slot, &count) in sums.iter_mut().zip(&matrix.counts) {
            *slot += count;
        }
    }
    let divisor = match normalizer {
        NormalizerMode::PerMatrix => matrices.len(),
        NormalizerMode::PerEgo => egos.len(),
    } as f64;
    Ok(AggregateMatrix {
        label: label.to_owned(),
        max_rank,
        values: sums.into_iter().map(|sum| sum as f64 / divisor).collect(),
        n_matrices: matrices.len(),
        n_egos: egos.len(),
    })
}

/// Mean absolute rank displacement over the ranked block only:
/// `C = (1/n) Σ_{i,j ≤ n} B[i][j] · |i - j|`. The overflow and absence
/// bands do not contribute. Higher values mean more rank churn.
pub fn stability(matrix: &AggregateMatrix, n: usize) -> f64 {
    assert!(n >= 1 && n <= matrix.max_rank, "n must be within the ranked block");
    let mut sum = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            sum += matrix.value(RankState::Ranked(i), RankState::Ranked(j))
                * (i as f64 - j as f64).abs();
        }
    }
    sum / n as f64
}

/// Aggregate matrix and stability of one trait subgroup.
#[derive(Debug, Clone)]
pub struct SubgroupRankReport {
    pub label: String,
    pub matrix: AggregateMatrix,
    pub stability: f64,
}

/// Aggregates rank transitions separately for the low, middle, and high
/// subgroups of a trait partition.
pub fn subgroup_rank_report(
    networks: &Networks,
    partition: &SubgroupPartition,
    n_intervals: u32,
    max_rank: usize,
    normalizer: NormalizerMode,
) -> Result<Vec<SubgroupRankReport>> {
    let groups = [
        ("low", &partition.low),
        ("middle", &partition.middle),
        ("high", &partition.high),
    ];
    let mut reports = Vec::new();
    for (group, egos) in groups {
        let label = format!("{}_{}", partition.trait_name, group);
        if egos.is_empty() {
            return Err(Error::EmptySubgroup(label));
        }
        let matrices = ego_transition_matrices(networks, egos, n_intervals, max_rank)?;
        let matrix = aggregate(&matrices, &label, normalizer)?;
        let stability = stability(&matrix, max_rank);
        reports.push(SubgroupRankReport {
            label,
            matrix,
            stability,
        });
    }
    Ok(reports)
}

/// One `(source rank, destination rank)` point per event within the ranked
/// block, with multiplicity. Feed these to a 2D density estimate.
pub fn rank_transition_points(matrices: &[TransitionMatrix]) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for matrix in matrices {
        for i in 1..=matrix.max_rank {
            for j in 1..=matrix.max_rank {
                let count = matrix.count(RankState::Ranked(i), RankState::Ranked(j));
                for _ in 0..count {
                    points.push((i as f64, j as f64));
                }
            }
        }
    }
    points
}
