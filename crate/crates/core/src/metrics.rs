//! Per-ego metric samples: the values pooled by subgroup when comparing
//! trait groups.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::Result;
use crate::signatures::{build_signatures, jsd, Signatures};
use crate::turnover::turnover_series;
use crate::types::{EgoId, Networks};

/// A per-ego scalar series the subgroup comparison can pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    /// Self-distance between consecutive signatures (lower = more
    /// persistent).
    Persistence,
    /// Jaccard similarity of consecutive alter sets (higher = less
    /// turnover).
    Turnover,
    /// Network size per interval.
    NetSize,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [
        MetricKind::Persistence,
        MetricKind::Turnover,
        MetricKind::NetSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Persistence => "persistence",
            MetricKind::Turnover => "turnover",
            MetricKind::NetSize => "netsize",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "persistence" => Ok(MetricKind::Persistence),
            "turnover" => Ok(MetricKind::Turnover),
            "netsize" => Ok(MetricKind::NetSize),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

/// Collects one metric's values for every retained ego.
///
/// Persistence and turnover yield one value per consecutive interval pair;
/// network size yields one per interval.
pub fn metric_samples(
    metric: MetricKind,
    networks: &Networks,
    retained: &BTreeSet<EgoId>,
    n_intervals: u32,
) -> Result<BTreeMap<EgoId, Vec<f64>>> {
    let mut samples: BTreeMap<EgoId, Vec<f64>> =
        retained.iter().map(|ego| (ego.clone(), Vec::new())).collect();
    match metric {
        MetricKind::Persistence => {
            let signatures: Signatures = build_signatures(networks, retained, n_intervals)?;
            for ego in retained {
                let values = samples.get_mut(ego).expect("ego preinserted");
                for t in 1..n_intervals {
                    let a = &signatures[&(ego.clone(), t)];
                    let b = &signatures[&(ego.clone(), t + 1)];
                    values.push(jsd(a, b));
                }
            }
        }
        MetricKind::Turnover => {
            for record in turnover_series(networks, retained, n_intervals)? {
                samples
                    .get_mut(&record.ego_id)
                    .expect("ego preinserted")
                    .push(record.jaccard);
            }
        }
        MetricKind::NetSize => {
            for ego in retained {
                let values = samples.get_mut(ego).expect("ego preinserted");
                for t in 1..=n_intervals {
                    let network =
                        networks
                            .get(ego, t)
                            .ok_or_else(|| crate::error::Error::MissingNetwork {
                                ego: ego.clone(),
                                interval: t,
                            })?;
                    values.push(network.size() as f64);
                }
            }
        }
    }
    Ok(samples)
}
