//! Network turnover: how much of an ego's alter set carries over from one
//! interval to the next, measured by Jaccard similarity.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::{EgoId, IntervalPair, Networks};

/// Jaccard similarity `|a ∩ b| / |a ∪ b|`. Undefined when both sets are
/// empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::BothSetsEmpty);
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    Ok(intersection as f64 / union as f64)
}

/// Jaccard similarity of one ego's alter sets across consecutive intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnoverRecord {
    pub ego_id: EgoId,
    pub pair: IntervalPair,
    pub jaccard: f64,
}

/// Turnover of every retained ego over every consecutive interval pair,
/// ordered by ego and then pair.
pub fn turnover_series(
    networks: &Networks,
    retained: &BTreeSet<EgoId>,
    n_intervals: u32,
) -> Result<Vec<TurnoverRecord>> {
    let mut records = Vec::new();
    for ego in retained {
        for t in 1..n_intervals {
            let fetch = |interval: u32| {
                networks
                    .get(ego, interval)
                    .ok_or_else(|| Error::MissingNetwork {
                        ego: ego.clone(),
                        interval,
                    })
            };
            let a = fetch(t)?.alter_set();
            let b = fetch(t + 1)?.alter_set();
            records.push(TurnoverRecord {
                ego_id: ego.clone(),
                pair: IntervalPair::new(t, t + 1),
                jaccard: jaccard(&a, &b)?,
            });
        }
    }
    Ok(records)
}
