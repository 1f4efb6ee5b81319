//! Domain types shared across the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Opaque identifier of an ego (subject).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EgoId(String);

impl EgoId {
    pub fn new(id: impl Into<String>) -> Self {
        EgoId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EgoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EgoId {
    fn from(s: &str) -> Self {
        EgoId(s.to_owned())
    }
}

/// Opaque identifier of a contacted person (alter).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlterId(String);

impl AlterId {
    pub fn new(id: impl Into<String>) -> Self {
        AlterId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AlterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AlterId {
    fn from(s: &str) -> Self {
        AlterId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("outgoing") {
            Ok(Direction::Outgoing)
        } else if s.eq_ignore_ascii_case("incoming") {
            Ok(Direction::Incoming)
        } else {
            Err(format!("unknown direction `{s}`"))
        }
    }
}

/// One phone call as it appears in the raw log.
#[derive(Debug, Clone)]
pub struct CallRecord {
    pub ego_id: EgoId,
    pub alter_id: AlterId,
    pub timestamp: DateTime<Utc>,
    pub direction: Direction,
    pub duration_s: Option<u64>,
}

/// Valid range of a Big Five questionnaire score.
pub const TRAIT_SCALE_MIN: f64 = 15.0;
pub const TRAIT_SCALE_MAX: f64 = 70.0;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum TraitName {
    Extraversion,
    Agreeableness,
    Conscientiousness,
    EmotionalStability,
    Openness,
}

impl TraitName {
    pub const ALL: [TraitName; 5] = [
        TraitName::Extraversion,
        TraitName::Agreeableness,
        TraitName::Conscientiousness,
        TraitName::EmotionalStability,
        TraitName::Openness,
    ];

    /// Key used in file headers and config keys.
    pub fn as_str(self) -> &'static str {
        match self {
            TraitName::Extraversion => "extraversion",
            TraitName::Agreeableness => "agreeableness",
            TraitName::Conscientiousness => "conscientiousness",
            TraitName::EmotionalStability => "emotional_stability",
            TraitName::Openness => "openness",
        }
    }

    /// Human-readable name for rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            TraitName::Extraversion => "Extraversion",
            TraitName::Agreeableness => "Agreeableness",
            TraitName::Conscientiousness => "Conscientiousness",
            TraitName::EmotionalStability => "Emotional Stability",
            TraitName::Openness => "Openness to Experience",
        }
    }
}

impl fmt::Display for TraitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraitName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "extraversion" => Ok(TraitName::Extraversion),
            "agreeableness" => Ok(TraitName::Agreeableness),
            "conscientiousness" => Ok(TraitName::Conscientiousness),
            "emotional_stability" => Ok(TraitName::EmotionalStability),
            "openness" => Ok(TraitName::Openness),
            _ => Err(format!("unknown trait `{s}`")),
        }
    }
}

/// One ego's five questionnaire scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitProfile {
    pub ego_id: EgoId,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub conscientiousness: f64,
    pub emotional_stability: f64,
    pub openness: f64,
}

impl TraitProfile {
    pub fn score(&self, name: TraitName) -> f64 {
        match name {
            TraitName::Extraversion => self.extraversion,
            TraitName::Agreeableness => self.agreeableness,
            TraitName::Conscientiousness => self.conscientiousness,
            TraitName::EmotionalStability => self.emotional_stability,
            TraitName::Openness => self.openness,
        }
    }
}

/// Half-open observation window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalSpec {
    /// 1-based position in the study window.
    pub index: u32,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl IntervalSpec {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

/// A pair of interval indices, usually consecutive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalPair {
    pub from: u32,
    pub to: u32,
}

impl IntervalPair {
    pub fn new(from: u32, to: u32) -> Self {
        IntervalPair { from, to }
    }
}

impl fmt::Display for IntervalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I{}-I{}", self.from, self.to)
    }
}

/// Outgoing-call counts from one ego to its alters within one interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgoIntervalNetwork {
    pub ego_id: EgoId,
    pub interval_index: u32,
    pub call_counts: BTreeMap<AlterId, u64>,
}

impl EgoIntervalNetwork {
    /// Number of distinct alters contacted.
    pub fn size(&self) -> usize {
        self.call_counts.len()
    }

    pub fn total_calls(&self) -> u64 {
        self.call_counts.values().sum()
    }

    pub fn alter_set(&self) -> BTreeSet<AlterId> {
        self.call_counts.keys().cloned().collect()
    }
}

/// All ego-interval networks of a dataset, keyed by ego and interval index.
#[derive(Debug, Clone, Default)]
pub struct Networks {
    map: BTreeMap<(EgoId, u32), EgoIntervalNetwork>,
}

impl Networks {
    pub fn new() -> Self {
        Networks::default()
    }

    pub fn insert(&mut self, network: EgoIntervalNetwork) {
        self.map
            .insert((network.ego_id.clone(), network.interval_index), network);
    }

    pub fn get(&self, ego: &EgoId, interval: u32) -> Option<&EgoIntervalNetwork> {
        self.map.get(&(ego.clone(), interval))
    }

    pub fn iter(&self) -> impl Iterator<Item = &EgoIntervalNetwork> {
        self.map.values()
    }

    pub fn egos(&self) -> BTreeSet<EgoId> {
        self.map.keys().map(|(ego, _)| ego.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FromIterator<EgoIntervalNetwork> for Networks {
    fn from_iter<I: IntoIterator<Item = EgoIntervalNetwork>>(iter: I) -> Self {
        let mut networks = Networks::new();
        for network in iter {
            networks.insert(network);
        }
        networks
    }
}
