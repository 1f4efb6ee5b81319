use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use egodyn::ingest::IntervalLength;
use egodyn::metrics::MetricKind;
use egodyn::rank_dynamics::{NormalizerMode, DEFAULT_MAX_RANK};
use egodyn::signatures::ReferenceMode;
use egodyn::synth::{GeneratorConfig, TraitEffect};
use egodyn::types::TraitName;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// An analysis the `analyze` command can run. The first three are scalar
/// per-ego metrics; rank dynamics produces matrices instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AnalysisMetric {
    Persistence,
    Turnover,
    NetSize,
    RankDyn,
}

impl AnalysisMetric {
    pub const ALL: [AnalysisMetric; 4] = [
        AnalysisMetric::Persistence,
        AnalysisMetric::Turnover,
        AnalysisMetric::NetSize,
        AnalysisMetric::RankDyn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisMetric::Persistence => "persistence",
            AnalysisMetric::Turnover => "turnover",
            AnalysisMetric::NetSize => "netsize",
            AnalysisMetric::RankDyn => "rankdyn",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "persistence" => Ok(AnalysisMetric::Persistence),
            "turnover" => Ok(AnalysisMetric::Turnover),
            "netsize" => Ok(AnalysisMetric::NetSize),
            "rankdyn" => Ok(AnalysisMetric::RankDyn),
            other => Err(format!("unknown metric `{other}`")),
        }
    }

    /// The per-ego scalar series behind this analysis, if it has one.
    pub fn scalar_kind(self) -> Option<MetricKind> {
        match self {
            AnalysisMetric::Persistence => Some(MetricKind::Persistence),
            AnalysisMetric::Turnover => Some(MetricKind::Turnover),
            AnalysisMetric::NetSize => Some(MetricKind::NetSize),
            AnalysisMetric::RankDyn => None,
        }
    }
}

/// Parses a comma-separated metric list into canonical order, deduplicated.
pub fn parse_metric_list(s: &str) -> Result<Vec<AnalysisMetric>, String> {
    let mut selected = std::collections::BTreeSet::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        selected.insert(AnalysisMetric::parse(part)?);
    }
    if selected.is_empty() {
        return Err("metric list is empty".to_owned());
    }
    Ok(selected.into_iter().collect())
}

/// Every tunable of the pipeline, resolved from a flat `key=value` file plus
/// command-line overrides.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub calls: Option<PathBuf>,
    pub traits: Option<PathBuf>,
    snapshot: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub study_start: DateTime<Utc>,
    pub n_intervals: u32,
    pub interval: IntervalLength,
    pub min_calls: u64,
    pub min_alters: usize,
    pub max_rank: usize,
    pub low_percentile: f64,
    pub high_percentile: f64,
    pub reference_mode: ReferenceMode,
    pub normalizer: NormalizerMode,
    pub metrics: Vec<AnalysisMetric>,
    pub focus_trait: Option<TraitName>,
    pub workers: usize,
    pub generator: GeneratorConfig,
    pub trial_metric: Option<MetricKind>,
    pub trial_trait: Option<TraitName>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            calls: None,
            traits: None,
            snapshot: None,
            out_dir: PathBuf::from("out"),
            study_start: egodyn::synth::default_study_start(),
            n_intervals: 3,
            interval: IntervalLength::Days(153),
            min_calls: 150,
            min_alters: 20,
            max_rank: DEFAULT_MAX_RANK,
            low_percentile: 0.25,
            high_percentile: 0.75,
            reference_mode: ReferenceMode::CrossInterval,
            normalizer: NormalizerMode::PerMatrix,
            metrics: AnalysisMetric::ALL.to_vec(),
            focus_trait: None,
            workers: 0,
            generator: GeneratorConfig::default(),
            trial_metric: None,
            trial_trait: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_date(value: &str) -> CliResult<DateTime<Utc>> {
    if let Ok(date) = NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        return Ok(DateTime::from_naive_utc_and_offset(midnight, Utc));
    }
    DateTime::parse_from_rfc3339(value)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|_| config_err(format!("`{value}` is not a date (YYYY-MM-DD or RFC 3339)")))
}

/// Raw `key=value` entries with duplicate and syntax checking.
fn tokenize(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!(
                "line {}: expected `key=value`, got `{line}`",
                idx + 1
            )));
        };
        let key = key.trim().to_owned();
        let value = value.trim().to_owned();
        if entries.insert(key.clone(), value).is_some() {
            return Err(config_err(format!("line {}: duplicate key `{key}`", idx + 1)));
        }
    }
    Ok(entries)
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(value) => value.parse::<T>().map(Some).map_err(|_| {
                config_err(format!("key `{key}`: cannot parse `{value}`"))
            }),
        }
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> CliResult<RunConfig> {
        let mut entries = Entries(tokenize(text)?);
        let mut config = RunConfig::default();

        if let Some(v) = entries.take("calls") {
            config.calls = Some(PathBuf::from(v));
        }
        if let Some(v) = entries.take("traits") {
            config.traits = Some(PathBuf::from(v));
        }
        if let Some(v) = entries.take("snapshot") {
            config.snapshot = Some(PathBuf::from(v));
        }
        if let Some(v) = entries.take("out_dir") {
            config.out_dir = PathBuf::from(v);
        }
        if let Some(v) = entries.take("study_start") {
            config.study_start = parse_date(&v)?;
        }
        if let Some(v) = entries.take_parsed::<u32>("n_intervals")? {
            config.n_intervals = v;
        }
        let days = entries.take_parsed::<u32>("interval_days")?;
        let months = entries.take_parsed::<u32>("interval_months")?;
        config.interval = match (days, months) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "set `interval_days` or `interval_months`, not both",
                ))
            }
            (None, Some(m)) => IntervalLength::CalendarMonths(m),
            (Some(d), None) => IntervalLength::Days(d),
            (None, None) => config.interval,
        };
        if let Some(v) = entries.take_parsed::<u64>("min_calls")? {
            config.min_calls = v;
        }
        if let Some(v) = entries.take_parsed::<usize>("min_alters")? {
            config.min_alters = v;
        }
        if let Some(v) = entries.take_parsed::<usize>("max_rank")? {
            config.max_rank = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("low_percentile")? {
            config.low_percentile = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("high_percentile")? {
            config.high_percentile = v;
        }
        if let Some(v) = entries.take("reference_mode") {
            config.reference_mode = match v.as_str() {
                "cross" => ReferenceMode::CrossInterval,
                "same" => ReferenceMode::SameInterval,
                other => {
                    return Err(config_err(format!(
                        "key `reference_mode`: expected `cross` or `same`, got `{other}`"
                    )))
                }
            };
        }
        if let Some(v) = entries.take("normalizer") {
            config.normalizer = match v.as_str() {
                "per_matrix" => NormalizerMode::PerMatrix,
                "per_ego" => NormalizerMode::PerEgo,
                other => {
                    return Err(config_err(format!(
                        "key `normalizer`: expected `per_matrix` or `per_ego`, got `{other}`"
                    )))
                }
            };
        }
        if let Some(v) = entries.take("metrics") {
            config.metrics =
                parse_metric_list(&v).map_err(|e| config_err(format!("key `metrics`: {e}")))?;
        }
        if let Some(v) = entries.take("trait") {
            config.focus_trait = Some(
                v.parse::<TraitName>()
                    .map_err(|e| config_err(format!("key `trait`: {e}")))?,
            );
        }
        if let Some(v) = entries.take_parsed::<usize>("workers")? {
            config.workers = v;
        }

        if let Some(v) = entries.take_parsed::<u64>("seed")? {
            config.generator.seed = v;
        }
        if let Some(v) = entries.take_parsed::<usize>("n_egos")? {
            config.generator.n_egos = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("calls_per_ego")? {
            config.generator.calls_per_ego = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("network_size")? {
            config.generator.network_size = v;
        }
        if let Some(v) = entries.take_parsed::<usize>("alter_pool_size")? {
            config.generator.alter_pool_size = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("signature_exponent")? {
            config.generator.signature_exponent = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("churn_prob")? {
            config.generator.churn_prob = v;
        }
        if let Some(v) = entries.take_parsed::<f64>("rank_noise")? {
            config.generator.rank_noise = v;
        }
        if let Some(v) = entries.take("trial_metric") {
            config.trial_metric = Some(
                v.parse::<MetricKind>()
                    .map_err(|e| config_err(format!("key `trial_metric`: {e}")))?,
            );
        }
        if let Some(v) = entries.take("trial_trait") {
            config.trial_trait = Some(
                v.parse::<TraitName>()
                    .map_err(|e| config_err(format!("key `trial_trait`: {e}")))?,
            );
        }

        let effect_keys: Vec<String> = entries
            .0
            .keys()
            .filter(|k| k.starts_with("effect."))
            .cloned()
            .collect();
        for key in effect_keys {
            let value = entries.take(&key).expect("key listed above");
            let parsed: f64 = value
                .parse()
                .map_err(|_| config_err(format!("key `{key}`: cannot parse `{value}`")))?;
            let mut parts = key.splitn(3, '.');
            parts.next();
            let trait_part = parts.next().unwrap_or_default();
            let field = parts.next().unwrap_or_default();
            let trait_name = trait_part
                .parse::<TraitName>()
                .map_err(|e| config_err(format!("key `{key}`: {e}")))?;
            let effect = config
                .generator
                .trait_effects
                .entry(trait_name)
                .or_insert_with(|| TraitEffect {
                    churn_slope: 0.0,
                    noise_slope: 0.0,
                });
            match field {
                "churn_slope" => effect.churn_slope = parsed,
                "noise_slope" => effect.noise_slope = parsed,
                other => {
                    return Err(config_err(format!(
                        "key `{key}`: unknown effect field `{other}` \
                         (use churn_slope or noise_slope)"
                    )))
                }
            }
        }

        if let Some(unknown) = entries.0.keys().next() {
            return Err(config_err(format!("unknown key `{unknown}`")));
        }

        // The generator always mirrors the analysis interval count so one
        // file drives a full round trip.
        config.generator.n_intervals = config.n_intervals;

        config.check_ranges()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_err(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        RunConfig::from_str(&text)
    }

    fn check_ranges(&self) -> CliResult<()> {
        if self.n_intervals < 2 {
            return Err(config_err("n_intervals must be at least 2"));
        }
        if self.max_rank < 1 {
            return Err(config_err("max_rank must be at least 1"));
        }
        let in_open_unit =
            |q: f64| q.is_finite() && q > 0.0 && q < 1.0;
        if !in_open_unit(self.low_percentile) || !in_open_unit(self.high_percentile) {
            return Err(config_err("percentile cuts must lie strictly between 0 and 1"));
        }
        if self.low_percentile >= self.high_percentile {
            return Err(config_err("low_percentile must be below high_percentile"));
        }
        Ok(())
    }

    /// Snapshot path, defaulting to `<out_dir>/snapshot.csv`.
    pub fn snapshot_path(&self) -> PathBuf {
        self.snapshot
            .clone()
            .unwrap_or_else(|| self.out_dir.join("snapshot.csv"))
    }

    /// Traits to analyze: the focused one, or all five.
    pub fn active_traits(&self) -> Vec<TraitName> {
        match self.focus_trait {
            Some(t) => vec![t],
            None => TraitName::ALL.to_vec(),
        }
    }

    pub fn require_input(&self, what: &str, path: &Path) -> CliResult<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(config_err(format!(
                "{what} file `{}` does not exist",
                path.display()
            )))
        }
    }

    /// The analysis-defining configuration as sorted `key=value` lines.
    ///
    /// Excludes `out_dir` and `workers` on purpose: neither changes any
    /// computed value, and including them would make otherwise identical
    /// runs disagree in their manifests.
    pub fn canonical_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_owned(), v);
        };
        if let Some(p) = &self.calls {
            put("calls", p.display().to_string());
        }
        if let Some(p) = &self.traits {
            put("traits", p.display().to_string());
        }
        if let Some(p) = &self.snapshot {
            put("snapshot", p.display().to_string());
        }
        put("study_start", self.study_start.to_rfc3339());
        put("n_intervals", self.n_intervals.to_string());
        match self.interval {
            IntervalLength::Days(d) => put("interval_days", d.to_string()),
            IntervalLength::CalendarMonths(m) => put("interval_months", m.to_string()),
        }
        put("min_calls", self.min_calls.to_string());
        put("min_alters", self.min_alters.to_string());
        put("max_rank", self.max_rank.to_string());
        put("low_percentile", self.low_percentile.to_string());
        put("high_percentile", self.high_percentile.to_string());
        put(
            "reference_mode",
            match self.reference_mode {
                ReferenceMode::CrossInterval => "cross",
                ReferenceMode::SameInterval => "same",
            }
            .to_owned(),
        );
        put(
            "normalizer",
            match self.normalizer {
                NormalizerMode::PerMatrix => "per_matrix",
                NormalizerMode::PerEgo => "per_ego",
            }
            .to_owned(),
        );
        put(
            "metrics",
            self.metrics
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(t) = self.focus_trait {
            put("trait", t.to_string());
        }
        put("seed", self.generator.seed.to_string());
        put("n_egos", self.generator.n_egos.to_string());
        put("calls_per_ego", self.generator.calls_per_ego.to_string());
        put("network_size", self.generator.network_size.to_string());
        put("alter_pool_size", self.generator.alter_pool_size.to_string());
        put(
            "signature_exponent",
            self.generator.signature_exponent.to_string(),
        );
        put("churn_prob", self.generator.churn_prob.to_string());
        put("rank_noise", self.generator.rank_noise.to_string());
        for (trait_name, effect) in &self.generator.trait_effects {
            map.insert(
                format!("effect.{trait_name}.churn_slope"),
                effect.churn_slope.to_string(),
            );
            map.insert(
                format!("effect.{trait_name}.noise_slope"),
                effect.noise_slope.to_string(),
            );
        }
        if let Some(m) = self.trial_metric {
            map.insert("trial_metric".to_owned(), m.to_string());
        }
        if let Some(t) = self.trial_trait {
            map.insert("trial_trait".to_owned(), t.to_string());
        }
        map
    }

    pub fn canonical_text(&self) -> String {
        let mut text = String::new();
        for (key, value) in self.canonical_map() {
            text.push_str(&key);
            text.push('=');
            text.push_str(&value);
            text.push('\n');
        }
        text
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
