use std::fmt::Write as _;

use chrono::SecondsFormat;
use egodyn::synth::{effect_recovery_trial, generate};
use egodyn::types::{Direction, TraitName};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{fmt6, write_text};

pub fn run(config: &RunConfig) -> CliResult<()> {
    if config.trial_metric.is_some() != config.trial_trait.is_some() {
        return Err(CliError::Config(
            "trial_metric and trial_trait must be set together".to_owned(),
        ));
    }
    let output = generate(&config.generator)?;

    std::fs::create_dir_all(&config.out_dir)?;

    let mut calls = String::from("ego_id,alter_id,timestamp,direction,duration_s\n");
    for rec in &output.records {
        let direction = match rec.direction {
            Direction::Outgoing => "outgoing",
            Direction::Incoming => "incoming",
        };
        let duration = rec.duration_s.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            calls,
            "{},{},{},{},{}",
            rec.ego_id,
            rec.alter_id,
            rec.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            direction,
            duration
        );
    }
    write_text(&config.out_dir.join("calls.csv"), &calls)?;

    let mut traits = String::from(
        "ego_id,extraversion,agreeableness,conscientiousness,emotional_stability,openness\n",
    );
    for profile in &output.profiles {
        let _ = writeln!(
            traits,
            "{},{},{},{},{},{}",
            profile.ego_id,
            fmt6(profile.score(TraitName::Extraversion)),
            fmt6(profile.score(TraitName::Agreeableness)),
            fmt6(profile.score(TraitName::Conscientiousness)),
            fmt6(profile.score(TraitName::EmotionalStability)),
            fmt6(profile.score(TraitName::Openness))
        );
    }
    write_text(&config.out_dir.join("traits.csv"), &traits)?;

    let mut manifest =
        serde_json::to_string_pretty(&output.manifest).expect("ground truth serializes");
    manifest.push('\n');
    write_text(&config.out_dir.join("ground_truth.json"), &manifest)?;

    super::write_manifest(config, "synth", &config.out_dir)?;

    println!(
        "generated {} egos, {} call records (seed {})",
        config.generator.n_egos,
        output.records.len(),
        config.generator.seed
    );

    if let (Some(metric), Some(trait_name)) = (config.trial_metric, config.trial_trait) {
        let result = effect_recovery_trial(
            &config.generator,
            metric,
            trait_name,
            config.min_calls,
            config.min_alters,
        )?;
        println!(
            "trial {metric} by {trait_name}: KW H = {:.6}, p = {:.6} ({})",
            result.statistic, result.p_value, result.stars
        );
    }
    Ok(())
}
