use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use egodyn::ingest::{partition_intervals, read_network_snapshot_path, retain_active_egos};
use egodyn::metrics::metric_samples;
use egodyn::rank_dynamics::{
    aggregate, ego_transition_matrices, rank_transition_points, stability, states,
    subgroup_rank_report, AggregateMatrix, TransitionMatrix,
};
use egodyn::signatures::{
    build_signatures, reference_distances, self_distances, DistanceKind, JSD_MAX,
};
use egodyn::stats::{compare_subgroups, kde_2d, percentile_split, SubgroupPartition};
use egodyn::turnover::turnover_series;
use egodyn::types::{EgoId, Networks, TraitName, TraitProfile};
use serde::Serialize;

use crate::config::{AnalysisMetric, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{fmt6, render_table, write_kde_1d, write_text};

pub fn run(config: &RunConfig) -> CliResult<()> {
    let snapshot_path = config.snapshot_path();
    config.require_input("snapshot", &snapshot_path)?;
    let traits_path = config
        .traits
        .as_ref()
        .ok_or_else(|| CliError::Config("key `traits` is required for analyze".to_owned()))?;
    config.require_input("traits", traits_path)?;

    let intervals = partition_intervals(config.study_start, config.n_intervals, config.interval)?;
    let networks = read_network_snapshot_path(&snapshot_path)?;
    let retained = retain_active_egos(&networks, &intervals, config.min_calls, config.min_alters);
    if retained.is_empty() {
        return Err(CliError::Data(
            "no egos pass the retention thresholds; nothing to analyze".to_owned(),
        ));
    }

    let (all_profiles, _report) = egodyn::ingest::parse_trait_profiles_path(traits_path)?;
    let profiles: BTreeMap<EgoId, TraitProfile> = all_profiles
        .into_iter()
        .filter(|(ego, _)| retained.contains(ego))
        .collect();

    let mut partitions: BTreeMap<TraitName, SubgroupPartition> = BTreeMap::new();
    for trait_name in config.active_traits() {
        let partition = percentile_split(
            &profiles,
            trait_name,
            config.low_percentile,
            config.high_percentile,
        )?;
        if partition.degenerate {
            eprintln!(
                "warning: {trait_name} quartile cuts overlap; its high and low \
                 subgroups share egos and their comparison is unreliable"
            );
        }
        partitions.insert(trait_name, partition);
    }

    std::fs::create_dir_all(&config.out_dir)?;
    let out = config.out_dir.as_path();
    let n = config.n_intervals;

    println!("retained {} of {} egos", retained.len(), networks.egos().len());

    for metric in &config.metrics {
        match metric {
            AnalysisMetric::Persistence => {
                let signatures = build_signatures(&networks, &retained, n)?;
                let self_recs = self_distances(&signatures, &retained, n)?;
                let ref_recs =
                    reference_distances(&signatures, &retained, n, config.reference_mode)?;

                let mut csv = String::from("ego_id,kind,interval_pair,counterpart,value\n");
                for rec in self_recs.iter().chain(ref_recs.iter()) {
                    let counterpart = rec
                        .counterpart
                        .as_ref()
                        .map(|c| c.to_string())
                        .unwrap_or_default();
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        rec.ego_id,
                        rec.kind.as_str(),
                        rec.pair,
                        counterpart,
                        fmt6(rec.value)
                    );
                }
                write_text(&out.join("distances.csv"), &csv)?;

                let self_values: Vec<f64> = self_recs.iter().map(|r| r.value).collect();
                let ref_values: Vec<f64> = ref_recs.iter().map(|r| r.value).collect();
                debug_assert!(self_recs.iter().all(|r| r.kind == DistanceKind::SelfDistance));
                write_kde_1d(&out.join("kde_self_distance.csv"), &self_values, 0.0, JSD_MAX)?;
                write_kde_1d(
                    &out.join("kde_reference_distance.csv"),
                    &ref_values,
                    0.0,
                    JSD_MAX,
                )?;
            }
            AnalysisMetric::Turnover => {
                let records = turnover_series(&networks, &retained, n)?;
                let mut csv = String::from("ego_id,interval_pair,jaccard\n");
                for rec in &records {
                    let _ = writeln!(csv, "{},{},{}", rec.ego_id, rec.pair, fmt6(rec.jaccard));
                }
                write_text(&out.join("turnover.csv"), &csv)?;
                let values: Vec<f64> = records.iter().map(|r| r.jaccard).collect();
                write_kde_1d(&out.join("kde_turnover.csv"), &values, 0.0, 1.0)?;
            }
            AnalysisMetric::NetSize => {
                let mut csv = String::from("ego_id,interval_index,network_size\n");
                let mut sizes = Vec::new();
                for ego in &retained {
                    for iv in &intervals {
                        let size = networks
                            .get(ego, iv.index)
                            .map(|net| net.size())
                            .unwrap_or(0);
                        sizes.push(size as f64);
                        let _ = writeln!(csv, "{},{},{}", ego, iv.index, size);
                    }
                }
                write_text(&out.join("netsize.csv"), &csv)?;
                let lo = sizes.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
                write_kde_1d(&out.join("kde_netsize.csv"), &sizes, lo, hi)?;
            }
            AnalysisMetric::RankDyn => {
                run_rank_dynamics(config, &networks, &retained, &partitions, out)?;
            }
        }

        if let Some(kind) = metric.scalar_kind() {
            let samples = metric_samples(kind, &networks, &retained, n)?;
            let mut rows = Vec::new();
            for trait_name in config.active_traits() {
                let comparison = compare_subgroups(&samples, &partitions[&trait_name])?;
                rows.push((trait_name.to_string(), comparison));
            }
            let name = kind.as_str();

            let mut csv = String::from(
                "trait,subgroup,n,median,q1,q3,kw_stat,kw_p,ks_stat,ks_p\n",
            );
            for (label, cmp) in &rows {
                for (group, stats) in [("high", &cmp.high), ("low", &cmp.low)] {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{},{}",
                        label,
                        group,
                        stats.n,
                        fmt6(stats.median),
                        fmt6(stats.q1),
                        fmt6(stats.q3),
                        fmt6(cmp.kw.statistic),
                        fmt6(cmp.kw.p_value),
                        fmt6(cmp.ks.statistic),
                        fmt6(cmp.ks.p_value)
                    );
                }
            }
            write_text(&out.join(format!("report_{name}.csv")), &csv)?;

            let table = render_table(name, &rows);
            write_text(&out.join(format!("table_{name}.txt")), &table)?;
            print!("{table}");
        }
    }

    super::write_manifest(config, "analyze", out)?;
    println!("analysis written to `{}`", out.display());
    Ok(())
}

#[derive(Serialize)]
struct StabilityEntry {
    subgroup: String,
    stability: f64,
    n_matrices: usize,
    n_egos: usize,
}

fn run_rank_dynamics(
    config: &RunConfig,
    networks: &Networks,
    retained: &std::collections::BTreeSet<EgoId>,
    partitions: &BTreeMap<TraitName, SubgroupPartition>,
    out: &Path,
) -> CliResult<()> {
    let n = config.n_intervals;
    let max_rank = config.max_rank;
    let mut stability_entries = Vec::new();

    let population = ego_transition_matrices(networks, retained, n, max_rank)?;
    let aggregated = aggregate(&population, "population", config.normalizer)?;
    write_matrix_csv(&out.join("transition_population.csv"), &aggregated)?;
    write_rank_kde(&out.join("kde_rank2d_population.csv"), &population, max_rank)?;
    stability_entries.push(StabilityEntry {
        subgroup: "population".to_owned(),
        stability: round6(stability(&aggregated, max_rank)),
        n_matrices: aggregated.n_matrices,
        n_egos: aggregated.n_egos,
    });

    for trait_name in config.active_traits() {
        let partition = &partitions[&trait_name];
        let reports = subgroup_rank_report(networks, partition, n, max_rank, config.normalizer)?;
        for report in &reports {
            write_matrix_csv(
                &out.join(format!("transition_{}.csv", report.label)),
                &report.matrix,
            )?;
            stability_entries.push(StabilityEntry {
                subgroup: report.label.clone(),
                stability: round6(report.stability),
                n_matrices: report.matrix.n_matrices,
                n_egos: report.matrix.n_egos,
            });
        }
        for (group, egos) in [
            ("low", &partition.low),
            ("middle", &partition.middle),
            ("high", &partition.high),
        ] {
            let matrices = ego_transition_matrices(networks, egos, n, max_rank)?;
            write_rank_kde(
                &out.join(format!("kde_rank2d_{}_{group}.csv", trait_name)),
                &matrices,
                max_rank,
            )?;
        }
    }

    let mut text =
        serde_json::to_string_pretty(&stability_entries).expect("stability serializes");
    text.push('\n');
    write_text(&out.join("stability.json"), &text)?;
    Ok(())
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Labeled grid of one aggregate matrix: ranks 1..max, then `i`/`o` for
/// beyond-rank and `in`/`on` for absent, matching the row/column labels of
/// the study's transition diagrams.
fn write_matrix_csv(path: &Path, matrix: &AggregateMatrix) -> CliResult<()> {
    let all_states = states(matrix.max_rank());
    let mut csv = String::from("from");
    for col in &all_states {
        csv.push(',');
        csv.push_str(col.col_label().as_ref());
    }
    csv.push('\n');
    for row in &all_states {
        csv.push_str(row.row_label().as_ref());
        for col in &all_states {
            csv.push(',');
            csv.push_str(&fmt6(matrix.value(*row, *col)));
        }
        csv.push('\n');
    }
    write_text(path, &csv)
}

/// 2D density of within-rank transition events over the integer rank grid.
fn write_rank_kde(path: &Path, matrices: &[TransitionMatrix], max_rank: usize) -> CliResult<()> {
    let points = rank_transition_points(matrices);
    let axis: Vec<f64> = (1..=max_rank).map(|r| r as f64).collect();
    let mut csv = String::from("x,y,density\n");
    match kde_2d(&points, &axis, &axis) {
        Ok(density) => {
            for (i, x) in axis.iter().enumerate() {
                for (j, y) in axis.iter().enumerate() {
                    let _ = writeln!(csv, "{},{},{}", x, y, fmt6(density[i][j]));
                }
            }
        }
        Err(egodyn::Error::DegenerateAxis { .. })
        | Err(egodyn::Error::ZeroVariance)
        | Err(egodyn::Error::SampleTooSmall { .. }) => {
            eprintln!(
                "warning: {} left empty (too few distinct rank transitions)",
                path.display()
            );
        }
        Err(other) => return Err(other.into()),
    }
    write_text(path, &csv)
}
