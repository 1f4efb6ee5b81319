use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;

use egodyn::ingest::{
    build_networks, parse_call_records_path, partition_intervals, retain_active_egos,
    write_network_snapshot,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::write_text;

pub fn run(config: &RunConfig) -> CliResult<()> {
    let calls_path = config
        .calls
        .as_ref()
        .ok_or_else(|| CliError::Config("key `calls` is required for ingest".to_owned()))?;
    config.require_input("calls", calls_path)?;

    let intervals = partition_intervals(config.study_start, config.n_intervals, config.interval)?;
    let (records, report) = parse_call_records_path(calls_path)?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "`{}` contains no usable call records",
            calls_path.display()
        )));
    }

    let networks = build_networks(&records, &intervals);
    let retained = retain_active_egos(&networks, &intervals, config.min_calls, config.min_alters);
    let all_egos = networks.egos();

    std::fs::create_dir_all(&config.out_dir)?;

    let snapshot_path = config.snapshot_path();
    if let Some(parent) = snapshot_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = BufWriter::new(File::create(&snapshot_path)?);
    write_network_snapshot(&networks, file)?;

    let mut retention = String::from("ego_id,interval_index,total_calls,network_size,retained\n");
    for ego in &all_egos {
        let keep = retained.contains(ego);
        for iv in &intervals {
            let (calls, size) = networks
                .get(ego, iv.index)
                .map(|net| (net.total_calls(), net.size()))
                .unwrap_or((0, 0));
            let _ = writeln!(retention, "{},{},{},{},{}", ego, iv.index, calls, size, keep);
        }
    }
    write_text(&config.out_dir.join("retention_report.csv"), &retention)?;

    let mut rejects = String::from("line,reason\n");
    for row in &report.rejected {
        let _ = writeln!(rejects, "{},{}", row.line, row.reason.replace(',', ";"));
    }
    write_text(&config.out_dir.join("rejected_rows.csv"), &rejects)?;

    super::write_manifest(config, "ingest", &config.out_dir)?;

    println!(
        "parsed {} call records from `{}` ({} rejected)",
        report.accepted,
        calls_path.display(),
        report.rejected.len()
    );
    println!("retained {} of {} egos", retained.len(), all_egos.len());
    println!("snapshot written to `{}`", snapshot_path.display());
    Ok(())
}
