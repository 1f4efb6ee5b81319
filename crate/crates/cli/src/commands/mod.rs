pub mod analyze;
pub mod ingest;
pub mod synth;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Serialize)]
struct RunManifest {
    tool_version: String,
    command: String,
    config_hash: String,
    config: BTreeMap<String, String>,
}

/// Records what produced an output directory: tool version, command, and
/// the resolved analysis configuration with its hash.
pub fn write_manifest(config: &RunConfig, command: &str, out_dir: &Path) -> CliResult<()> {
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: command.to_owned(),
        config_hash: config.config_hash(),
        config: config.canonical_map(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    crate::report::write_text(&out_dir.join("run_manifest.json"), &text)
}
