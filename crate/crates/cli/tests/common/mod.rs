use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

pub fn egodyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egodyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

pub fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        stdout_of(output),
        stderr_of(output)
    );
}

// Each test binary compiles this module on its own; not every binary uses
// every helper.
#[allow(dead_code)]
pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process exited")
}

/// Every file under `dir`, keyed by path relative to it.
pub fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, files: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .expect("directory readable")
            .map(|e| e.expect("entry readable").path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, files);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("path under root")
                    .to_string_lossy()
                    .into_owned();
                files.insert(rel, std::fs::read(&path).expect("file readable"));
            }
        }
    }
    let mut files = BTreeMap::new();
    walk(dir, dir, &mut files);
    files
}

pub fn write_config(path: &Path, body: &str) {
    std::fs::write(path, body).expect("config written");
}
