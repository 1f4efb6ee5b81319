use std::fmt::Write as _;
use std::path::Path;

use egodyn::stats::{kde_1d, SubgroupComparison};
use egodyn::Error;

use crate::error::CliResult;

/// Fixed six-decimal float rendering, with negative zero normalized so
/// reruns are byte-identical.
pub fn fmt6(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.6}")
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo, "grid needs a real span");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

pub fn write_text(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(Into::into)
}

/// Writes an `x,density` CSV for one sample over a fixed grid. A sample too
/// small or too concentrated to support a bandwidth gets a header-only file
/// and a warning instead of a failed run.
pub fn write_kde_1d(path: &Path, sample: &[f64], lo: f64, hi: f64) -> CliResult<()> {
    let mut content = String::from("x,density\n");
    let points = grid(lo, hi, 101);
    match kde_1d(sample, &points) {
        Ok(densities) => {
            for (x, d) in points.iter().zip(densities) {
                let _ = writeln!(content, "{},{}", fmt6(*x), fmt6(d));
            }
        }
        Err(Error::ZeroVariance) | Err(Error::SampleTooSmall { .. }) => {
            eprintln!(
                "warning: {} left empty (sample cannot support a density estimate)",
                path.display()
            );
        }
        Err(other) => return Err(other.into()),
    }
    write_text(path, &content)
}

/// Renders one metric's subgroup comparisons the way the study's tables
/// print them: one high and one low row per trait, medians with quartiles,
/// and the test statistic with significance stars on the high row only,
/// suppressed entirely when p is at or above 0.05.
pub fn render_table(metric: &str, comparisons: &[(String, SubgroupComparison)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{metric}: high vs low trait subgroups");
    let _ = writeln!(
        out,
        "{:<24} {:<6} {:>5} {:>9} {:>9} {:>9}  {:<10} {:<10}",
        "trait", "group", "n", "median", "q1", "q3", "KW", "KS"
    );
    for (label, cmp) in comparisons {
        let kw_cell = if cmp.kw.stars.is_significant() {
            format!("{:.2}{}", cmp.kw.statistic, cmp.kw.stars)
        } else {
            String::new()
        };
        let ks_cell = if cmp.ks.stars.is_significant() {
            format!("{:.2}{}", cmp.ks.statistic, cmp.ks.stars)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{:<24} {:<6} {:>5} {:>9.3} {:>9.3} {:>9.3}  {:<10} {:<10}",
            label, "high", cmp.high.n, cmp.high.median, cmp.high.q1, cmp.high.q3, kw_cell, ks_cell
        );
        let _ = writeln!(
            out,
            "{:<24} {:<6} {:>5} {:>9.3} {:>9.3} {:>9.3}",
            "", "low", cmp.low.n, cmp.low.median, cmp.low.q1, cmp.low.q3
        );
    }
    out
}
