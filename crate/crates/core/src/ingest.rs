//! Reading call logs and trait questionnaires, slicing the study window into
//! intervals, and building per-interval ego networks.
//!
//! Call logs arrive as CSV with the header
//! `ego_id,alter_id,timestamp,direction,duration_s`. Timestamps may be
//! ISO-8601 or epoch seconds; the first row that parses fixes the format for
//! the rest of the file. Gzip-compressed files are detected by magic bytes,
//! not extension.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, Months, NaiveDateTime, Utc};
use flate2::bufread::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::types::{
    AlterId, CallRecord, Direction, EgoId, EgoIntervalNetwork, IntervalSpec, Networks,
    TraitProfile, TRAIT_SCALE_MAX, TRAIT_SCALE_MIN,
};

/// Fraction of malformed rows above which a file is rejected outright.
pub const MALFORMED_TOLERANCE: f64 = 0.10;

const CALL_HEADER: [&str; 5] = ["ego_id", "alter_id", "timestamp", "direction", "duration_s"];
const TRAIT_HEADER: [&str; 6] = [
    "ego_id",
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "emotional_stability",
    "openness",
];
const SNAPSHOT_HEADER: [&str; 4] = ["ego_id", "interval_index", "alter_id", "call_count"];

/// A row that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

/// What happened while parsing one file.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

impl ParseReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected.len()
    }
}

/// Opens a file, transparently decompressing gzip input.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut reader = BufReader::new(file);
    let magic = reader.fill_buf().map_err(io_err)?;
    if magic.len() >= 2 && magic[0] == 0x1f && magic[1] == 0x8b {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TsFormat {
    Iso,
    Epoch,
}

fn parse_epoch(field: &str) -> std::result::Result<DateTime<Utc>, String> {
    let secs: i64 = field
        .parse()
        .map_err(|_| format!("`{field}` is not epoch seconds"))?;
    DateTime::from_timestamp(secs, 0).ok_or_else(|| format!("epoch `{field}` out of range"))
}

fn parse_iso(field: &str) -> std::result::Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(field) {
        return Ok(t.with_timezone(&Utc));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(field, "%Y-%m-%dT%H:%M:%S") {
        return Ok(t.and_utc());
    }
    Err(format!("`{field}` is not an ISO-8601 timestamp"))
}

fn parse_timestamp(
    field: &str,
    locked: Option<TsFormat>,
) -> std::result::Result<(DateTime<Utc>, TsFormat), String> {
    match locked {
        Some(TsFormat::Epoch) => parse_epoch(field).map(|t| (t, TsFormat::Epoch)),
        Some(TsFormat::Iso) => parse_iso(field).map(|t| (t, TsFormat::Iso)),
        None => {
            if let Ok(t) = parse_epoch(field) {
                return Ok((t, TsFormat::Epoch));
            }
            parse_iso(field).map(|t| (t, TsFormat::Iso))
        }
    }
}

fn check_header(record: &csv::StringRecord, expected: &[&str], label: &str) -> Result<()> {
    let got: Vec<&str> = record.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::WrongHeader {
            path: label.to_owned(),
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Parses a call log, keeping valid rows and reporting the rest.
///
/// Fails outright if the header is wrong or more than
/// [`MALFORMED_TOLERANCE`] of the data rows are malformed.
pub fn parse_call_records<R: Read>(reader: R, label: &str) -> Result<(Vec<CallRecord>, ParseReport)> {
    let mut csv = csv_reader(reader);
    let header = csv.headers().map_err(|source| Error::Csv {
        path: label.to_owned(),
        source,
    })?;
    check_header(header, &CALL_HEADER, label)?;

    let mut records = Vec::new();
    let mut report = ParseReport::default();
    let mut locked: Option<TsFormat> = None;

    for row in csv.records() {
        let row = row.map_err(|source| Error::Csv {
            path: label.to_owned(),
            source,
        })?;
        let line = row_line(&row);
        let reject = |reason: String, report: &mut ParseReport| {
            report.rejected.push(RejectedRow { line, reason });
        };

        if row.len() != CALL_HEADER.len() {
            reject(
                format!("expected {} fields, got {}", CALL_HEADER.len(), row.len()),
                &mut report,
            );
            continue;
        }
        let ego = row[0].trim();
        let alter = row[1].trim();
        if ego.is_empty() || alter.is_empty() {
            reject("empty ego_id or alter_id".to_owned(), &mut report);
            continue;
        }
        if ego == alter {
            reject(format!("ego and alter are the same id `{ego}`"), &mut report);
            continue;
        }
        let (timestamp, format) = match parse_timestamp(row[2].trim(), locked) {
            Ok(parsed) => parsed,
            Err(reason) => {
                reject(reason, &mut report);
                continue;
            }
        };
        let direction: Direction = match row[3].trim().parse() {
            Ok(d) => d,
            Err(reason) => {
                reject(reason, &mut report);
                continue;
            }
        };
        let duration_field = row[4].trim();
        let duration_s = if duration_field.is_empty() {
            None
        } else {
            match duration_field.parse::<u64>() {
                Ok(d) => Some(d),
                Err(_) => {
                    reject(
                        format!("`{duration_field}` is not a non-negative duration"),
                        &mut report,
                    );
                    continue;
                }
            }
        };

        locked = Some(format);
        report.accepted += 1;
        records.push(CallRecord {
            ego_id: EgoId::new(ego),
            alter_id: AlterId::new(alter),
            timestamp,
            direction,
            duration_s,
        });
    }

    let total = report.total();
    if total > 0 && report.rejected.len() as f64 > MALFORMED_TOLERANCE * total as f64 {
        return Err(Error::TooManyMalformed {
            path: label.to_owned(),
            rejected: report.rejected.len(),
            total,
            threshold: MALFORMED_TOLERANCE * 100.0,
        });
    }
    Ok((records, report))
}

/// Parses a call log from disk, decompressing gzip when present.
pub fn parse_call_records_path(path: &Path) -> Result<(Vec<CallRecord>, ParseReport)> {
    let reader = open_input(path)?;
    parse_call_records(reader, &path.display().to_string())
}

fn parse_score(field: &str) -> std::result::Result<f64, String> {
    let score: f64 = field
        .parse()
        .map_err(|_| format!("`{field}` is not a number"))?;
    if !score.is_finite() || !(TRAIT_SCALE_MIN..=TRAIT_SCALE_MAX).contains(&score) {
        return Err(format!(
            "score {field} outside [{TRAIT_SCALE_MIN}, {TRAIT_SCALE_MAX}]"
        ));
    }
    Ok(score)
}

/// Parses trait questionnaires. A second row for an already accepted ego is
/// fatal; out-of-scale scores reject the row.
pub fn parse_trait_profiles<R: Read>(
    reader: R,
    label: &str,
) -> Result<(BTreeMap<EgoId, TraitProfile>, ParseReport)> {
    let mut csv = csv_reader(reader);
    let header = csv.headers().map_err(|source| Error::Csv {
        path: label.to_owned(),
        source,
    })?;
    check_header(header, &TRAIT_HEADER, label)?;

    let mut profiles = BTreeMap::new();
    let mut report = ParseReport::default();

    for row in csv.records() {
        let row = row.map_err(|source| Error::Csv {
            path: label.to_owned(),
            source,
        })?;
        let line = row_line(&row);

        if row.len() != TRAIT_HEADER.len() {
            report.rejected.push(RejectedRow {
                line,
                reason: format!("expected {} fields, got {}", TRAIT_HEADER.len(), row.len()),
            });
            continue;
        }
        let ego = row[0].trim();
        if ego.is_empty() {
            report.rejected.push(RejectedRow {
                line,
                reason: "empty ego_id".to_owned(),
            });
            continue;
        }
        let ego = EgoId::new(ego);
        let mut scores = [0.0_f64; 5];
        let mut bad = None;
        for (slot, field) in scores.iter_mut().zip(row.iter().skip(1)) {
            match parse_score(field) {
                Ok(score) => *slot = score,
                Err(reason) => {
                    bad = Some(reason);
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            report.rejected.push(RejectedRow { line, reason });
            continue;
        }
        if profiles.contains_key(&ego) {
            return Err(Error::DuplicateProfile(ego));
        }
        report.accepted += 1;
        profiles.insert(
            ego.clone(),
            TraitProfile {
                ego_id: ego,
                extraversion: scores[0],
                agreeableness: scores[1],
                conscientiousness: scores[2],
                emotional_stability: scores[3],
                openness: scores[4],
            },
        );
    }
    Ok((profiles, report))
}

/// Parses trait questionnaires from disk.
pub fn parse_trait_profiles_path(path: &Path) -> Result<(BTreeMap<EgoId, TraitProfile>, ParseReport)> {
    let reader = open_input(path)?;
    parse_trait_profiles(reader, &path.display().to_string())
}

/// How long each observation interval lasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalLength {
    /// Fixed number of days per interval.
    Days(u32),
    /// Calendar months, clamped at short month ends.
    CalendarMonths(u32),
}

/// Splits the study window into `n` contiguous half-open intervals.
pub fn partition_intervals(
    study_start: DateTime<Utc>,
    n_intervals: u32,
    length: IntervalLength,
) -> Result<Vec<IntervalSpec>> {
    if n_intervals < 2 {
        return Err(Error::TooFewIntervals {
            min: 2,
            got: n_intervals,
        });
    }
    match length {
        IntervalLength::Days(0) | IntervalLength::CalendarMonths(0) => {
            return Err(Error::EmptyIntervalLength)
        }
        _ => {}
    }
    let boundary = |k: u32| -> DateTime<Utc> {
        match length {
            IntervalLength::Days(days) => study_start + Duration::days(i64::from(days) * i64::from(k)),
            IntervalLength::CalendarMonths(months) => study_start + Months::new(months * k),
        }
    };
    Ok((0..n_intervals)
        .map(|k| IntervalSpec {
            index: k + 1,
            start: boundary(k),
            end: boundary(k + 1),
        })
        .collect())
}

/// Counts outgoing calls per (ego, interval, alter). Incoming calls and calls
/// outside every interval are dropped; a timestamp on a boundary instant
/// lands in the later interval because intervals are half-open.
pub fn build_networks(records: &[CallRecord], intervals: &[IntervalSpec]) -> Networks {
    let mut counts: BTreeMap<(EgoId, u32), BTreeMap<AlterId, u64>> = BTreeMap::new();
    for record in records {
        if record.direction != Direction::Outgoing {
            continue;
        }
        let Some(interval) = intervals.iter().find(|iv| iv.contains(record.timestamp)) else {
            continue;
        };
        *counts
            .entry((record.ego_id.clone(), interval.index))
            .or_default()
            .entry(record.alter_id.clone())
            .or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|((ego_id, interval_index), call_counts)| EgoIntervalNetwork {
            ego_id,
            interval_index,
            call_counts,
        })
        .collect()
}

/// Keeps the egos that clear both activity thresholds in every interval.
/// An ego with no network in some interval is dropped even at thresholds
/// `(0, 0)`.
pub fn retain_active_egos(
    networks: &Networks,
    intervals: &[IntervalSpec],
    min_calls: u64,
    min_alters: usize,
) -> BTreeSet<EgoId> {
    networks
        .egos()
        .into_iter()
        .filter(|ego| {
            intervals.iter().all(|iv| {
                networks
                    .get(ego, iv.index)
                    .map(|net| net.total_calls() >= min_calls && net.size() >= min_alters)
                    .unwrap_or(false)
            })
        })
        .collect()
}

/// Writes networks to the canonical snapshot CSV, sorted by ego, interval,
/// alter.
pub fn write_network_snapshot<W: Write>(networks: &Networks, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "{}", SNAPSHOT_HEADER.join(","))?;
    for network in networks.iter() {
        for (alter, count) in &network.call_counts {
            writeln!(
                writer,
                "{},{},{},{}",
                network.ego_id, network.interval_index, alter, count
            )?;
        }
    }
    Ok(())
}

/// Reads a snapshot CSV back into networks. Snapshots are tool-written, so
/// any malformed row is fatal.
pub fn read_network_snapshot<R: Read>(reader: R, label: &str) -> Result<Networks> {
    let mut csv = csv_reader(reader);
    let header = csv.headers().map_err(|source| Error::Csv {
        path: label.to_owned(),
        source,
    })?;
    check_header(header, &SNAPSHOT_HEADER, label)?;

    let mut counts: BTreeMap<(EgoId, u32), BTreeMap<AlterId, u64>> = BTreeMap::new();
    for row in csv.records() {
        let row = row.map_err(|source| Error::Csv {
            path: label.to_owned(),
            source,
        })?;
        let line = row_line(&row);
        let bad = |reason: String| Error::BadSnapshotRow {
            path: label.to_owned(),
            line,
            reason,
        };
        if row.len() != SNAPSHOT_HEADER.len() {
            return Err(bad(format!("expected {} fields", SNAPSHOT_HEADER.len())));
        }
        let ego = row[0].trim();
        let alter = row[2].trim();
        if ego.is_empty() || alter.is_empty() {
            return Err(bad("empty ego_id or alter_id".to_owned()));
        }
        let interval: u32 = row[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{}` is not an interval index", &row[1])))?;
        let count: u64 = row[3]
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{}` is not a call count", &row[3])))?;
        if count == 0 {
            return Err(bad("zero call count".to_owned()));
        }
        let prev = counts
            .entry((EgoId::new(ego), interval))
            .or_default()
            .insert(AlterId::new(alter), count);
        if prev.is_some() {
            return Err(bad(format!("duplicate alter `{alter}`")));
        }
    }
    Ok(counts
        .into_iter()
        .map(|((ego_id, interval_index), call_counts)| EgoIntervalNetwork {
            ego_id,
            interval_index,
            call_counts,
        })
        .collect())
}

/// Reads a snapshot CSV from disk.
pub fn read_network_snapshot_path(path: &Path) -> Result<Networks> {
    let reader = open_input(path)?;
    read_network_snapshot(reader, &path.display().to_string())
}
