//! Daily preparation: raw messages in, consolidated flight documents and
//! per-sector minute counts out.
//!
//! [`run_preparation`] runs five steps with a barrier between each:
//!
//! 1. ensure the `flightRef` and `msgType` indices on the day's raw collection;
//! 2. scan the distinct flight references of the day;
//! 3. build one document per flight from the most recent message of each
//!    kind found in the lookback window, and assign it a partition;
//! 4. correlate each document into sector intervals and minute buckets
//!    (written to FI and DMS-A);
//! 5. reduce the buckets into per-sector counts (DMS-B).
//!
//! Counting also takes in flights seen on the neighbouring days whose buckets
//! reach into the prepared day, and reads the next day's messages when that
//! day is already ingested, so flights crossing midnight are counted on both
//! days.

pub mod document;
pub mod ledger;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{Duration as ChronoDuration, NaiveDate};
use rayon::prelude::*;
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::message::MsgType;
use crate::occupancy::{self, CorrelationConfig, FlightOccupancy, PiError, PiStore};
use crate::raw_store::{IndexField, RawStore, StoreError, Window, DEFAULT_LOOKBACK_DAYS};
use crate::time::format_day;

pub use document::{build_from_messages, BucketEntry, DocumentError, FlightDocument, Slot};
pub use ledger::{LedgerError, PartitionId, PartitionLedger, PartitionStats, DEFAULT_PARTITIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepConfig {
    pub lookback_days: u32,
    pub partitions: u32,
    pub correlation: CorrelationConfig,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lookback_days: DEFAULT_LOOKBACK_DAYS,
            partitions: DEFAULT_PARTITIONS,
            correlation: CorrelationConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PrepError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quarantined {
    pub flight_ref: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct PrepReport {
    pub day: Option<NaiveDate>,
    pub flights_seen: usize,
    pub documents_built: usize,
    /// Documents that produced at least one sector interval.
    pub documents_correlated: usize,
    /// Flights counted on this day that have no message on it.
    pub carried_over: usize,
    pub sectors_counted: usize,
    pub fi_bytes: u64,
    pub quarantined: Vec<Quarantined>,
    pub step_elapsed: [Duration; 5],
}

/// Flight documents grouped by partition: `fi/<partition>/<day>.jsonl`.
#[derive(Debug, Clone)]
pub struct FiStore {
    dir: PathBuf,
}

impl FiStore {
    pub fn open(root: impl AsRef<Path>) -> Self {
        FiStore {
            dir: root.as_ref().join("fi"),
        }
    }

    fn path(&self, partition: PartitionId, day: NaiveDate) -> PathBuf {
        self.dir
            .join(format!("{partition:02}"))
            .join(format!("{}.jsonl", format_day(day)))
    }

    /// Replaces the day's documents; returns per-partition statistics.
    pub fn write_day(
        &self,
        day: NaiveDate,
        partitions: u32,
        docs: &[(PartitionId, &FlightDocument)],
    ) -> Result<Vec<PartitionStats>, PrepError> {
        let mut texts = vec![String::new(); partitions as usize];
        let mut stats = vec![PartitionStats::default(); partitions as usize];
        for (p, doc) in docs {
            let line = doc.to_json_line();
            stats[*p as usize].document_count += 1;
            stats[*p as usize].byte_estimate += line.len() as u64 + 1;
            texts[*p as usize].push_str(&line);
            texts[*p as usize].push('\n');
        }
        for (p, text) in texts.iter().enumerate() {
            let path = self.path(p as PartitionId, day);
            if text.is_empty() {
                match fs::remove_file(&path) {
                    Ok(()) => {}
                    Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                    Err(source) => return Err(PrepError::Io { path, source }),
                }
                continue;
            }
            write_atomic(&path, text.as_bytes()).map_err(|source| PrepError::Io { path, source })?;
        }
        Ok(stats)
    }

    pub fn read_partition(&self, partition: PartitionId, day: NaiveDate) -> Result<Vec<FlightDocument>, PrepError> {
        let path = self.path(partition, day);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(PrepError::Io { path, source }),
        };
        text.lines()
            .map(|l| FlightDocument::from_json_line(l).map_err(PrepError::from))
            .collect()
    }

    pub fn read_day(&self, day: NaiveDate, partitions: u32) -> Result<Vec<FlightDocument>, PrepError> {
        let mut out = Vec::new();
        for p in 0..partitions {
            out.extend(self.read_partition(p, day)?);
        }
        Ok(out)
    }

    /// Finds one flight's document through the partition ledger.
    pub fn read_document(
        &self,
        ledger: &PartitionLedger,
        flight_ref: &str,
        day: NaiveDate,
    ) -> Result<Option<FlightDocument>, PrepError> {
        let p = ledger.lookup(flight_ref)?;
        Ok(self
            .read_partition(p, day)?
            .into_iter()
            .find(|d| d.flight_ref == flight_ref))
    }
}

/// Builds one flight's document from the lookback window ending at `end_day`.
pub fn build_flight_document(
    raw: &RawStore,
    flight_ref: &str,
    end_day: NaiveDate,
    lookback_days: u32,
) -> Result<FlightDocument, PrepError> {
    let window = raw.open_window(end_day, lookback_days)?;
    build_in_window(&window, flight_ref)
}

fn build_in_window(window: &Window<'_>, flight_ref: &str) -> Result<FlightDocument, PrepError> {
    let msgs = window.fetch(flight_ref, &MsgType::ALL)?;
    Ok(build_from_messages(flight_ref, &msgs)?)
}

fn build_all(
    window: &Window<'_>,
    refs: &BTreeSet<String>,
) -> (Vec<FlightDocument>, Vec<Quarantined>) {
    let results: Vec<(String, Result<FlightDocument, PrepError>)> = refs
        .par_iter()
        .map(|r| (r.clone(), build_in_window(window, r)))
        .collect();
    let mut docs = Vec::with_capacity(results.len());
    let mut quarantined = Vec::new();
    for (flight_ref, res) in results {
        match res {
            Ok(d) => docs.push(d),
            Err(e) => quarantined.push(Quarantined {
                flight_ref,
                reason: e.to_string(),
            }),
        }
    }
    (docs, quarantined)
}

/// Runs the five preparation steps for `day` under `root`.
pub fn run_preparation(root: &Path, day: NaiveDate, cfg: &PrepConfig) -> Result<PrepReport, PrepError> {
    let raw = RawStore::open(root)?;
    let mut report = PrepReport {
        day: Some(day),
        ..PrepReport::default()
    };
    let indexed = [IndexField::FlightRef, IndexField::MsgType];

    let clock = Instant::now();
    raw.ensure_indices(day, &indexed)?;
    report.step_elapsed[0] = clock.elapsed();

    let clock = Instant::now();
    let refs = raw.scan_flight_refs(day)?;
    report.flights_seen = refs.len();
    report.step_elapsed[1] = clock.elapsed();

    let clock = Instant::now();
    let window = raw.open_window(day, cfg.lookback_days)?;
    let (mut docs, quarantined) = build_all(&window, &refs);
    report.quarantined = quarantined;
    report.documents_built = docs.len();
    let mut ledger = PartitionLedger::load(root, cfg.partitions)?;
    let partitions: Vec<PartitionId> = docs.iter().map(|d| ledger.assign(&d.flight_ref)).collect();
    report.step_elapsed[2] = clock.elapsed();

    let clock = Instant::now();
    let local: Vec<FlightOccupancy> = docs
        .par_iter_mut()
        .map(|d| occupancy::occupy(d, &cfg.correlation))
        .collect();
    report.documents_correlated = local.iter().filter(|o| !o.intervals.is_empty()).count();

    // Counting sees every flight touching the day, with the next day's
    // messages (late arrivals) when they are already ingested.
    let prev = day - ChronoDuration::days(1);
    let next = day + ChronoDuration::days(1);
    let mut counting_refs = refs.clone();
    for neighbour in [prev, next] {
        if raw.has_day(neighbour) {
            raw.ensure_indices(neighbour, &indexed)?;
            counting_refs.extend(raw.scan_flight_refs(neighbour)?);
        }
    }
    let mut occupied: Vec<FlightOccupancy> = if counting_refs.len() == refs.len() && !raw.has_day(next) {
        local
    } else {
        let end = if raw.has_day(next) { next } else { day };
        let window = raw.open_window(end, cfg.lookback_days)?;
        let (mut wide, _) = build_all(&window, &counting_refs);
        wide.par_iter_mut()
            .map(|d| occupancy::occupy(d, &cfg.correlation))
            .filter(|o| refs.contains(&o.flight_ref) || o.buckets.iter().any(|b| b.time.date_naive() == day))
            .collect()
    };
    report.carried_over = occupied.iter().filter(|o| !refs.contains(&o.flight_ref)).count();
    occupied.sort_by(|a, b| a.flight_ref.cmp(&b.flight_ref));

    let fi = FiStore::open(root);
    let pairs: Vec<(PartitionId, &FlightDocument)> = partitions.iter().copied().zip(docs.iter()).collect();
    let stats = fi.write_day(day, cfg.partitions, &pairs)?;
    report.fi_bytes = stats.iter().map(|s| s.byte_estimate).sum();
    ledger.record_day(day, stats);
    ledger.save(root)?;
    let pi = PiStore::open(root);
    pi.write_dms_a(day, &occupied)?;
    report.step_elapsed[3] = clock.elapsed();

    let clock = Instant::now();
    let series = occupancy::reduce_sector_counts(&occupied, day);
    report.sectors_counted = series.len();
    pi.write_dms_b(day, &series)?;
    report.step_elapsed[4] = clock.elapsed();

    Ok(report)
}
