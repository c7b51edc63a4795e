//! Partition bookkeeping for flight documents.
//!
//! `st.ledger` holds per-day, per-partition document statistics (JSON);
//! `sa.ledger` maps each flight reference to its partition, one
//! `<flightRef>\t<partition>` line per assignment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::{self, decode_component, encode_component};

pub const DEFAULT_PARTITIONS: u32 = 16;
const LEDGER_VERSION: u32 = 1;

pub type PartitionId = u32;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger corrupt: {0}")]
    LedgerCorrupt(String),
    #[error("flight `{0}` has no partition assignment")]
    NotAssigned(String),
    #[error("ledger i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Stable partition choice: 64-bit FNV-1a followed by a murmur3 finaliser,
/// reduced modulo the partition count. The mapping is part of the on-disk
/// contract and must not change between releases.
pub fn partition_for(flight_ref: &str, partitions: u32) -> PartitionId {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in flight_ref.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    (h % partitions as u64) as PartitionId
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionStats {
    pub document_count: u64,
    pub byte_estimate: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionStatus {
    pub id: PartitionId,
    pub document_count: u64,
    pub byte_estimate: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StatusFile {
    version: u32,
    partitions: u32,
    days: BTreeMap<NaiveDate, Vec<PartitionStats>>,
}

#[derive(Debug, Clone)]
pub struct PartitionLedger {
    partitions: u32,
    assignments: BTreeMap<String, PartitionId>,
    days: BTreeMap<NaiveDate, Vec<PartitionStats>>,
}

impl PartitionLedger {
    pub fn new(partitions: u32) -> Self {
        assert!(partitions > 0, "partition count must be positive");
        PartitionLedger {
            partitions,
            assignments: BTreeMap::new(),
            days: BTreeMap::new(),
        }
    }

    pub fn partition_count(&self) -> u32 {
        self.partitions
    }

    /// Assigns (or re-confirms) the partition of `flight_ref`.
    pub fn assign(&mut self, flight_ref: &str) -> PartitionId {
        let p = partition_for(flight_ref, self.partitions);
        self.assignments.insert(flight_ref.to_string(), p);
        p
    }

    pub fn lookup(&self, flight_ref: &str) -> Result<PartitionId, LedgerError> {
        self.assignments
            .get(flight_ref)
            .copied()
            .ok_or_else(|| LedgerError::NotAssigned(flight_ref.to_string()))
    }

    pub fn assigned(&self) -> usize {
        self.assignments.len()
    }

    /// Replaces the statistics recorded for `day`.
    pub fn record_day(&mut self, day: NaiveDate, stats: Vec<PartitionStats>) {
        assert_eq!(stats.len(), self.partitions as usize);
        self.days.insert(day, stats);
    }

    pub fn forget_day(&mut self, day: NaiveDate) {
        self.days.remove(&day);
    }

    /// Totals across all recorded days.
    pub fn partitions(&self) -> Vec<PartitionStatus> {
        (0..self.partitions)
            .map(|id| {
                let (docs, bytes) = self.days.values().fold((0, 0), |(d, b), v| {
                    (d + v[id as usize].document_count, b + v[id as usize].byte_estimate)
                });
                PartitionStatus {
                    id,
                    document_count: docs,
                    byte_estimate: bytes,
                }
            })
            .collect()
    }

    pub fn day_stats(&self, day: NaiveDate) -> Option<&[PartitionStats]> {
        self.days.get(&day).map(Vec::as_slice)
    }

    fn st_path(root: &Path) -> PathBuf {
        root.join("st.ledger")
    }

    fn sa_path(root: &Path) -> PathBuf {
        root.join("sa.ledger")
    }

    /// Loads both ledger files, or starts empty if neither exists.
    pub fn load(root: &Path, partitions: u32) -> Result<Self, LedgerError> {
        let mut ledger = PartitionLedger::new(partitions);
        let st = Self::st_path(root);
        match fs::read_to_string(&st) {
            Ok(text) => {
                let file: StatusFile = serde_json::from_str(&text)
                    .map_err(|e| LedgerError::LedgerCorrupt(format!("{}: {e}", st.display())))?;
                if file.version != LEDGER_VERSION {
                    return Err(LedgerError::LedgerCorrupt(format!(
                        "unsupported ledger version {}",
                        file.version
                    )));
                }
                if file.partitions != partitions {
                    return Err(LedgerError::LedgerCorrupt(format!(
                        "ledger has {} partitions, configuration asks for {partitions}",
                        file.partitions
                    )));
                }
                if file.days.values().any(|v| v.len() != partitions as usize) {
                    return Err(LedgerError::LedgerCorrupt("day statistics of wrong width".into()));
                }
                ledger.days = file.days;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => return Err(LedgerError::Io { path: st, source }),
        }
        let sa = Self::sa_path(root);
        match fs::read_to_string(&sa) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    let corrupt = || LedgerError::LedgerCorrupt(format!("{} line {}", sa.display(), i + 1));
                    let (key, part) = line.split_once('\t').ok_or_else(corrupt)?;
                    let key = decode_component(key).ok_or_else(corrupt)?;
                    let part: PartitionId = part.parse().map_err(|_| corrupt())?;
                    if part >= partitions {
                        return Err(LedgerError::LedgerCorrupt(format!(
                            "`{key}` assigned to missing partition {part}"
                        )));
                    }
                    ledger.assignments.insert(key, part);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => return Err(LedgerError::Io { path: sa, source }),
        }
        Ok(ledger)
    }

    pub fn save(&self, root: &Path) -> Result<(), LedgerError> {
        let st = Self::st_path(root);
        let file = StatusFile {
            version: LEDGER_VERSION,
            partitions: self.partitions,
            days: self.days.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("ledger encoding is infallible");
        fsutil::write_atomic(&st, text.as_bytes()).map_err(|source| LedgerError::Io { path: st, source })?;

        let sa = Self::sa_path(root);
        let mut text = String::new();
        for (k, p) in &self.assignments {
            let _ = writeln!(text, "{}\t{p}", encode_component(k));
        }
        fsutil::write_atomic(&sa, text.as_bytes()).map_err(|source| LedgerError::Io { path: sa, source })
    }
}
