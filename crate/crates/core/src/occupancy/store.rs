//! Processed-information collections.
//!
//! ```text
//! pi/dms-a-<YYYY-MM-DD>/flights.jsonl   one correlated flight per line
//! pi/dms-b-<YYYY-MM-DD>/<sector>.doc    per-minute counts of one sector
//! pi/dms-b-<YYYY-MM-DD>/_DONE           written last; marks the day prepared
//! ```
//!
//! A `.doc` file is text: a `sector-count v1` header, `sector <name>` and
//! `day <date>` lines, then one `<minute>\t<count>\t<level>\t<flights>` line
//! per occupied minute in ascending order, flights comma-separated. Names are
//! percent-escaped. Minutes not listed hold count 0 at level 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use super::counts::{BucketCount, FlightOccupancy, SectorCountSeries, StoredOccupancy};
use super::correlate::SectorInterval;
use super::uncertainty::UncertaintyLevel;
use crate::fsutil::{decode_component, encode_component};
use crate::time::{format_day, minute_of_day, parse_day, MINUTES_PER_DAY};

const DOC_HEADER: &str = "sector-count v1";
const DONE: &str = "_DONE";

#[derive(Debug, Error)]
pub enum PiError {
    #[error("day {} has not been prepared", format_day(*.0))]
    DayNotPrepared(NaiveDate),
    #[error("corrupt processed document {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PiError + '_ {
    move |source| PiError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct PiStore {
    dir: PathBuf,
}

impl PiStore {
    pub fn open(root: impl AsRef<Path>) -> Self {
        PiStore {
            dir: root.as_ref().join("pi"),
        }
    }

    pub fn dms_a_dir(&self, day: NaiveDate) -> PathBuf {
        self.dir.join(format!("dms-a-{}", format_day(day)))
    }

    pub fn dms_b_dir(&self, day: NaiveDate) -> PathBuf {
        self.dir.join(format!("dms-b-{}", format_day(day)))
    }

    pub fn is_prepared(&self, day: NaiveDate) -> bool {
        self.dms_b_dir(day).join(DONE).exists()
    }

    /// Prepared days, ascending.
    pub fn prepared_days(&self) -> Vec<NaiveDate> {
        let Ok(entries) = fs::read_dir(&self.dir) else {
            return Vec::new();
        };
        let mut days: Vec<NaiveDate> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| parse_day(e.file_name().to_str()?.strip_prefix("dms-b-")?))
            .filter(|d| self.is_prepared(*d))
            .collect();
        days.sort();
        days
    }

    pub fn write_dms_a(&self, day: NaiveDate, flights: &[FlightOccupancy]) -> Result<u64, PiError> {
        let mut text = String::new();
        for f in flights {
            let stored = StoredOccupancy {
                flight_ref: f.flight_ref.clone(),
                status: f.status,
                level: f.level,
                cases: f.cases.clone(),
                intervals: f
                    .intervals
                    .iter()
                    .map(|iv| (iv.sector.clone(), iv.entry, iv.exit))
                    .collect(),
            };
            text.push_str(&serde_json::to_string(&stored).expect("infallible"));
            text.push('\n');
        }
        let dir = self.dms_a_dir(day);
        replace_dir(&dir, &[("flights.jsonl".to_string(), text.clone())])?;
        Ok(text.len() as u64)
    }

    /// Correlated flights as stored; buckets are not persisted in DMS-A.
    pub fn read_dms_a(&self, day: NaiveDate) -> Result<Vec<FlightOccupancy>, PiError> {
        let path = self.dms_a_dir(day).join("flights.jsonl");
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(PiError::DayNotPrepared(day)),
            Err(e) => return Err(io_err(&path)(e)),
        };
        text.lines()
            .map(|line| {
                let s: StoredOccupancy = serde_json::from_str(line).map_err(|e| PiError::Corrupt {
                    path: path.clone(),
                    reason: e.to_string(),
                })?;
                Ok(FlightOccupancy {
                    flight_ref: s.flight_ref,
                    status: s.status,
                    level: s.level,
                    cases: s.cases,
                    intervals: s
                        .intervals
                        .into_iter()
                        .map(|(sector, entry, exit)| SectorInterval { sector, entry, exit })
                        .collect(),
                    buckets: Vec::new(),
                })
            })
            .collect()
    }

    pub fn write_dms_b(&self, day: NaiveDate, series: &BTreeMap<String, SectorCountSeries>) -> Result<u64, PiError> {
        let mut files = Vec::with_capacity(series.len() + 1);
        let mut bytes = 0;
        for s in series.values() {
            let text = encode_series(s);
            bytes += text.len() as u64;
            files.push((format!("{}.doc", encode_component(&s.sector)), text));
        }
        files.push((DONE.to_string(), String::new()));
        replace_dir(&self.dms_b_dir(day), &files)?;
        Ok(bytes)
    }

    pub fn read_dms_b(&self, day: NaiveDate) -> Result<BTreeMap<String, SectorCountSeries>, PiError> {
        if !self.is_prepared(day) {
            return Err(PiError::DayNotPrepared(day));
        }
        let dir = self.dms_b_dir(day);
        let mut out = BTreeMap::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("doc") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let series = decode_series(&text).map_err(|reason| PiError::Corrupt {
                path: path.clone(),
                reason,
            })?;
            out.insert(series.sector.clone(), series);
        }
        Ok(out)
    }

    /// One sector's series; a prepared day without the sector yields zeros.
    pub fn read_series(&self, day: NaiveDate, sector: &str) -> Result<SectorCountSeries, PiError> {
        if !self.is_prepared(day) {
            return Err(PiError::DayNotPrepared(day));
        }
        let path = self.dms_b_dir(day).join(format!("{}.doc", encode_component(sector)));
        match fs::read_to_string(&path) {
            Ok(text) => decode_series(&text).map_err(|reason| PiError::Corrupt { path, reason }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(SectorCountSeries::empty(sector, day)),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Count and uncertainty of `sector` during the minute holding `at`.
    pub fn query_count(&self, sector: &str, at: DateTime<Utc>) -> Result<(u32, UncertaintyLevel), PiError> {
        let series = self.read_series(at.date_naive(), sector)?;
        let b = &series.buckets[minute_of_day(&at)];
        Ok((b.count(), b.uncertainty))
    }
}

/// Writes `files` into a fresh sibling directory and swaps it in for `dir`.
fn replace_dir(dir: &Path, files: &[(String, String)]) -> Result<(), PiError> {
    let parent = dir.parent().expect("pi dirs have a parent");
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let mut staging_name = dir.file_name().unwrap().to_os_string();
    staging_name.push(format!(".staging-{}", std::process::id()));
    let staging = parent.join(staging_name);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir_all(&staging).map_err(io_err(&staging))?;
    for (name, text) in files {
        let path = staging.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::rename(&staging, dir).map_err(io_err(dir))
}

pub(crate) fn encode_series(s: &SectorCountSeries) -> String {
    let mut text = format!(
        "{DOC_HEADER}\nsector {}\nday {}\n",
        encode_component(&s.sector),
        format_day(s.day)
    );
    for (m, b) in s.buckets.iter().enumerate() {
        if b.flights.is_empty() {
            continue;
        }
        let flights: Vec<String> = b.flights.iter().map(|f| encode_component(f)).collect();
        let _ = writeln!(text, "{m}\t{}\t{}\t{}", b.count(), b.uncertainty.as_u8(), flights.join(","));
    }
    text
}

pub(crate) fn decode_series(text: &str) -> Result<SectorCountSeries, String> {
    let mut lines = text.lines();
    if lines.next() != Some(DOC_HEADER) {
        return Err("missing header".into());
    }
    let sector = lines
        .next()
        .and_then(|l| l.strip_prefix("sector "))
        .and_then(decode_component)
        .ok_or("missing sector line")?;
    let day = lines
        .next()
        .and_then(|l| l.strip_prefix("day "))
        .and_then(parse_day)
        .ok_or("missing day line")?;
    let mut series = SectorCountSeries::empty(&sector, day);
    for line in lines {
        let parts: Vec<&str> = line.split('\t').collect();
        let [m, count, level, flights] = parts[..] else {
            return Err(format!("bad bucket line {line:?}"));
        };
        let m: usize = m.parse().map_err(|_| format!("bad minute {m:?}"))?;
        if m >= MINUTES_PER_DAY {
            return Err(format!("minute {m} out of range"));
        }
        let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
        let level: u8 = level.parse().map_err(|_| format!("bad level {level:?}"))?;
        let flights: Vec<String> = flights
            .split(',')
            .map(|f| decode_component(f).ok_or_else(|| format!("bad flight {f:?}")))
            .collect::<Result<_, _>>()?;
        if flights.len() != count {
            return Err(format!("minute {m}: count {count} but {} flights", flights.len()));
        }
        series.buckets[m] = BucketCount {
            uncertainty: UncertaintyLevel::try_from(level)?,
            flights,
        };
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_utc;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 3, 14).unwrap()
    }

    fn sample() -> BTreeMap<String, SectorCountSeries> {
        let mut s = SectorCountSeries::empty("ZNY 42", day());
        s.buckets[720] = BucketCount {
            uncertainty: UncertaintyLevel::Recoverable,
            flights: vec!["A,1".into(), "B".into()],
        };
        BTreeMap::from([(s.sector.clone(), s)])
    }

    #[test]
    fn dms_b_round_trip_and_queries() {
        let tmp = tempfile::tempdir().unwrap();
        let pi = PiStore::open(tmp.path());
        let at = parse_utc("2018-03-14T12:00:40Z").unwrap();
        assert!(matches!(pi.query_count("ZNY 42", at), Err(PiError::DayNotPrepared(_))));
        pi.write_dms_b(day(), &sample()).unwrap();
        assert_eq!(pi.read_dms_b(day()).unwrap(), sample());
        assert_eq!(pi.query_count("ZNY 42", at).unwrap(), (2, UncertaintyLevel::Recoverable));
        assert_eq!(pi.query_count("nowhere", at).unwrap(), (0, UncertaintyLevel::Consistent));
        let next_day = parse_utc("2018-03-15T00:00:00Z").unwrap();
        assert!(matches!(pi.query_count("ZNY 42", next_day), Err(PiError::DayNotPrepared(_))));
        assert_eq!(pi.prepared_days(), vec![day()]);
    }

    #[test]
    fn rewrite_replaces_previous_sectors() {
        let tmp = tempfile::tempdir().unwrap();
        let pi = PiStore::open(tmp.path());
        pi.write_dms_b(day(), &sample()).unwrap();
        pi.write_dms_b(day(), &BTreeMap::new()).unwrap();
        assert!(pi.read_dms_b(day()).unwrap().is_empty());
        assert!(pi.is_prepared(day()));
    }

    #[test]
    fn corrupt_count_is_detected() {
        let text = encode_series(&sample()["ZNY 42"]).replace("\t2\t", "\t3\t");
        assert!(decode_series(&text).is_err());
    }
}
