//! Append-only daily message collections.
//!
//! Layout under the data root:
//!
//! ```text
//! raw/<YYYY-MM-DD>/segment-<n>.log     seq<TAB><message line>\n, append-only
//! raw/<YYYY-MM-DD>/index-<field>.idx   <value><TAB><segment><TAB><byte offset>\n
//! ```
//!
//! Records are assigned to the day of their `msgTime`. Indices are sidecars
//! that are only created on request and then kept up to date by later
//! ingests. Readers only ever look at newline-terminated records, so a record
//! that is still being written is invisible to them.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{Duration, NaiveDate};
use thiserror::Error;

use crate::fsutil;
use crate::message::{parse_message, serialize_message, MessageError, MsgType, RawMessage};
use crate::time::{format_day, parse_day};

pub const DEFAULT_LOOKBACK_DAYS: u32 = 5;
const DEFAULT_SEGMENT_MAX_BYTES: u64 = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexField {
    FlightRef,
    MsgType,
}

impl IndexField {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexField::FlightRef => "flightRef",
            IndexField::MsgType => "msgType",
        }
    }

    fn key_of(self, msg: &RawMessage) -> &str {
        match self {
            IndexField::FlightRef => &msg.flight_ref,
            IndexField::MsgType => msg.msg_type().as_str(),
        }
    }
}

impl FromStr for IndexField {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, StoreError> {
        match s {
            "flightRef" => Ok(IndexField::FlightRef),
            "msgType" => Ok(IndexField::MsgType),
            other => Err(StoreError::UnknownField(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexState {
    Absent,
    Built,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexDescriptor {
    pub field: IndexField,
    pub state: IndexState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    Parse(MessageError),
    WrongDay { msg_day: NaiveDate },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based position in the offered input.
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub day: NaiveDate,
    pub accepted: usize,
    pub rejected: usize,
    pub bytes_stored: u64,
    pub rejections: Vec<Rejection>,
}

impl IngestReport {
    fn empty(day: NaiveDate) -> Self {
        IngestReport {
            day,
            accepted: 0,
            rejected: 0,
            bytes_stored: 0,
            rejections: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("storage failure while ingesting {}: {source} (accepted {} before failing)", format_day(partial.day), partial.accepted)]
    StorageFailure {
        partial: IngestReport,
        #[source]
        source: io::Error,
    },
    #[error("no raw collection for {}", format_day(*.0))]
    MissingCollection(NaiveDate),
    #[error("unknown index field `{0}`")]
    UnknownField(String),
    #[error("lookback must be at least one day")]
    InvalidLookback,
    #[error("corrupt record in {path} at byte {offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Loc {
    segment: u32,
    offset: u64,
}

/// The raw message store rooted at `<root>/raw`.
#[derive(Debug)]
pub struct RawStore {
    dir: PathBuf,
    segment_max_bytes: u64,
    probes: AtomicU64,
    writers: Mutex<HashMap<NaiveDate, Arc<Mutex<()>>>>,
}

impl RawStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = root.as_ref().join("raw");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(RawStore {
            dir,
            segment_max_bytes: DEFAULT_SEGMENT_MAX_BYTES,
            probes: AtomicU64::new(0),
            writers: Mutex::new(HashMap::new()),
        })
    }

    /// Caps segment size; a new segment is started once the current one
    /// reaches `bytes`.
    pub fn with_segment_max_bytes(mut self, bytes: u64) -> Self {
        self.segment_max_bytes = bytes.max(1);
        self
    }

    pub fn day_dir(&self, day: NaiveDate) -> PathBuf {
        self.dir.join(format_day(day))
    }

    pub fn has_day(&self, day: NaiveDate) -> bool {
        self.day_dir(day).is_dir()
    }

    /// Number of stored records decoded since the store was opened (or the
    /// counter last reset). Indexed lookups decode only the records they hit.
    pub fn records_probed(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn reset_probe_counter(&self) {
        self.probes.store(0, Ordering::Relaxed);
    }

    /// Days that have a collection, ascending.
    pub fn days(&self) -> Result<Vec<NaiveDate>, StoreError> {
        let mut days: Vec<NaiveDate> = fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| parse_day(e.file_name().to_str()?))
            .collect();
        days.sort();
        Ok(days)
    }

    fn writer_lock(&self, day: NaiveDate) -> Arc<Mutex<()>> {
        let mut map = self.writers.lock().unwrap();
        map.entry(day).or_default().clone()
    }

    /// Appends every parseable line whose `msgTime` falls on `day`.
    pub fn ingest_day<I, S>(&self, lines: I, day: NaiveDate) -> Result<IngestReport, StoreError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut report = IngestReport::empty(day);
        let mut accepted = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            match parse_message(line.as_ref()) {
                Ok(msg) if msg.msg_time.date_naive() == day => accepted.push(msg),
                Ok(msg) => {
                    report.rejected += 1;
                    report.rejections.push(Rejection {
                        line: i + 1,
                        reason: RejectReason::WrongDay {
                            msg_day: msg.msg_time.date_naive(),
                        },
                    });
                }
                Err(e) => {
                    report.rejected += 1;
                    report.rejections.push(Rejection {
                        line: i + 1,
                        reason: RejectReason::Parse(e),
                    });
                }
            }
        }
        let lock = self.writer_lock(day);
        let _guard = lock.lock().unwrap();
        let dir = self.day_dir(day);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        if accepted.is_empty() {
            return Ok(report);
        }
        let (mut segment, mut seg_len, last_seq) = self.writer_position(&dir)?;
        let mut next_seq = last_seq + 1;

        let built: Vec<IndexField> = [IndexField::FlightRef, IndexField::MsgType]
            .into_iter()
            .filter(|f| index_path(&dir, *f).exists())
            .collect();

        struct Batch {
            segment: u32,
            bytes: Vec<u8>,
            locs: Vec<(usize, Loc)>,
        }
        let mut batches = vec![Batch {
            segment,
            bytes: Vec::new(),
            locs: Vec::new(),
        }];
        for (k, msg) in accepted.iter_mut().enumerate() {
            if seg_len >= self.segment_max_bytes {
                segment += 1;
                seg_len = 0;
                batches.push(Batch {
                    segment,
                    bytes: Vec::new(),
                    locs: Vec::new(),
                });
            }
            msg.seq = next_seq;
            next_seq += 1;
            let record = encode_record(msg);
            let batch = batches.last_mut().unwrap();
            batch.locs.push((
                k,
                Loc {
                    segment,
                    offset: seg_len,
                },
            ));
            seg_len += record.len() as u64;
            batch.bytes.extend_from_slice(record.as_bytes());
        }
        for batch in &batches {
            if let Err(source) = self.flush(&dir, batch.segment, &batch.bytes, &built, &accepted, &batch.locs) {
                return Err(StoreError::StorageFailure {
                    partial: report,
                    source,
                });
            }
            report.accepted += batch.locs.len();
            report.bytes_stored += batch.bytes.len() as u64;
        }
        Ok(report)
    }

    fn flush(
        &self,
        dir: &Path,
        segment: u32,
        bytes: &[u8],
        built: &[IndexField],
        msgs: &[RawMessage],
        locs: &[(usize, Loc)],
    ) -> io::Result<()> {
        if bytes.is_empty() {
            return Ok(());
        }
        fsutil::append_synced(&segment_path(dir, segment), bytes)?;
        for field in built {
            let mut out = String::new();
            for (i, loc) in locs {
                push_index_entry(&mut out, field.key_of(&msgs[*i]), *loc);
            }
            fsutil::append_synced(&index_path(dir, *field), out.as_bytes())?;
        }
        Ok(())
    }

    /// Current last segment, its (repaired) length and the last assigned seq.
    fn writer_position(&self, dir: &Path) -> Result<(u32, u64, u64), StoreError> {
        let segments = list_segments(dir)?;
        let Some(&last) = segments.last() else {
            return Ok((0, 0, 0));
        };
        let path = segment_path(dir, last);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let complete = complete_prefix(&bytes);
        if complete.len() < bytes.len() {
            // drop a torn tail left by an interrupted write
            let f = fs::OpenOptions::new()
                .write(true)
                .open(&path)
                .map_err(io_err(&path))?;
            f.set_len(complete.len() as u64).map_err(io_err(&path))?;
        }
        let mut last_seq = 0;
        if let Some(line) = complete[..complete.len().saturating_sub(1)]
            .rsplit(|b| *b == b'\n')
            .next()
            .filter(|l| !l.is_empty())
        {
            last_seq = parse_seq(line).ok_or_else(|| StoreError::Corrupt {
                path: path.clone(),
                offset: (complete.len() - line.len() - 1) as u64,
                reason: "bad seq prefix".into(),
            })?;
        } else if segments.len() > 1 {
            // empty last segment: look at the previous one
            let prev = segment_path(dir, segments[segments.len() - 2]);
            let snap = read_complete(&prev)?;
            if let Some(line) = snap[..snap.len().saturating_sub(1)].rsplit(|b| *b == b'\n').next() {
                last_seq = parse_seq(line).unwrap_or(0);
            }
        }
        Ok((last, complete.len() as u64, last_seq))
    }

    /// Ensures the requested indices exist, building missing ones with a
    /// single scan. Returns one descriptor per requested field.
    pub fn ensure_indices(
        &self,
        day: NaiveDate,
        fields: &[IndexField],
    ) -> Result<BTreeSet<IndexDescriptor>, StoreError> {
        let dir = self.day_dir(day);
        if !dir.is_dir() {
            return Err(StoreError::MissingCollection(day));
        }
        let wanted: BTreeSet<IndexField> = fields.iter().copied().collect();
        let missing: Vec<IndexField> = wanted
            .iter()
            .copied()
            .filter(|f| !index_path(&dir, *f).exists())
            .collect();
        if !missing.is_empty() {
            let lock = self.writer_lock(day);
            let _guard = lock.lock().unwrap();
            let snapshot = DaySnapshot::load(&dir, day, &[])?;
            let mut outs = vec![String::new(); missing.len()];
            for (loc, msg) in snapshot.decode_all(&self.probes)? {
                for (field, out) in missing.iter().zip(outs.iter_mut()) {
                    push_index_entry(out, field.key_of(&msg), loc);
                }
            }
            for (field, out) in missing.iter().zip(outs) {
                fsutil::write_atomic(&index_path(&dir, *field), out.as_bytes())
                    .map_err(io_err(&index_path(&dir, *field)))?;
            }
        }
        Ok(wanted
            .into_iter()
            .map(|field| IndexDescriptor {
                field,
                state: IndexState::Built,
            })
            .collect())
    }

    pub fn index_state(&self, day: NaiveDate, field: IndexField) -> IndexState {
        if index_path(&self.day_dir(day), field).exists() {
            IndexState::Built
        } else {
            IndexState::Absent
        }
    }

    /// Loads a consistent snapshot of one day, or `None` if it was never ingested.
    pub fn snapshot(&self, day: NaiveDate) -> Result<Option<DaySnapshot>, StoreError> {
        let dir = self.day_dir(day);
        if !dir.is_dir() {
            return Ok(None);
        }
        DaySnapshot::load(&dir, day, &[IndexField::FlightRef, IndexField::MsgType]).map(Some)
    }

    /// Every record of `day` in ingestion order.
    pub fn read_day(&self, day: NaiveDate) -> Result<Vec<RawMessage>, StoreError> {
        let snap = self.snapshot(day)?.ok_or(StoreError::MissingCollection(day))?;
        Ok(snap.decode_all(&self.probes)?.into_iter().map(|(_, m)| m).collect())
    }

    /// Records of `day` whose `field` equals `value`, in ingestion order.
    /// Uses the index when built, otherwise scans.
    pub fn query(
        &self,
        day: NaiveDate,
        field: IndexField,
        value: &str,
    ) -> Result<Vec<RawMessage>, StoreError> {
        let snap = self.snapshot(day)?.ok_or(StoreError::MissingCollection(day))?;
        snap.query(field, value, &self.probes)
    }

    pub fn scan_flight_refs(&self, day: NaiveDate) -> Result<BTreeSet<String>, StoreError> {
        let snap = self.snapshot(day)?.ok_or(StoreError::MissingCollection(day))?;
        snap.flight_refs(&self.probes)
    }

    /// Messages for `flight_ref` over the `lookback_days` days ending at
    /// `end_day` (inclusive), restricted to `types`, ordered by
    /// `(msgTime, seq)`. Days never ingested contribute nothing.
    pub fn fetch_flight_messages(
        &self,
        flight_ref: &str,
        end_day: NaiveDate,
        lookback_days: u32,
        types: &[MsgType],
    ) -> Result<Vec<RawMessage>, StoreError> {
        self.open_window(end_day, lookback_days)?
            .fetch(flight_ref, types)
    }

    /// Snapshots of the lookback window, for repeated per-flight fetches.
    pub fn open_window(&self, end_day: NaiveDate, lookback_days: u32) -> Result<Window<'_>, StoreError> {
        if lookback_days == 0 {
            return Err(StoreError::InvalidLookback);
        }
        let mut days = Vec::new();
        for back in (0..lookback_days as i64).rev() {
            let day = end_day - Duration::days(back);
            if let Some(s) = self.snapshot(day)? {
                days.push(s);
            }
        }
        Ok(Window { store: self, days })
    }

    /// Deletes every collection strictly before `day`; returns the removed days.
    pub fn prune_before(&self, day: NaiveDate) -> Result<Vec<NaiveDate>, StoreError> {
        let mut removed = Vec::new();
        for d in self.days()?.into_iter().filter(|d| *d < day) {
            let dir = self.day_dir(d);
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
            removed.push(d);
        }
        Ok(removed)
    }
}

/// A set of day snapshots used for lookback fetches.
pub struct Window<'a> {
    store: &'a RawStore,
    days: Vec<DaySnapshot>,
}

impl Window<'_> {
    pub fn fetch(&self, flight_ref: &str, types: &[MsgType]) -> Result<Vec<RawMessage>, StoreError> {
        let mut out = Vec::new();
        for snap in &self.days {
            out.extend(
                snap.query(IndexField::FlightRef, flight_ref, &self.store.probes)?
                    .into_iter()
                    .filter(|m| types.contains(&m.msg_type())),
            );
        }
        out.sort_by_key(|m| m.recency_key());
        Ok(out)
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.days.iter().map(|s| s.day)
    }
}

/// Immutable in-memory view of a day's collection.
pub struct DaySnapshot {
    day: NaiveDate,
    dir: PathBuf,
    segments: Vec<(u32, Vec<u8>)>,
    indices: HashMap<IndexField, HashMap<String, Vec<Loc>>>,
}

impl DaySnapshot {
    fn load(dir: &Path, day: NaiveDate, index_fields: &[IndexField]) -> Result<Self, StoreError> {
        let mut segments = Vec::new();
        for n in list_segments(dir)? {
            segments.push((n, read_complete(&segment_path(dir, n))?));
        }
        let mut indices = HashMap::new();
        for field in index_fields {
            let path = index_path(dir, *field);
            let Ok(bytes) = fs::read(&path) else { continue };
            let text = String::from_utf8_lossy(complete_prefix(&bytes)).into_owned();
            let mut map: HashMap<String, Vec<Loc>> = HashMap::new();
            for line in text.lines() {
                let mut parts = line.rsplitn(3, '\t');
                let (Some(off), Some(seg), Some(key)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(StoreError::Corrupt {
                        path: path.clone(),
                        offset: 0,
                        reason: format!("bad index entry {line:?}"),
                    });
                };
                let (Ok(segment), Ok(offset)) = (seg.parse(), off.parse()) else {
                    return Err(StoreError::Corrupt {
                        path: path.clone(),
                        offset: 0,
                        reason: format!("bad index entry {line:?}"),
                    });
                };
                let loc = Loc { segment, offset };
                // entries past our snapshot belong to records we cannot see yet
                let visible = segments
                    .iter()
                    .any(|(n, b)| *n == segment && (offset as usize) < b.len());
                if visible {
                    map.entry(key.to_string()).or_default().push(loc);
                }
            }
            indices.insert(*field, map);
        }
        Ok(DaySnapshot {
            day,
            dir: dir.to_path_buf(),
            segments,
            indices,
        })
    }

    pub fn day(&self) -> NaiveDate {
        self.day
    }

    pub fn has_index(&self, field: IndexField) -> bool {
        self.indices.contains_key(&field)
    }

    fn decode_at(&self, loc: Loc, probes: &AtomicU64) -> Result<RawMessage, StoreError> {
        let (_, bytes) = self
            .segments
            .iter()
            .find(|(n, _)| *n == loc.segment)
            .ok_or_else(|| self.corrupt(loc, "index points at a missing segment"))?;
        let start = loc.offset as usize;
        let end = bytes[start..]
            .iter()
            .position(|b| *b == b'\n')
            .map(|p| start + p)
            .ok_or_else(|| self.corrupt(loc, "unterminated record"))?;
        probes.fetch_add(1, Ordering::Relaxed);
        decode_record(&bytes[start..end]).map_err(|reason| self.corrupt(loc, &reason))
    }

    fn corrupt(&self, loc: Loc, reason: &str) -> StoreError {
        StoreError::Corrupt {
            path: segment_path(&self.dir, loc.segment),
            offset: loc.offset,
            reason: reason.to_string(),
        }
    }

    fn decode_all(&self, probes: &AtomicU64) -> Result<Vec<(Loc, RawMessage)>, StoreError> {
        let mut out = Vec::new();
        for (n, bytes) in &self.segments {
            let mut offset = 0usize;
            for line in bytes.split_inclusive(|b| *b == b'\n') {
                let loc = Loc {
                    segment: *n,
                    offset: offset as u64,
                };
                probes.fetch_add(1, Ordering::Relaxed);
                let msg = decode_record(&line[..line.len() - 1]).map_err(|r| self.corrupt(loc, &r))?;
                out.push((loc, msg));
                offset += line.len();
            }
        }
        Ok(out)
    }

    fn query(&self, field: IndexField, value: &str, probes: &AtomicU64) -> Result<Vec<RawMessage>, StoreError> {
        match self.indices.get(&field) {
            Some(index) => index
                .get(value)
                .map(|locs| locs.iter().map(|l| self.decode_at(*l, probes)).collect())
                .unwrap_or_else(|| Ok(Vec::new())),
            None => Ok(self
                .decode_all(probes)?
                .into_iter()
                .map(|(_, m)| m)
                .filter(|m| field.key_of(m) == value)
                .collect()),
        }
    }

    fn flight_refs(&self, probes: &AtomicU64) -> Result<BTreeSet<String>, StoreError> {
        match self.indices.get(&IndexField::FlightRef) {
            Some(index) => Ok(index.keys().cloned().collect()),
            None => Ok(self
                .decode_all(probes)?
                .into_iter()
                .map(|(_, m)| m.flight_ref)
                .collect()),
        }
    }
}

fn segment_path(dir: &Path, n: u32) -> PathBuf {
    dir.join(format!("segment-{n}.log"))
}

fn index_path(dir: &Path, field: IndexField) -> PathBuf {
    dir.join(format!("index-{}.idx", field.as_str()))
}

fn list_segments(dir: &Path) -> Result<Vec<u32>, StoreError> {
    let mut out: Vec<u32> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name();
            let name = name.to_str()?;
            name.strip_prefix("segment-")?.strip_suffix(".log")?.parse().ok()
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

fn read_complete(path: &Path) -> Result<Vec<u8>, StoreError> {
    let mut bytes = fs::read(path).map_err(io_err(path))?;
    let n = complete_prefix(&bytes).len();
    bytes.truncate(n);
    Ok(bytes)
}

fn complete_prefix(bytes: &[u8]) -> &[u8] {
    match bytes.iter().rposition(|b| *b == b'\n') {
        Some(p) => &bytes[..=p],
        None => &[],
    }
}

fn encode_record(msg: &RawMessage) -> String {
    let mut body = msg.clone();
    body.seq = 0;
    format!("{}\t{}\n", msg.seq, serialize_message(&body))
}

fn parse_seq(line: &[u8]) -> Option<u64> {
    let tab = line.iter().position(|b| *b == b'\t')?;
    std::str::from_utf8(&line[..tab]).ok()?.parse().ok()
}

fn decode_record(line: &[u8]) -> Result<RawMessage, String> {
    let seq = parse_seq(line).ok_or("bad seq prefix")?;
    let tab = line.iter().position(|b| *b == b'\t').unwrap();
    let body = std::str::from_utf8(&line[tab + 1..]).map_err(|e| e.to_string())?;
    let mut msg = parse_message(body).map_err(|e| e.to_string())?;
    msg.seq = seq;
    Ok(msg)
}

fn push_index_entry(out: &mut String, key: &str, loc: Loc) {
    use std::fmt::Write;
    let _ = writeln!(out, "{key}\t{}\t{}", loc.segment, loc.offset);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{DeparturePayload, Payload, Qualifier};
    use crate::time::parse_utc;

    fn dep(flight: &str, at: &str) -> String {
        let t = parse_utc(at).unwrap();
        serialize_message(&RawMessage {
            flight_ref: flight.into(),
            msg_time: t,
            seq: 0,
            payload: Payload::Departure(DeparturePayload {
                departure_time: t,
                qualifier: Qualifier::Actual,
            }),
        })
    }

    fn day(s: &str) -> NaiveDate {
        parse_day(s).unwrap()
    }

    #[test]
    fn empty_ingest() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        let r = store.ingest_day(Vec::<String>::new(), day("2018-03-14")).unwrap();
        assert_eq!((r.accepted, r.rejected, r.bytes_stored), (0, 0, 0));
    }

    #[test]
    fn ingest_and_reread_in_seq_order() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        let lines: Vec<String> = (0..5)
            .map(|i| dep(&format!("F{i}"), &format!("2018-03-14T1{i}:00:00Z")))
            .collect();
        let r = store.ingest_day(&lines, day("2018-03-14")).unwrap();
        assert_eq!(r.accepted, 5);
        assert!(r.bytes_stored > 0);
        let back = store.read_day(day("2018-03-14")).unwrap();
        let seqs: Vec<u64> = back.iter().map(|m| m.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3, 4, 5]);
        assert_eq!(back[3].flight_ref, "F3");
    }

    #[test]
    fn wrong_day_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        let lines = vec![dep("F1", "2018-03-15T00:10:00Z"), "nope".to_string()];
        let r = store.ingest_day(&lines, day("2018-03-14")).unwrap();
        assert_eq!((r.accepted, r.rejected), (0, 2));
        assert_eq!(
            r.rejections[0].reason,
            RejectReason::WrongDay {
                msg_day: day("2018-03-15")
            }
        );
        assert!(matches!(r.rejections[1].reason, RejectReason::Parse(_)));
    }

    #[test]
    fn segments_roll_over_and_seq_continues() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap().with_segment_max_bytes(300);
        let d = day("2018-03-14");
        let lines: Vec<String> = (0..10).map(|i| dep(&format!("F{i}"), "2018-03-14T10:00:00Z")).collect();
        store.ingest_day(&lines[..6], d).unwrap();
        store.ensure_indices(d, &[IndexField::FlightRef]).unwrap();
        store.ingest_day(&lines[6..], d).unwrap();
        assert!(list_segments(&store.day_dir(d)).unwrap().len() > 2);
        let all = store.read_day(d).unwrap();
        assert_eq!(all.iter().map(|m| m.seq).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
        // the index kept up with the later ingest
        assert_eq!(store.query(d, IndexField::FlightRef, "F8").unwrap().len(), 1);
    }

    #[test]
    fn ensure_indices_is_idempotent() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        let d = day("2018-03-14");
        store.ingest_day([dep("F1", "2018-03-14T10:00:00Z")], d).unwrap();
        let a = store.ensure_indices(d, &[IndexField::FlightRef, IndexField::MsgType]).unwrap();
        let b = store.ensure_indices(d, &[IndexField::MsgType, IndexField::FlightRef]).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.state == IndexState::Built));
        assert!(store.ensure_indices(d, &[]).unwrap().is_empty());
        assert!(matches!(
            "tail".parse::<IndexField>(),
            Err(StoreError::UnknownField(_))
        ));
        assert!(matches!(
            store.ensure_indices(day("2018-01-01"), &[IndexField::FlightRef]),
            Err(StoreError::MissingCollection(_))
        ));
    }

    #[test]
    fn torn_tail_is_invisible_and_repaired() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        let d = day("2018-03-14");
        store.ingest_day([dep("F1", "2018-03-14T10:00:00Z")], d).unwrap();
        let seg = segment_path(&store.day_dir(d), 0);
        fsutil::append_synced(&seg, b"2\t{\"msgType\":\"depa").unwrap();
        assert_eq!(store.read_day(d).unwrap().len(), 1);
        store.ingest_day([dep("F2", "2018-03-14T11:00:00Z")], d).unwrap();
        let all = store.read_day(d).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].seq, 2);
    }

    #[test]
    fn lookback_window() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RawStore::open(tmp.path()).unwrap();
        store.ingest_day([dep("A", "2018-03-08T23:00:00Z")], day("2018-03-08")).unwrap();
        store.ingest_day([dep("A", "2018-03-13T23:00:00Z")], day("2018-03-13")).unwrap();
        store.ingest_day([dep("A", "2018-03-14T01:00:00Z")], day("2018-03-14")).unwrap();
        let got = store
            .fetch_flight_messages("A", day("2018-03-14"), 5, &MsgType::ALL)
            .unwrap();
        assert_eq!(got.len(), 2);
        assert!(got[0].msg_time < got[1].msg_time);
        assert!(store
            .fetch_flight_messages("B", day("2018-03-14"), 5, &MsgType::ALL)
            .unwrap()
            .is_empty());
        assert!(matches!(
            store.fetch_flight_messages("A", day("2018-03-14"), 0, &MsgType::ALL),
            Err(StoreError::InvalidLookback)
        ));
        let removed = store.prune_before(day("2018-03-10")).unwrap();
        assert_eq!(removed, vec![day("2018-03-08")]);
    }
}
