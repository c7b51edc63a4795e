//! Consolidated per-flight documents (the FI collection).

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::message::{
    parse_message, serialize_message, ArrivalPayload, DeparturePayload, MsgType, Payload, Qualifier,
    RawMessage, SectorsPayload, TrackPayload,
};

/// Layout version written into every document.
pub const BUILD_VERSION: u32 = 1;

/// Most recent message of one kind: the stored record line and its parsed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot<P> {
    pub raw: String,
    pub msg_time: DateTime<Utc>,
    pub seq: u64,
    pub parsed: P,
}

/// Compact trace of every message seen for the flight, kept so that
/// message-order anomalies remain detectable after slots keep only the
/// latest message of each kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MessageNote {
    pub msg_type: MsgType,
    pub msg_time: DateTime<Utc>,
    pub seq: u64,
    /// Departure time for departures, arrival time for arrivals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_time: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<Qualifier>,
    /// Departure carried inside an arrival message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedded_departure: Option<(DateTime<Utc>, Qualifier)>,
}

impl MessageNote {
    fn of(msg: &RawMessage) -> Self {
        let (event_time, qualifier, embedded_departure) = match &msg.payload {
            Payload::Departure(p) => (Some(p.departure_time), Some(p.qualifier), None),
            Payload::Arrival(p) => (Some(p.arrival_time), Some(p.arrival_qualifier), p.departure),
            _ => (None, None, None),
        };
        MessageNote {
            msg_type: msg.msg_type(),
            msg_time: msg.msg_time,
            seq: msg.seq,
            event_time,
            qualifier,
            embedded_departure,
        }
    }
}

/// One airborne minute of a flight.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketEntry {
    pub time: DateTime<Utc>,
    pub sector: String,
    pub track: Option<TrackPayload>,
}

impl BucketEntry {
    pub fn has_track(&self) -> bool {
        self.track.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightDocument {
    pub flight_ref: String,
    pub departure: Option<Slot<DeparturePayload>>,
    pub arrival: Option<Slot<ArrivalPayload>>,
    pub sectors: Option<Slot<SectorsPayload>>,
    pub track: Option<Slot<TrackPayload>>,
    pub history: Vec<MessageNote>,
    pub dms_buckets: Vec<BucketEntry>,
    pub build_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("no messages for flight `{0}` in the lookback window")]
    NoMessages(String),
    #[error("corrupt document: {0}")]
    Corrupt(String),
}

fn newer<P>(slot: &Option<Slot<P>>, msg: &RawMessage) -> bool {
    slot.as_ref()
        .map_or(true, |s| (s.msg_time, s.seq) < msg.recency_key())
}

fn slot_of<P>(msg: &RawMessage, parsed: P) -> Slot<P> {
    Slot {
        raw: serialize_message(msg),
        msg_time: msg.msg_time,
        seq: msg.seq,
        parsed,
    }
}

/// Builds the document from every message of the flight in the window.
/// Each slot keeps the message with the greatest `(msgTime, seq)`.
pub fn build_from_messages(flight_ref: &str, msgs: &[RawMessage]) -> Result<FlightDocument, DocumentError> {
    let mut doc = FlightDocument {
        flight_ref: flight_ref.to_string(),
        departure: None,
        arrival: None,
        sectors: None,
        track: None,
        history: Vec::with_capacity(msgs.len()),
        dms_buckets: Vec::new(),
        build_version: BUILD_VERSION,
    };
    for msg in msgs.iter().filter(|m| m.flight_ref == flight_ref) {
        doc.history.push(MessageNote::of(msg));
        match &msg.payload {
            Payload::Departure(p) if newer(&doc.departure, msg) => doc.departure = Some(slot_of(msg, p.clone())),
            Payload::Arrival(p) if newer(&doc.arrival, msg) => doc.arrival = Some(slot_of(msg, p.clone())),
            Payload::Sectors(p) if newer(&doc.sectors, msg) => doc.sectors = Some(slot_of(msg, p.clone())),
            Payload::Track(p) if newer(&doc.track, msg) => doc.track = Some(slot_of(msg, p.clone())),
            _ => {}
        }
    }
    if doc.history.is_empty() {
        return Err(DocumentError::NoMessages(flight_ref.to_string()));
    }
    doc.history.sort_by_key(|n| (n.msg_time, n.seq));
    Ok(doc)
}

// On-disk form: slots as their raw record lines (parsed companions are
// re-derived on load), buckets run-length encoded by sector.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredDocument {
    flight_ref: String,
    build_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    departure_information: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arrival_information: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flight_sectors: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_information: Option<String>,
    history: Vec<MessageNote>,
    #[serde(rename = "dms:buckets")]
    dms_buckets: Vec<BucketRun>,
}

#[derive(Serialize, Deserialize)]
struct BucketRun {
    sector: String,
    start: DateTime<Utc>,
    minutes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track: Option<TrackPayload>,
}

fn run_length(buckets: &[BucketEntry]) -> Vec<BucketRun> {
    let mut runs: Vec<BucketRun> = Vec::new();
    for b in buckets {
        if let Some(last) = runs.last_mut() {
            let contiguous = last.start + Duration::minutes(last.minutes as i64) == b.time;
            if contiguous && last.sector == b.sector && last.track.is_none() && b.track.is_none() {
                last.minutes += 1;
                continue;
            }
        }
        runs.push(BucketRun {
            sector: b.sector.clone(),
            start: b.time,
            minutes: 1,
            track: b.track.clone(),
        });
    }
    runs
}

fn parse_slot<P>(
    raw: Option<String>,
    kind: MsgType,
    pick: impl Fn(Payload) -> Option<P>,
) -> Result<Option<Slot<P>>, DocumentError> {
    let Some(raw) = raw else { return Ok(None) };
    let msg = parse_message(&raw).map_err(|e| DocumentError::Corrupt(e.to_string()))?;
    if msg.msg_type() != kind {
        return Err(DocumentError::Corrupt(format!("{kind} slot holds {}", msg.msg_type())));
    }
    let (msg_time, seq) = msg.recency_key();
    let parsed = pick(msg.payload).expect("kind checked");
    Ok(Some(Slot {
        raw,
        msg_time,
        seq,
        parsed,
    }))
}

impl FlightDocument {
    pub fn to_json_line(&self) -> String {
        let stored = StoredDocument {
            flight_ref: self.flight_ref.clone(),
            build_version: self.build_version,
            departure_information: self.departure.as_ref().map(|s| s.raw.clone()),
            arrival_information: self.arrival.as_ref().map(|s| s.raw.clone()),
            flight_sectors: self.sectors.as_ref().map(|s| s.raw.clone()),
            track_information: self.track.as_ref().map(|s| s.raw.clone()),
            history: self.history.clone(),
            dms_buckets: run_length(&self.dms_buckets),
        };
        serde_json::to_string(&stored).expect("document encoding is infallible")
    }

    pub fn from_json_line(line: &str) -> Result<Self, DocumentError> {
        let stored: StoredDocument =
            serde_json::from_str(line).map_err(|e| DocumentError::Corrupt(e.to_string()))?;
        let mut dms_buckets = Vec::new();
        for run in stored.dms_buckets {
            for m in 0..run.minutes {
                dms_buckets.push(BucketEntry {
                    time: run.start + Duration::minutes(m as i64),
                    sector: run.sector.clone(),
                    track: run.track.clone(),
                });
            }
        }
        Ok(FlightDocument {
            departure: parse_slot(stored.departure_information, MsgType::DepartureInformation, |p| match p {
                Payload::Departure(d) => Some(d),
                _ => None,
            })?,
            arrival: parse_slot(stored.arrival_information, MsgType::ArrivalInformation, |p| match p {
                Payload::Arrival(a) => Some(a),
                _ => None,
            })?,
            sectors: parse_slot(stored.flight_sectors, MsgType::FlightSectors, |p| match p {
                Payload::Sectors(s) => Some(s),
                _ => None,
            })?,
            track: parse_slot(stored.track_information, MsgType::TrackInformation, |p| match p {
                Payload::Track(t) => Some(t),
                _ => None,
            })?,
            flight_ref: stored.flight_ref,
            history: stored.history,
            dms_buckets,
            build_version: stored.build_version,
        })
    }

    /// Number of messages of each kind that went into the document.
    pub fn message_counts(&self) -> BTreeMap<MsgType, usize> {
        let mut out = BTreeMap::new();
        for n in &self.history {
            *out.entry(n.msg_type).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::Milestone;
    use crate::time::parse_utc;

    fn t(s: &str) -> DateTime<Utc> {
        parse_utc(s).unwrap()
    }

    fn departure(at: &str, seq: u64, dep: &str) -> RawMessage {
        RawMessage {
            flight_ref: "F1".into(),
            msg_time: t(at),
            seq,
            payload: Payload::Departure(DeparturePayload {
                departure_time: t(dep),
                qualifier: Qualifier::Actual,
            }),
        }
    }

    fn sectors(at: &str, seq: u64) -> RawMessage {
        RawMessage {
            flight_ref: "F1".into(),
            msg_time: t(at),
            seq,
            payload: Payload::Sectors(SectorsPayload {
                milestones: vec![Milestone {
                    sector: "S1".into(),
                    entry_offset_minutes: 0,
                }],
            }),
        }
    }

    #[test]
    fn most_recent_message_wins() {
        let msgs = vec![
            departure("2018-03-14T10:00:00Z", 1, "2018-03-14T10:00:00Z"),
            departure("2018-03-14T10:05:00Z", 2, "2018-03-14T10:04:00Z"),
        ];
        let doc = build_from_messages("F1", &msgs).unwrap();
        let slot = doc.departure.unwrap();
        assert_eq!(slot.msg_time, t("2018-03-14T10:05:00Z"));
        assert_eq!(slot.parsed.departure_time, t("2018-03-14T10:04:00Z"));
        assert_eq!(parse_message(&slot.raw).unwrap().seq, 2);
    }

    #[test]
    fn seq_breaks_time_ties() {
        let msgs = vec![
            departure("2018-03-14T10:00:00Z", 7, "2018-03-14T10:02:00Z"),
            departure("2018-03-14T10:00:00Z", 3, "2018-03-14T10:01:00Z"),
        ];
        let doc = build_from_messages("F1", &msgs).unwrap();
        assert_eq!(doc.departure.unwrap().seq, 7);
    }

    #[test]
    fn partial_documents_are_allowed() {
        let doc = build_from_messages("F1", &[sectors("2018-03-14T10:00:00Z", 1)]).unwrap();
        assert!(doc.departure.is_none());
        assert!(doc.sectors.is_some());
        assert!(doc.dms_buckets.is_empty());
        assert_eq!(
            build_from_messages("F2", &[sectors("2018-03-14T10:00:00Z", 1)]),
            Err(DocumentError::NoMessages("F2".into()))
        );
    }

    #[test]
    fn stored_form_round_trips() {
        let msgs = vec![
            departure("2018-03-14T10:00:00Z", 1, "2018-03-14T10:00:00Z"),
            sectors("2018-03-14T10:02:00Z", 2),
        ];
        let mut doc = build_from_messages("F1", &msgs).unwrap();
        for m in 0..5 {
            doc.dms_buckets.push(BucketEntry {
                time: t("2018-03-14T10:00:00Z") + Duration::minutes(m),
                sector: "S1".into(),
                track: (m == 2).then(|| TrackPayload {
                    latitude: 40.0,
                    longitude: -73.0,
                    altitude: 30000.0,
                    ground_speed: 420.0,
                    heading: 90.0,
                }),
            });
        }
        let line = doc.to_json_line();
        assert!(line.contains("dms:buckets"));
        assert_eq!(FlightDocument::from_json_line(&line).unwrap(), doc);
    }
}
