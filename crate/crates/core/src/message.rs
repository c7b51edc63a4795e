//! Flight-lifecycle message schema and its line format.
//!
//! One record per line, each a JSON object:
//!
//! ```text
//! {"msgType":"departureInformation","flightRef":"AAL12-20180314","msgTime":"2018-03-14T12:00:00Z","payload":{"departureTime":"2018-03-14T12:00:00Z","qualifier":"ACTUAL"}}
//! ```
//!
//! `seq` is an ingestion ordinal assigned by the raw store. It is written as an
//! extra `"seq"` key only when non-zero, so freshly parsed feed lines carry
//! `seq == 0`. Unknown keys are ignored on input.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::time::{format_utc, parse_utc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MsgType {
    DepartureInformation,
    TrackInformation,
    FlightSectors,
    ArrivalInformation,
}

impl MsgType {
    /// All kinds, in the order a well-behaved flight emits them.
    pub const ALL: [MsgType; 4] = [
        MsgType::DepartureInformation,
        MsgType::TrackInformation,
        MsgType::FlightSectors,
        MsgType::ArrivalInformation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::DepartureInformation => "departureInformation",
            MsgType::ArrivalInformation => "arrivalInformation",
            MsgType::TrackInformation => "trackInformation",
            MsgType::FlightSectors => "flightSectors",
        }
    }

    /// Position in the desirable emission order.
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MsgType {
    type Err = MessageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| MessageError::UnknownMessageType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Qualifier {
    Actual,
    Estimated,
}

impl Qualifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Qualifier::Actual => "ACTUAL",
            Qualifier::Estimated => "ESTIMATED",
        }
    }
}

impl FromStr for Qualifier {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "ACTUAL" => Ok(Qualifier::Actual),
            "ESTIMATED" => Ok(Qualifier::Estimated),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeparturePayload {
    pub departure_time: DateTime<Utc>,
    pub qualifier: Qualifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalPayload {
    pub arrival_time: DateTime<Utc>,
    pub arrival_qualifier: Qualifier,
    /// Departure time carried in the arrival's flight history, with its qualifier.
    pub departure: Option<(DateTime<Utc>, Qualifier)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackPayload {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: f64,
    pub ground_speed: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Milestone {
    pub sector: String,
    pub entry_offset_minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorsPayload {
    pub milestones: Vec<Milestone>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Departure(DeparturePayload),
    Arrival(ArrivalPayload),
    Track(TrackPayload),
    Sectors(SectorsPayload),
}

impl Payload {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Payload::Departure(_) => MsgType::DepartureInformation,
            Payload::Arrival(_) => MsgType::ArrivalInformation,
            Payload::Track(_) => MsgType::TrackInformation,
            Payload::Sectors(_) => MsgType::FlightSectors,
        }
    }
}

/// One flight-lifecycle message. The message kind is carried by the payload
/// variant, so kind and payload can never disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMessage {
    pub flight_ref: String,
    pub msg_time: DateTime<Utc>,
    pub seq: u64,
    pub payload: Payload,
}

impl RawMessage {
    pub fn msg_type(&self) -> MsgType {
        self.payload.msg_type()
    }

    /// Total order used for "most recent" decisions.
    pub fn recency_key(&self) -> (DateTime<Utc>, u64) {
        (self.msg_time, self.seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("malformed record at `{field}`: {reason}")]
    MalformedRecord { field: String, reason: String },
    #[error("unknown message type `{0}`")]
    UnknownMessageType(String),
    #[error("invariant violated at `{field}`: {reason}")]
    InvariantViolation { field: String, reason: String },
}

impl MessageError {
    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&str> {
        match self {
            MessageError::MalformedRecord { field, .. }
            | MessageError::InvariantViolation { field, .. } => Some(field),
            MessageError::UnknownMessageType(_) => Some("msgType"),
        }
    }
}

fn malformed(field: &str, reason: impl Into<String>) -> MessageError {
    MessageError::MalformedRecord {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn violation(field: &str, reason: impl Into<String>) -> MessageError {
    MessageError::InvariantViolation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Accepted `msgTime` range.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub earliest: DateTime<Utc>,
    pub latest: DateTime<Utc>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            earliest: Utc.with_ymd_and_hms(1990, 1, 1, 0, 0, 0).unwrap(),
            latest: Utc.with_ymd_and_hms(2100, 1, 1, 0, 0, 0).unwrap(),
        }
    }
}

pub fn parse_message(line: &str) -> Result<RawMessage, MessageError> {
    parse_message_with(line, &ParseOptions::default())
}

pub fn parse_message_with(line: &str, opts: &ParseOptions) -> Result<RawMessage, MessageError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| malformed("<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("<record>", "expected an object"))?;

    let msg_type: MsgType = req_str(obj, "msgType", "msgType")?.parse()?;

    let flight_ref = req_str(obj, "flightRef", "flightRef")?;
    if flight_ref.is_empty() {
        return Err(violation("flightRef", "must be non-empty"));
    }

    let msg_time = req_time(obj, "msgTime", "msgTime")?;
    if msg_time < opts.earliest || msg_time >= opts.latest {
        return Err(violation("msgTime", "outside configured epoch range"));
    }

    let seq = match obj.get("seq") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| malformed("seq", "expected a non-negative integer"))?,
    };

    let payload = obj
        .get("payload")
        .ok_or_else(|| malformed("payload", "missing"))?
        .as_object()
        .ok_or_else(|| malformed("payload", "expected an object"))?;

    let payload = match msg_type {
        MsgType::DepartureInformation => Payload::Departure(DeparturePayload {
            departure_time: req_time(payload, "departureTime", "payload.departureTime")?,
            qualifier: req_qualifier(payload, "qualifier", "payload.qualifier")?,
        }),
        MsgType::ArrivalInformation => {
            let departure = match opt_value(payload, "departureTime") {
                None => None,
                Some(_) => {
                    let t = req_time(payload, "departureTime", "payload.departureTime")?;
                    if opt_value(payload, "departureQualifier").is_none() {
                        return Err(violation(
                            "payload.departureQualifier",
                            "required when departureTime is present",
                        ));
                    }
                    let q =
                        req_qualifier(payload, "departureQualifier", "payload.departureQualifier")?;
                    Some((t, q))
                }
            };
            Payload::Arrival(ArrivalPayload {
                arrival_time: req_time(payload, "arrivalTime", "payload.arrivalTime")?,
                arrival_qualifier: req_qualifier(
                    payload,
                    "arrivalQualifier",
                    "payload.arrivalQualifier",
                )?,
                departure,
            })
        }
        MsgType::TrackInformation => {
            let track = TrackPayload {
                latitude: req_f64(payload, "latitude", "payload.latitude")?,
                longitude: req_f64(payload, "longitude", "payload.longitude")?,
                altitude: req_f64(payload, "altitude", "payload.altitude")?,
                ground_speed: req_f64(payload, "groundSpeed", "payload.groundSpeed")?,
                heading: req_f64(payload, "heading", "payload.heading")?,
            };
            check_track(&track)?;
            Payload::Track(track)
        }
        MsgType::FlightSectors => Payload::Sectors(parse_milestones(payload)?),
    };

    Ok(RawMessage {
        flight_ref: flight_ref.to_string(),
        msg_time,
        seq,
        payload,
    })
}

fn opt_value<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn req_str<'a>(obj: &'a Map<String, Value>, key: &str, field: &str) -> Result<&'a str, MessageError> {
    opt_value(obj, key)
        .ok_or_else(|| malformed(field, "missing"))?
        .as_str()
        .ok_or_else(|| malformed(field, "expected a string"))
}

fn req_time(obj: &Map<String, Value>, key: &str, field: &str) -> Result<DateTime<Utc>, MessageError> {
    let s = req_str(obj, key, field)?;
    let t = parse_utc(s).ok_or_else(|| violation(field, format!("not an RFC 3339 timestamp: {s:?}")))?;
    // second resolution
    Ok(Utc.timestamp_opt(t.timestamp(), 0).unwrap())
}

fn req_qualifier(obj: &Map<String, Value>, key: &str, field: &str) -> Result<Qualifier, MessageError> {
    let s = req_str(obj, key, field)?;
    s.parse()
        .map_err(|_| violation(field, format!("expected ACTUAL or ESTIMATED, got {s:?}")))
}

fn req_f64(obj: &Map<String, Value>, key: &str, field: &str) -> Result<f64, MessageError> {
    let v = opt_value(obj, key)
        .ok_or_else(|| malformed(field, "missing"))?
        .as_f64()
        .ok_or_else(|| malformed(field, "expected a number"))?;
    if !v.is_finite() {
        return Err(violation(field, "must be finite"));
    }
    Ok(v)
}

fn check_track(t: &TrackPayload) -> Result<(), MessageError> {
    if !(-90.0..=90.0).contains(&t.latitude) {
        return Err(violation("payload.latitude", "outside [-90, 90]"));
    }
    if !(-180.0..=180.0).contains(&t.longitude) {
        return Err(violation("payload.longitude", "outside [-180, 180]"));
    }
    if t.altitude < 0.0 {
        return Err(violation("payload.altitude", "negative"));
    }
    if t.ground_speed < 0.0 {
        return Err(violation("payload.groundSpeed", "negative"));
    }
    if !(0.0..360.0).contains(&t.heading) {
        return Err(violation("payload.heading", "outside [0, 360)"));
    }
    Ok(())
}

fn parse_milestones(payload: &Map<String, Value>) -> Result<SectorsPayload, MessageError> {
    let list = opt_value(payload, "milestones")
        .ok_or_else(|| malformed("payload.milestones", "missing"))?
        .as_array()
        .ok_or_else(|| malformed("payload.milestones", "expected an array"))?;
    if list.is_empty() {
        return Err(violation("payload.milestones", "must be non-empty"));
    }
    let mut milestones = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| malformed(&format!("payload.milestones[{i}]"), "expected an object"))?;
        let name_field = format!("payload.milestones[{i}].sectorName");
        let sector = req_str(obj, "sectorName", &name_field)?;
        if sector.is_empty() {
            return Err(violation(&name_field, "must be non-empty"));
        }
        let off_field = format!("payload.milestones[{i}].entryOffsetMinutes");
        let offset = opt_value(obj, "entryOffsetMinutes")
            .ok_or_else(|| malformed(&off_field, "missing"))?;
        let offset = offset
            .as_u64()
            .filter(|&o| o <= u32::MAX as u64)
            .ok_or_else(|| violation(&off_field, "expected a non-negative integer"))?
            as u32;
        if let Some(prev) = milestones.last().map(|m: &Milestone| m.entry_offset_minutes) {
            if offset <= prev {
                return Err(violation(&off_field, "offsets must be strictly increasing"));
            }
        }
        milestones.push(Milestone {
            sector: sector.to_string(),
            entry_offset_minutes: offset,
        });
    }
    Ok(SectorsPayload { milestones })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WireRecord<'a> {
    msg_type: &'static str,
    flight_ref: &'a str,
    msg_time: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seq: Option<u64>,
    payload: WirePayload<'a>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum WirePayload<'a> {
    Departure {
        #[serde(rename = "departureTime")]
        departure_time: String,
        qualifier: &'static str,
    },
    Arrival {
        #[serde(rename = "arrivalTime")]
        arrival_time: String,
        #[serde(rename = "arrivalQualifier")]
        arrival_qualifier: &'static str,
        #[serde(rename = "departureTime", skip_serializing_if = "Option::is_none")]
        departure_time: Option<String>,
        #[serde(rename = "departureQualifier", skip_serializing_if = "Option::is_none")]
        departure_qualifier: Option<&'static str>,
    },
    Track {
        latitude: f64,
        longitude: f64,
        altitude: f64,
        #[serde(rename = "groundSpeed")]
        ground_speed: f64,
        heading: f64,
    },
    Sectors {
        milestones: Vec<WireMilestone<'a>>,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WireMilestone<'a> {
    sector_name: &'a str,
    entry_offset_minutes: u32,
}

/// Canonical single-line encoding; absent optional fields are omitted.
pub fn serialize_message(msg: &RawMessage) -> String {
    let payload = match &msg.payload {
        Payload::Departure(p) => WirePayload::Departure {
            departure_time: format_utc(&p.departure_time),
            qualifier: p.qualifier.as_str(),
        },
        Payload::Arrival(p) => WirePayload::Arrival {
            arrival_time: format_utc(&p.arrival_time),
            arrival_qualifier: p.arrival_qualifier.as_str(),
            departure_time: p.departure.map(|(t, _)| format_utc(&t)),
            departure_qualifier: p.departure.map(|(_, q)| q.as_str()),
        },
        Payload::Track(p) => WirePayload::Track {
            latitude: p.latitude,
            longitude: p.longitude,
            altitude: p.altitude,
            ground_speed: p.ground_speed,
            heading: p.heading,
        },
        Payload::Sectors(p) => WirePayload::Sectors {
            milestones: p
                .milestones
                .iter()
                .map(|m| WireMilestone {
                    sector_name: &m.sector,
                    entry_offset_minutes: m.entry_offset_minutes,
                })
                .collect(),
        },
    };
    let record = WireRecord {
        msg_type: msg.msg_type().as_str(),
        flight_ref: &msg.flight_ref,
        msg_time: format_utc(&msg.msg_time),
        seq: (msg.seq != 0).then_some(msg.seq),
        payload,
    };
    serde_json::to_string(&record).expect("message encoding is infallible")
}

/// Per-kind message tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TypeTally {
    counts: [usize; 4],
}

impl TypeTally {
    pub fn add(&mut self, t: MsgType) {
        self.counts[t.rank()] += 1;
    }

    pub fn get(&self, t: MsgType) -> usize {
        self.counts[t.rank()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

impl fmt::Display for TypeTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = MsgType::ALL
            .iter()
            .map(|t| format!("{t}={}", self.get(*t)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub error: MessageError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamSummary {
    pub counts: TypeTally,
    pub errors: Vec<LineError>,
}

/// Parses every line and tallies message kinds; parse failures are collected
/// with their line numbers.
pub fn classify_stream<I, S>(lines: I) -> StreamSummary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut summary = StreamSummary::default();
    for (i, line) in lines.into_iter().enumerate() {
        match parse_message(line.as_ref()) {
            Ok(m) => summary.counts.add(m.msg_type()),
            Err(error) => summary.errors.push(LineError { line: i + 1, error }),
        }
    }
    summary
}
