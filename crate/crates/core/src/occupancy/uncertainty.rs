//! Message-order uncertainty of a flight.
//!
//! Level 1: the four message kinds first appear in the order departure,
//! track, sectors, arrival and the event times agree. Level 2: the count can
//! still be computed but the history shows an estimated-then-actual
//! departure (case 1), a departure issued after the arrival message
//! (case 3), conflicting times for one event (case 4) or some other order
//! inversion. Level 3: the arrival precedes the departure (case 2).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::message::{MsgType, Qualifier};
use crate::prep::document::{BucketEntry, FlightDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum UncertaintyLevel {
    Consistent = 1,
    Recoverable = 2,
    Severe = 3,
}

impl UncertaintyLevel {
    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl From<UncertaintyLevel> for u8 {
    fn from(l: UncertaintyLevel) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for UncertaintyLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(UncertaintyLevel::Consistent),
            2 => Ok(UncertaintyLevel::Recoverable),
            3 => Ok(UncertaintyLevel::Severe),
            _ => Err(format!("uncertainty level {v} outside 1..=3")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConfusionCase {
    EstimatedBeforeActual = 1,
    ArrivalBeforeDeparture = 2,
    DepartureAfterArrival = 3,
    ConflictingEventTimes = 4,
}

impl ConfusionCase {
    pub const ALL: [ConfusionCase; 4] = [
        ConfusionCase::EstimatedBeforeActual,
        ConfusionCase::ArrivalBeforeDeparture,
        ConfusionCase::DepartureAfterArrival,
        ConfusionCase::ConflictingEventTimes,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.number() == n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncertaintyAssessment {
    pub level: UncertaintyLevel,
    pub cases: BTreeSet<ConfusionCase>,
    pub order_inverted: bool,
}

impl UncertaintyAssessment {
    /// The flight's level repeated for each of its buckets.
    pub fn per_bucket(&self, buckets: &[BucketEntry]) -> Vec<UncertaintyLevel> {
        vec![self.level; buckets.len()]
    }
}

pub fn compute_uncertainty(doc: &FlightDocument) -> UncertaintyAssessment {
    let mut cases = BTreeSet::new();
    let notes = &doc.history;

    let departures = notes.iter().filter(|n| n.msg_type == MsgType::DepartureInformation);
    let arrivals = || notes.iter().filter(|n| n.msg_type == MsgType::ArrivalInformation);

    let mut actual_departures = BTreeSet::new();
    let mut estimated_departure = false;
    for n in departures.clone() {
        match (n.event_time, n.qualifier) {
            (Some(t), Some(Qualifier::Actual)) => {
                actual_departures.insert(t);
            }
            (Some(_), Some(Qualifier::Estimated)) => estimated_departure = true,
            _ => {}
        }
    }
    for n in arrivals() {
        match n.embedded_departure {
            Some((t, Qualifier::Actual)) => {
                actual_departures.insert(t);
            }
            Some((_, Qualifier::Estimated)) => estimated_departure = true,
            None => {}
        }
    }
    if estimated_departure && !actual_departures.is_empty() {
        cases.insert(ConfusionCase::EstimatedBeforeActual);
    }

    let arrival_times: BTreeSet<_> = arrivals()
        .filter(|n| n.qualifier == Some(Qualifier::Actual))
        .filter_map(|n| n.event_time)
        .collect();
    if actual_departures.len() > 1 || arrival_times.len() > 1 {
        cases.insert(ConfusionCase::ConflictingEventTimes);
    }

    let first_arrival_msg = arrivals().map(|n| n.msg_time).min();
    if let Some(first_arrival_msg) = first_arrival_msg {
        if departures.clone().any(|n| n.msg_time > first_arrival_msg) {
            cases.insert(ConfusionCase::DepartureAfterArrival);
        }
    }

    let departure_time = crate::occupancy::correlate::actual_departure(doc)
        .or_else(|| doc.departure.as_ref().map(|s| s.parsed.departure_time));
    let arrival_time = doc.arrival.as_ref().map(|s| s.parsed.arrival_time);
    if let (Some(d), Some(a)) = (departure_time, arrival_time) {
        if a <= d {
            cases.insert(ConfusionCase::ArrivalBeforeDeparture);
        }
    }

    // first appearance of each kind must follow the desirable order
    let mut seen = BTreeSet::new();
    let mut first_ranks = Vec::new();
    for n in notes {
        if seen.insert(n.msg_type) {
            first_ranks.push(n.msg_type.rank());
        }
    }
    let order_inverted = first_ranks.windows(2).any(|w| w[0] > w[1]);

    let level = if cases.contains(&ConfusionCase::ArrivalBeforeDeparture) {
        UncertaintyLevel::Severe
    } else if !cases.is_empty() || order_inverted {
        UncertaintyLevel::Recoverable
    } else {
        UncertaintyLevel::Consistent
    };
    UncertaintyAssessment {
        level,
        cases,
        order_inverted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{
        ArrivalPayload, DeparturePayload, Milestone, Payload, RawMessage, SectorsPayload, TrackPayload,
    };
    use crate::prep::document::build_from_messages;
    use crate::time::parse_utc;
    use chrono::{DateTime, Utc};

    fn t(s: &str) -> DateTime<Utc> {
        parse_utc(&format!("2018-03-14T{s}:00Z")).unwrap()
    }

    fn m(at: &str, seq: u64, payload: Payload) -> RawMessage {
        RawMessage {
            flight_ref: "F".into(),
            msg_time: t(at),
            seq,
            payload,
        }
    }

    fn dep(at: &str, seq: u64, time: &str, q: Qualifier) -> RawMessage {
        m(at, seq, Payload::Departure(DeparturePayload { departure_time: t(time), qualifier: q }))
    }

    fn arr(at: &str, seq: u64, time: &str) -> RawMessage {
        m(
            at,
            seq,
            Payload::Arrival(ArrivalPayload {
                arrival_time: t(time),
                arrival_qualifier: Qualifier::Actual,
                departure: None,
            }),
        )
    }

    fn clean() -> Vec<RawMessage> {
        vec![
            dep("12:00", 1, "12:00", Qualifier::Actual),
            m(
                "12:01",
                2,
                Payload::Track(TrackPayload {
                    latitude: 0.0,
                    longitude: 0.0,
                    altitude: 1000.0,
                    ground_speed: 200.0,
                    heading: 0.0,
                }),
            ),
            m(
                "12:02",
                3,
                Payload::Sectors(SectorsPayload {
                    milestones: vec![Milestone { sector: "S".into(), entry_offset_minutes: 0 }],
                }),
            ),
            arr("12:30", 4, "12:30"),
        ]
    }

    fn level(msgs: &[RawMessage]) -> UncertaintyAssessment {
        compute_uncertainty(&build_from_messages("F", msgs).unwrap())
    }

    #[test]
    fn clean_order_is_consistent() {
        let a = level(&clean());
        assert_eq!(a.level, UncertaintyLevel::Consistent);
        assert!(a.cases.is_empty());
    }

    #[test]
    fn estimated_then_actual_is_case_1() {
        let mut msgs = clean();
        msgs.insert(0, dep("11:30", 0, "11:55", Qualifier::Estimated));
        let a = level(&msgs);
        assert_eq!(a.level, UncertaintyLevel::Recoverable);
        assert!(a.cases.contains(&ConfusionCase::EstimatedBeforeActual));
    }

    #[test]
    fn arrival_before_departure_is_severe() {
        let mut msgs = clean();
        msgs[3] = arr("12:30", 4, "11:50");
        assert_eq!(level(&msgs).level, UncertaintyLevel::Severe);
    }

    #[test]
    fn departure_after_arrival_is_case_3() {
        let mut msgs = clean();
        msgs[0] = dep("12:31", 5, "12:00", Qualifier::Actual);
        let a = level(&msgs);
        assert_eq!(a.level, UncertaintyLevel::Recoverable);
        assert!(a.cases.contains(&ConfusionCase::DepartureAfterArrival));
    }

    #[test]
    fn conflicting_times_are_case_4() {
        let mut msgs = clean();
        msgs.insert(0, dep("12:00", 0, "11:57", Qualifier::Actual));
        let a = level(&msgs);
        assert_eq!(a.level, UncertaintyLevel::Recoverable);
        assert_eq!(a.cases, BTreeSet::from([ConfusionCase::ConflictingEventTimes]));
    }

    #[test]
    fn plain_order_inversion_is_recoverable() {
        let mut msgs = clean();
        msgs[2].msg_time = t("12:00");
        msgs[2].seq = 0;
        let a = level(&msgs);
        assert!(a.order_inverted);
        assert_eq!(a.level, UncertaintyLevel::Recoverable);
    }

    #[test]
    fn level_serialises_as_number() {
        assert_eq!(serde_json::to_string(&UncertaintyLevel::Severe).unwrap(), "3");
        assert!(serde_json::from_str::<UncertaintyLevel>("4").is_err());
    }
}
