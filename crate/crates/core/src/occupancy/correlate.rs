use chrono::{DateTime, Duration, Utc};

use crate::message::{Qualifier, TrackPayload};
use crate::prep::document::{BucketEntry, FlightDocument, Slot};
use crate::time::floor_minute;

pub const DEFAULT_DWELL_MIN: i64 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorInterval {
    pub sector: String,
    pub entry: DateTime<Utc>,
    pub exit: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationConfig {
    /// Dwell assumed in the last sector when no usable arrival time exists.
    pub default_dwell_min: i64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            default_dwell_min: DEFAULT_DWELL_MIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CorrelationStatus {
    Correlated,
    NoSectors,
    NoActualDeparture,
    /// Arrival at or before departure; the flight cannot be counted.
    InconsistentTimes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correlation {
    pub status: CorrelationStatus,
    pub intervals: Vec<SectorInterval>,
}

impl Correlation {
    fn empty(status: CorrelationStatus) -> Self {
        Correlation {
            status,
            intervals: Vec::new(),
        }
    }
}

/// The ACTUAL departure time of the flight: the departure slot when it is
/// ACTUAL, otherwise the departure carried by the arrival message when that
/// one is ACTUAL.
pub fn actual_departure(doc: &FlightDocument) -> Option<DateTime<Utc>> {
    if let Some(d) = doc.departure.as_ref().map(|s| &s.parsed) {
        if d.qualifier == Qualifier::Actual {
            return Some(d.departure_time);
        }
    }
    match doc.arrival.as_ref().and_then(|s| s.parsed.departure) {
        Some((t, Qualifier::Actual)) => Some(t),
        _ => None,
    }
}

/// Converts the relative sector milestones into absolute entry/exit times.
pub fn correlate_flight(doc: &FlightDocument, cfg: &CorrelationConfig) -> Correlation {
    let Some(sectors) = doc.sectors.as_ref() else {
        return Correlation::empty(CorrelationStatus::NoSectors);
    };
    let Some(departure) = actual_departure(doc) else {
        return Correlation::empty(CorrelationStatus::NoActualDeparture);
    };
    let arrival = doc.arrival.as_ref().map(|s| s.parsed.arrival_time);
    if arrival.is_some_and(|a| a <= departure) {
        return Correlation::empty(CorrelationStatus::InconsistentTimes);
    }

    let milestones = &sectors.parsed.milestones;
    let entries: Vec<DateTime<Utc>> = milestones
        .iter()
        .map(|m| departure + Duration::minutes(m.entry_offset_minutes as i64))
        .collect();
    let intervals = milestones
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let entry = entries[k];
            let exit = match entries.get(k + 1) {
                Some(next) => *next,
                None => match arrival {
                    Some(a) if a > entry => a,
                    _ => entry + Duration::minutes(cfg.default_dwell_min),
                },
            };
            SectorInterval {
                sector: m.sector.clone(),
                entry,
                exit,
            }
        })
        .collect();
    Correlation {
        status: CorrelationStatus::Correlated,
        intervals,
    }
}

/// Expands one flight's contiguous intervals into minute buckets.
///
/// A bucket starting at minute `m` belongs to an interval when
/// `floor(entry) <= m < exit`. Where two consecutive intervals both claim the
/// minute that holds their shared boundary, the later interval keeps it, so
/// every airborne minute lands in exactly one sector. The track sample is
/// attached to the bucket of the minute it was reported in.
pub fn bucketize_intervals(
    intervals: &[SectorInterval],
    track: Option<&Slot<TrackPayload>>,
) -> Vec<BucketEntry> {
    let track_minute = track.map(|s| floor_minute(s.msg_time));
    let mut out = Vec::new();
    for (k, iv) in intervals.iter().enumerate() {
        let mut end = iv.exit;
        if let Some(next) = intervals.get(k + 1) {
            end = end.min(floor_minute(next.entry));
        }
        let mut m = floor_minute(iv.entry);
        while m < end {
            let track = match (track_minute, track) {
                (Some(tm), Some(slot)) if tm == m => Some(slot.parsed.clone()),
                _ => None,
            };
            out.push(BucketEntry {
                time: m,
                sector: iv.sector.clone(),
                track,
            });
            m += Duration::minutes(1);
        }
    }
    out
}
