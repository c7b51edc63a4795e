//! Brute-force reference counts computed straight from ground truth.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};

use super::GroundTruth;
use crate::occupancy::SectorCountSeries;

/// For every minute of `day` and every counted flight, tests each interval
/// for membership and tallies. Only sectors with a non-zero minute appear.
pub fn oracle_sector_counts(truth: &GroundTruth, day: NaiveDate) -> BTreeMap<String, SectorCountSeries> {
    let midnight = Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).unwrap());
    let next_midnight = midnight + Duration::days(1);
    let touching: Vec<_> = truth
        .flights
        .iter()
        .filter(|f| f.counted && f.departure < next_midnight && f.arrival > midnight)
        .collect();
    let mut out: BTreeMap<String, SectorCountSeries> = BTreeMap::new();
    for minute in 0..1440 {
        let t = midnight + Duration::minutes(minute);
        for f in &touching {
            for iv in &f.intervals {
                if iv.entry <= t && t < iv.exit {
                    let series = out
                        .entry(iv.sector.clone())
                        .or_insert_with(|| SectorCountSeries::empty(&iv.sector, day));
                    series.buckets[minute as usize].flights.push(f.flight_ref.clone());
                }
            }
        }
    }
    for series in out.values_mut() {
        for b in &mut series.buckets {
            b.flights.sort();
        }
    }
    out
}

/// Airborne minutes of counted flights that fall on `day`.
pub fn airborne_minutes_on(truth: &GroundTruth, day: NaiveDate) -> u64 {
    let midnight = Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).unwrap());
    let next_midnight = midnight + Duration::days(1);
    truth
        .flights
        .iter()
        .filter(|f| f.counted)
        .map(|f| {
            let from = f.departure.max(midnight);
            let to = f.arrival.min(next_midnight);
            (to - from).num_minutes().max(0) as u64
        })
        .sum()
}
