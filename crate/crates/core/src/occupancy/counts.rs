use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlate::{CorrelationStatus, SectorInterval};
use super::uncertainty::{ConfusionCase, UncertaintyLevel};
use crate::prep::document::BucketEntry;
use crate::time::{day_start, minute_of_day, MINUTES_PER_DAY};

/// One minute of one sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketCount {
    pub uncertainty: UncertaintyLevel,
    /// Flights in the sector during the minute, sorted.
    pub flights: Vec<String>,
}

impl BucketCount {
    pub fn count(&self) -> u32 {
        self.flights.len() as u32
    }
}

impl Default for BucketCount {
    fn default() -> Self {
        BucketCount {
            uncertainty: UncertaintyLevel::Consistent,
            flights: Vec::new(),
        }
    }
}

/// Per-minute aircraft counts of one sector over one UTC day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorCountSeries {
    pub sector: String,
    pub day: NaiveDate,
    pub buckets: Vec<BucketCount>,
}

impl SectorCountSeries {
    pub fn empty(sector: &str, day: NaiveDate) -> Self {
        SectorCountSeries {
            sector: sector.to_string(),
            day,
            buckets: vec![BucketCount::default(); MINUTES_PER_DAY],
        }
    }

    pub fn counts(&self) -> Vec<u32> {
        self.buckets.iter().map(BucketCount::count).collect()
    }

    pub fn levels(&self) -> Vec<UncertaintyLevel> {
        self.buckets.iter().map(|b| b.uncertainty).collect()
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().map(|b| b.count() as u64).sum()
    }
}

/// A correlated flight (one DMS-A record).
#[derive(Debug, Clone, PartialEq)]
pub struct FlightOccupancy {
    pub flight_ref: String,
    pub status: CorrelationStatus,
    pub level: UncertaintyLevel,
    pub cases: Vec<ConfusionCase>,
    pub intervals: Vec<SectorInterval>,
    pub buckets: Vec<BucketEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub(crate) struct StoredOccupancy {
    pub flight_ref: String,
    pub status: CorrelationStatus,
    pub level: UncertaintyLevel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<ConfusionCase>,
    pub intervals: Vec<(String, DateTime<Utc>, DateTime<Utc>)>,
}

type Partial = BTreeMap<String, Vec<BucketCount>>;

fn add_flight(mut acc: Partial, flight: &FlightOccupancy, day: NaiveDate) -> Partial {
    let start = day_start(day);
    for b in &flight.buckets {
        if b.time.date_naive() != day || b.time < start {
            continue;
        }
        let series = acc
            .entry(b.sector.clone())
            .or_insert_with(|| vec![BucketCount::default(); MINUTES_PER_DAY]);
        let slot = &mut series[minute_of_day(&b.time)];
        slot.flights.push(flight.flight_ref.clone());
        slot.uncertainty = slot.uncertainty.max(flight.level);
    }
    acc
}

fn merge(mut a: Partial, b: Partial) -> Partial {
    for (sector, buckets) in b {
        match a.get_mut(&sector) {
            None => {
                a.insert(sector, buckets);
            }
            Some(mine) => {
                for (x, y) in mine.iter_mut().zip(buckets) {
                    x.flights.extend(y.flights);
                    x.uncertainty = x.uncertainty.max(y.uncertainty);
                }
            }
        }
    }
    a
}

/// Reduces correlated flights into per-sector minute counts for `day`.
/// Only sectors occupied at least once during the day get a series.
pub fn reduce_sector_counts(flights: &[FlightOccupancy], day: NaiveDate) -> BTreeMap<String, SectorCountSeries> {
    let merged = flights
        .par_iter()
        .fold(Partial::new, |acc, f| add_flight(acc, f, day))
        .reduce(Partial::new, merge);
    merged
        .into_iter()
        .map(|(sector, mut buckets)| {
            for b in &mut buckets {
                b.flights.sort();
            }
            let series = SectorCountSeries {
                sector: sector.clone(),
                day,
                buckets,
            };
            (sector, series)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::bucket_start;
    use chrono::Duration;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 3, 14).unwrap()
    }

    fn flight(name: &str, sector: &str, from_minute: usize, minutes: usize, level: UncertaintyLevel) -> FlightOccupancy {
        FlightOccupancy {
            flight_ref: name.into(),
            status: CorrelationStatus::Correlated,
            level,
            cases: vec![],
            intervals: vec![],
            buckets: (0..minutes)
                .map(|m| BucketEntry {
                    time: bucket_start(day(), from_minute) + Duration::minutes(m as i64),
                    sector: sector.into(),
                    track: None,
                })
                .collect(),
        }
    }

    #[test]
    fn two_flights_share_a_minute() {
        let flights = vec![
            flight("A", "S1", 725, 1, UncertaintyLevel::Consistent),
            flight("B", "S1", 720, 10, UncertaintyLevel::Recoverable),
        ];
        let out = reduce_sector_counts(&flights, day());
        let s1 = &out["S1"];
        assert_eq!(s1.buckets[725].count(), 2);
        assert_eq!(s1.buckets[725].flights, vec!["A", "B"]);
        assert_eq!(s1.buckets[725].uncertainty, UncertaintyLevel::Recoverable);
        assert_eq!(s1.buckets[721].count(), 1);
    }

    #[test]
    fn single_flight_ten_minutes() {
        let out = reduce_sector_counts(&[flight("A", "S1", 600, 10, UncertaintyLevel::Consistent)], day());
        let counts = out["S1"].counts();
        assert_eq!(counts.iter().filter(|c| **c == 1).count(), 10);
        assert_eq!(counts.iter().map(|c| *c as usize).sum::<usize>(), 10);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn minutes_outside_the_day_are_dropped() {
        let out = reduce_sector_counts(&[flight("A", "S1", 1435, 10, UncertaintyLevel::Consistent)], day());
        assert_eq!(out["S1"].total(), 5);
        assert!(reduce_sector_counts(&[], day()).is_empty());
    }
}
