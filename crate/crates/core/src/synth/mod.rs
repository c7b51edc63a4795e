//! Deterministic synthetic traffic: scenario specs, message generation,
//! confusion-case injection and a brute-force counting oracle.

pub mod anomaly;
pub mod oracle;
pub mod spec;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Duration, NaiveDate, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::message::{
    serialize_message, ArrivalPayload, DeparturePayload, Milestone, Payload, Qualifier, RawMessage, SectorsPayload,
    TrackPayload, TypeTally,
};
use crate::time::{day_range, day_start};
use crate::weather::{WeatherObservation, WeatherSeries};

pub use anomaly::{inject_anomalies, strip_actual_departures};
pub use oracle::{airborne_minutes_on, oracle_sector_counts};
pub use spec::{AnomalyRates, ScenarioSpec, SynthError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthInterval {
    pub sector: String,
    pub entry: DateTime<Utc>,
    pub exit: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TruthFlight {
    pub flight_ref: String,
    pub departure: DateTime<Utc>,
    pub arrival: DateTime<Utc>,
    pub intervals: Vec<TruthInterval>,
    /// Confusion case injected into the flight's messages, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<u8>,
    /// Whether the pipeline is expected to count the flight at all.
    pub counted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub flights: Vec<TruthFlight>,
}

impl GroundTruth {
    pub fn manifest(&self) -> Vec<&str> {
        self.flights.iter().map(|f| f.flight_ref.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// All messages, in emission order (by `msgTime`, stable).
    pub messages: Vec<RawMessage>,
    pub truth: GroundTruth,
    /// Weather series for the sectors listed in the spec.
    pub weather: BTreeMap<String, WeatherSeries>,
}

impl Scenario {
    pub fn lines(&self) -> Vec<String> {
        self.messages.iter().map(serialize_message).collect()
    }

    /// Days that hold at least one message; may extend past the spec's range
    /// (late arrivals) or before it (early estimates).
    pub fn message_days(&self) -> BTreeSet<NaiveDate> {
        self.messages.iter().map(|m| m.msg_time.date_naive()).collect()
    }

    pub fn lines_for_day(&self, day: NaiveDate) -> Vec<String> {
        self.messages
            .iter()
            .filter(|m| m.msg_time.date_naive() == day)
            .map(serialize_message)
            .collect()
    }

    pub fn tally(&self) -> TypeTally {
        let mut t = TypeTally::default();
        for m in &self.messages {
            t.add(m.msg_type());
        }
        t
    }

    pub fn tally_for_day(&self, day: NaiveDate) -> TypeTally {
        let mut t = TypeTally::default();
        for m in self.messages.iter().filter(|m| m.msg_time.date_naive() == day) {
            t.add(m.msg_type());
        }
        t
    }
}

#[derive(Debug, Clone)]
struct FlightPlan {
    departure_minute: i64,
    route: Vec<(String, i64)>,
}

fn day_seed(seed: u64, day: NaiveDate) -> u64 {
    seed ^ (day.num_days_from_ce() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn draw_plan(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, hours: &WeightedIndex<f64>) -> FlightPlan {
    let hour = hours.sample(rng) as i64;
    let departure_minute = hour * 60 + rng.gen_range(0..60);
    let legs = rng.gen_range(spec.min_sectors..=spec.max_sectors);
    let mut route: Vec<(String, i64)> = Vec::with_capacity(legs);
    for _ in 0..legs {
        let candidates: Vec<&String> = spec
            .sectors
            .iter()
            .filter(|s| route.last().map_or(true, |(prev, _)| prev != *s))
            .collect();
        let sector = (*candidates.choose(rng).expect("catalog has two sectors")).clone();
        route.push((sector, rng.gen_range(spec.min_dwell..=spec.max_dwell)));
    }
    FlightPlan {
        departure_minute,
        route,
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn msg(flight_ref: &str, at: DateTime<Utc>, payload: Payload) -> RawMessage {
    RawMessage {
        flight_ref: flight_ref.to_string(),
        msg_time: at,
        seq: 0,
        payload,
    }
}

/// Clean message list of one flight, in the desirable order.
fn flight_messages(spec: &ScenarioSpec, flight: &TruthFlight, rng: &mut ChaCha8Rng) -> Vec<RawMessage> {
    let r = &flight.flight_ref;
    let dep = flight.departure;
    let arr = flight.arrival;
    let mut out = vec![msg(
        r,
        dep,
        Payload::Departure(DeparturePayload {
            departure_time: dep,
            qualifier: Qualifier::Actual,
        }),
    )];
    let (lat, lon) = (rng.gen_range(25.0..49.0), rng.gen_range(-124.0..-67.0));
    let heading: f64 = rng.gen_range(0.0..360.0);
    let mut tracks = Vec::new();
    let mut t = dep + Duration::minutes(1);
    let mut k = 0.0;
    while t < arr {
        tracks.push(msg(
            r,
            t,
            Payload::Track(TrackPayload {
                latitude: round4(lat + 0.05 * k * (heading * PI / 180.0).cos()),
                longitude: round4(lon + 0.05 * k * (heading * PI / 180.0).sin()),
                altitude: (k * 4000.0).min(35000.0),
                ground_speed: 420.0,
                heading: round4(heading),
            }),
        ));
        t += Duration::minutes(5);
        k += 1.0;
    }
    let milestones = flight
        .intervals
        .iter()
        .map(|iv| Milestone {
            sector: iv.sector.clone(),
            entry_offset_minutes: (iv.entry - dep).num_minutes() as u32,
        })
        .collect();
    let sectors = msg(r, dep + Duration::minutes(2), Payload::Sectors(SectorsPayload { milestones }));
    let arrival = msg(
        r,
        arr,
        Payload::Arrival(ArrivalPayload {
            arrival_time: arr,
            arrival_qualifier: Qualifier::Actual,
            departure: spec.embed_departure.then_some((dep, Qualifier::Actual)),
        }),
    );
    let mut tracks = tracks.into_iter();
    out.extend(tracks.next());
    out.push(sectors);
    out.extend(tracks);
    out.push(arrival);
    out
}

fn truth_for(flight_ref: String, day: NaiveDate, plan: &FlightPlan, shift: i64) -> TruthFlight {
    let departure = day_start(day) + Duration::minutes(plan.departure_minute + shift);
    let mut entry = departure;
    let intervals: Vec<TruthInterval> = plan
        .route
        .iter()
        .map(|(sector, dwell)| {
            let iv = TruthInterval {
                sector: sector.clone(),
                entry,
                exit: entry + Duration::minutes(*dwell),
            };
            entry = iv.exit;
            iv
        })
        .collect();
    TruthFlight {
        flight_ref,
        departure,
        arrival: entry,
        intervals,
        anomaly: None,
        counted: true,
    }
}

fn pick_case(rates: &AnomalyRates, u: f64) -> Option<u8> {
    let mut acc = 0.0;
    for (case, p) in rates.as_array().into_iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(case as u8 + 1);
        }
    }
    None
}

fn generate_day(
    spec: &ScenarioSpec,
    day: NaiveDate,
    shared: Option<&[FlightPlan]>,
    hours: &WeightedIndex<f64>,
) -> (Vec<RawMessage>, Vec<TruthFlight>) {
    let mut rng = ChaCha8Rng::seed_from_u64(day_seed(spec.seed, day));
    let plans: Vec<FlightPlan> = match shared {
        Some(p) => p.to_vec(),
        None => (0..spec.flights_per_day).map(|_| draw_plan(spec, &mut rng, hours)).collect(),
    };
    let mut messages = Vec::new();
    let mut truth = Vec::with_capacity(plans.len());
    for (k, plan) in plans.iter().enumerate() {
        let shift = if spec.jitter_minutes > 0 {
            rng.gen_range(-spec.jitter_minutes..=spec.jitter_minutes)
        } else {
            0
        };
        let flight_ref = format!("F{}{:05}", day.format("%Y%m%d"), k);
        let mut flight = truth_for(flight_ref, day, plan, shift);
        let mut msgs = flight_messages(spec, &flight, &mut rng);
        if let Some(case) = pick_case(&spec.anomaly_rates, rng.gen::<f64>()) {
            msgs = inject_anomalies(&msgs, case, rng.gen()).expect("case drawn from 1..=4");
            flight.anomaly = Some(case);
            flight.counted = case != 2;
        }
        messages.extend(msgs);
        truth.push(flight);
    }
    (messages, truth)
}

fn synth_weather(seed: u64, sector: &str, days: &[NaiveDate]) -> WeatherSeries {
    let salt = sector.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    let mut series = WeatherSeries::default();
    let base_temp = rng.gen_range(0.0..25.0);
    for day in days {
        for hour in 0..24 {
            let t = day_start(*day) + Duration::hours(hour);
            let diurnal = (2.0 * PI * (hour as f64 - 9.0) / 24.0).sin();
            series.observations.insert(
                t,
                WeatherObservation {
                    temperature: Some(round4(base_temp + 6.0 * diurnal + rng.gen_range(-1.0..1.0))),
                    wind_speed: Some(round4(rng.gen_range(0.0..25.0))),
                    wind_direction: Some(round4(rng.gen_range(0.0..360.0))),
                    humidity: Some(round4(rng.gen_range(30.0..95.0))),
                    pressure: Some(round4(1013.0 + rng.gen_range(-12.0..12.0))),
                },
            );
        }
    }
    series
}

/// Generates messages, ground truth and weather for every day of the spec.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, SynthError> {
    spec.validate()?;
    let resolved = ScenarioSpec {
        sectors: spec.catalog(),
        ..spec.clone()
    };
    let spec = &resolved;
    let hours = WeightedIndex::new(spec.hourly_profile.iter().copied())
        .map_err(|e| SynthError::InvalidSpec(format!("hourly_profile: {e}")))?;
    let days: Vec<NaiveDate> = day_range(spec.from, spec.to).collect();
    let shared: Option<Vec<FlightPlan>> = spec.repeat_schedule.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        (0..spec.flights_per_day).map(|_| draw_plan(spec, &mut rng, &hours)).collect()
    });
    let per_day: Vec<(Vec<RawMessage>, Vec<TruthFlight>)> = days
        .par_iter()
        .map(|d| generate_day(spec, *d, shared.as_deref(), &hours))
        .collect();
    let mut messages = Vec::new();
    let mut truth = GroundTruth::default();
    for (m, t) in per_day {
        messages.extend(m);
        truth.flights.extend(t);
    }
    messages.sort_by_key(|m| m.msg_time);
    let weather = spec
        .weather_sectors
        .iter()
        .map(|s| (s.clone(), synth_weather(spec.seed, s, &days)))
        .collect();
    Ok(Scenario {
        messages,
        truth,
        weather,
    })
}
