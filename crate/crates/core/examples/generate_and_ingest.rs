//! Generates a synthetic message stream, stores it, and queries it back.

use chrono::NaiveDate;
use sector_congest::message::{classify_stream, MsgType};
use sector_congest::raw_store::{IndexField, RawStore};
use sector_congest::synth::{generate_scenario, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        seed: 21,
        from: NaiveDate::from_ymd_opt(2018, 3, 14).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 14).unwrap(),
        flights_per_day: 200,
        ..ScenarioSpec::default()
    };
    println!("spec:\n{}", spec.to_toml());
    let scenario = generate_scenario(&spec)?;

    let dir = tempfile::tempdir()?;
    let store = RawStore::open(dir.path())?;
    for day in scenario.message_days() {
        let lines = scenario.lines_for_day(day);
        let summary = classify_stream(&lines);
        let report = store.ingest_day(&lines, day)?;
        println!(
            "{day}: {} lines, {} departures, {} tracks, {} sector lists, {} arrivals, {} stored bytes",
            report.accepted,
            summary.counts.get(MsgType::DepartureInformation),
            summary.counts.get(MsgType::TrackInformation),
            summary.counts.get(MsgType::FlightSectors),
            summary.counts.get(MsgType::ArrivalInformation),
            report.bytes_stored
        );
    }

    let day = spec.from;
    store.ensure_indices(day, &[IndexField::FlightRef, IndexField::MsgType])?;
    let first = store.scan_flight_refs(day)?.into_iter().next().expect("a flight");
    for m in store.query(day, IndexField::FlightRef, &first)? {
        println!("{first} seq {:>5} {} {}", m.seq, m.msg_time, m.msg_type().as_str());
    }
    let window = store.fetch_flight_messages(&first, day, 5, &[MsgType::DepartureInformation, MsgType::ArrivalInformation])?;
    println!("{} departure/arrival messages in the 5-day window", window.len());
    Ok(())
}
