//! Injects message-order anomalies and reports the resulting uncertainty
//! levels per flight and per sector-minute.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use sector_congest::occupancy::PiStore;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::synth::{generate_scenario, AnomalyRates, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let day = NaiveDate::from_ymd_opt(2018, 3, 14).unwrap();
    let spec = ScenarioSpec {
        seed: 12,
        from: day,
        to: day,
        flights_per_day: 300,
        anomaly_rates: AnomalyRates {
            case1: 0.05,
            case2: 0.05,
            case3: 0.1,
            case4: 0.1,
        },
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let dir = tempfile::tempdir()?;
    let store = RawStore::open(dir.path())?;
    for d in scenario.message_days() {
        store.ingest_day(scenario.lines_for_day(d), d)?;
    }
    run_preparation(dir.path(), day, &PrepConfig::default())?;

    let injected: BTreeMap<&str, Option<u8>> = scenario
        .truth
        .flights
        .iter()
        .map(|f| (f.flight_ref.as_str(), f.anomaly))
        .collect();
    let mut table: BTreeMap<(Option<u8>, u8), usize> = BTreeMap::new();
    let pi = PiStore::open(dir.path());
    for occ in pi.read_dms_a(day)? {
        let case = injected.get(occ.flight_ref.as_str()).copied().flatten();
        *table.entry((case, occ.level.as_u8())).or_default() += 1;
    }
    println!("injected case -> level: flights");
    for ((case, level), n) in table {
        let case = case.map_or("none".to_string(), |c| c.to_string());
        println!("  {case:>4} -> {level}: {n}");
    }

    let mut minutes = [0usize; 3];
    for series in pi.read_dms_b(day)?.values() {
        for b in &series.buckets {
            if b.count() > 0 {
                minutes[b.uncertainty.as_u8() as usize - 1] += 1;
            }
        }
    }
    println!("occupied sector-minutes by level: {minutes:?}");
    Ok(())
}
