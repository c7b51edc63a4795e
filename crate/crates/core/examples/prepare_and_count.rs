//! Prepares two days and checks the per-sector minute counts against a
//! brute-force count of the generated ground truth.

use chrono::NaiveDate;
use sector_congest::occupancy::PiStore;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::synth::{generate_scenario, oracle_sector_counts, ScenarioSpec};
use sector_congest::time::{day_range, parse_utc};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        seed: 8,
        from: NaiveDate::from_ymd_opt(2018, 3, 14).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 15).unwrap(),
        flights_per_day: 400,
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let dir = tempfile::tempdir()?;
    let store = RawStore::open(dir.path())?;
    for day in scenario.message_days() {
        store.ingest_day(scenario.lines_for_day(day), day)?;
    }

    let pi = PiStore::open(dir.path());
    for day in day_range(spec.from, spec.to) {
        let r = run_preparation(dir.path(), day, &PrepConfig::default())?;
        println!(
            "{day}: {} flights, {} carried over midnight, {} sectors, {} FI bytes",
            r.flights_seen, r.carried_over, r.sectors_counted, r.fi_bytes
        );
        let counts = pi.read_dms_b(day)?;
        let oracle = oracle_sector_counts(&scenario.truth, day);
        for (sector, series) in &counts {
            let peak = series.counts().into_iter().max().unwrap_or(0);
            let same = oracle.get(sector).map(|o| o.counts()) == Some(series.counts());
            println!("  {sector}: {} aircraft-minutes, peak {peak}, matches oracle: {same}", series.total());
        }
    }

    let t = parse_utc("2018-03-14T12:30:00Z").unwrap();
    let (n, level) = pi.query_count("S01", t)?;
    println!("S01 at {t}: {n} aircraft, uncertainty level {}", level.as_u8());
    Ok(())
}
