use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use sector_congest::occupancy::{PiStore, UncertaintyLevel};
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::synth::{
    airborne_minutes_on, generate_scenario, oracle_sector_counts, AnomalyRates, Scenario, ScenarioSpec,
};
use sector_congest::time::day_range;

fn ingest_all(root: &Path, scenario: &Scenario) {
    let raw = RawStore::open(root).unwrap();
    for day in scenario.message_days() {
        let report = raw.ingest_day(scenario.lines_for_day(day), day).unwrap();
        assert_eq!(report.rejected, 0);
    }
}

fn counts(series: &BTreeMap<String, sector_congest::occupancy::SectorCountSeries>) -> BTreeMap<String, Vec<u32>> {
    series.iter().map(|(k, v)| (k.clone(), v.counts())).collect()
}

#[test]
fn clean_days_match_the_oracle() {
    let spec = ScenarioSpec {
        seed: 11,
        flights_per_day: 300,
        from: NaiveDate::from_ymd_opt(2018, 3, 12).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 14).unwrap(),
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ingest_all(dir.path(), &scenario);
    let pi = PiStore::open(dir.path());
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default()).unwrap();
        let got = pi.read_dms_b(day).unwrap();
        let want = oracle_sector_counts(&scenario.truth, day);
        assert_eq!(counts(&got), counts(&want), "day {day}");
        let total: u64 = got.values().map(|s| s.total()).sum();
        assert_eq!(total, airborne_minutes_on(&scenario.truth, day));
        assert!(got.values().all(|s| s.levels().iter().all(|l| *l == UncertaintyLevel::Consistent)));
    }
}

#[test]
fn counted_anomalies_keep_counts_exact() {
    let spec = ScenarioSpec {
        seed: 5,
        flights_per_day: 300,
        anomaly_rates: AnomalyRates {
            case1: 0.1,
            case2: 0.1,
            case3: 0.1,
            case4: 0.1,
        },
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ingest_all(dir.path(), &scenario);
    let pi = PiStore::open(dir.path());
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default()).unwrap();
        let got = pi.read_dms_b(day).unwrap();
        assert_eq!(counts(&got), counts(&oracle_sector_counts(&scenario.truth, day)), "day {day}");
    }
}
