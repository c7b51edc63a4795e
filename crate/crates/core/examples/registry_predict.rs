//! Trains one model per sector, stores it, and answers prediction requests
//! from a freshly opened registry.

use chrono::NaiveDate;
use sector_congest::gbm::BoostConfig;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::{handle_predict_json, train_all_sectors, ModelRegistry, TrainConfig};
use sector_congest::synth::{generate_scenario, ScenarioSpec};
use sector_congest::time::day_range;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        seed: 30,
        from: NaiveDate::from_ymd_opt(2018, 3, 5).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 11).unwrap(),
        flights_per_day: 300,
        sector_count: Some(4),
        repeat_schedule: true,
        weather_sectors: vec!["S01".into()],
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let dir = tempfile::tempdir()?;
    let store = RawStore::open(dir.path())?;
    for day in scenario.message_days() {
        store.ingest_day(scenario.lines_for_day(day), day)?;
    }
    for (sector, series) in &scenario.weather {
        sector_congest::weather::save_weather(dir.path(), sector, series)?;
    }
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default())?;
    }

    let cfg = TrainConfig {
        boost: BoostConfig {
            n_learners: 100,
            ..BoostConfig::default()
        },
        cv_folds: Some(3),
        ..TrainConfig::default()
    };
    let registry = ModelRegistry::open(dir.path());
    let report = train_all_sectors(dir.path(), &registry, spec.from, spec.to, &cfg)?;
    for s in &report.sectors {
        println!(
            "{}: {} samples, {} days rejected, model {:?}, CV {:.4}",
            s.sector,
            s.samples,
            s.rejected_days.len(),
            s.model_id,
            s.cv.as_ref().map_or(f64::NAN, |c| c.mean_score)
        );
    }

    // A new registry reads the stored models from disk.
    let reopened = ModelRegistry::open(dir.path());
    let body = r#"{"sector":"S01","startTime":"2018-03-12T08:00:00Z","endTime":"2018-03-12T09:00:00Z","stepMinutes":15,
        "weather":{"temperature":12.5,"windSpeed":8.0,"windDirection":270.0}}"#;
    let (status, text) = handle_predict_json(&reopened, body);
    println!("{status} {text}");
    let (status, text) = handle_predict_json(&reopened, r#"{"sector":"nowhere","startTime":"2018-03-12T08:00:00Z","endTime":"2018-03-12T09:00:00Z"}"#);
    println!("{status} {text}");
    Ok(())
}
