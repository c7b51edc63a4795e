//! Builds a 14-day corpus, prepares it, and cross-validates one boosted
//! model per sector.
//!
//! ```text
//! cargo run --release --example train_validate -- [flights_per_day] [jitter_minutes] [learners]
//! ```

use std::env;

use chrono::NaiveDate;
use sector_congest::gbm::{cross_validate, BoostConfig};
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::{build_sector_dataset, prepared_days, sectors_in, TrainConfig};
use sector_congest::synth::{generate_scenario, ScenarioSpec};
use sector_congest::time::day_range;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        seed: 3,
        from: NaiveDate::from_ymd_opt(2018, 3, 5).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 18).unwrap(),
        flights_per_day: arg(1, 2000),
        jitter_minutes: arg(2, 1),
        repeat_schedule: true,
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let dir = tempfile::tempdir()?;
    let raw = RawStore::open(dir.path())?;
    for day in scenario.message_days() {
        raw.ingest_day(scenario.lines_for_day(day), day)?;
    }
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default())?;
    }

    let cfg = TrainConfig {
        boost: BoostConfig {
            n_learners: arg(3, 400),
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    };
    let days = prepared_days(dir.path(), spec.from, spec.to);
    let mut means = Vec::new();
    for sector in sectors_in(dir.path(), &days)? {
        let data = build_sector_dataset(dir.path(), &sector, &days, &cfg)?;
        let cv = cross_validate(&data.samples, 5, cfg.schema(), &cfg.boost, 0)?;
        let mean_count = data.samples.iter().map(|s| s.1).sum::<f64>() / data.samples.len() as f64;
        println!(
            "{sector}: {} samples, {} days rejected, mean count {mean_count:.2}, CV mean {:.4}",
            data.samples.len(),
            data.rejected_days().len(),
            cv.mean_score
        );
        means.push(cv.mean_score);
    }
    println!("overall {:.4}", means.iter().sum::<f64>() / means.len() as f64);
    Ok(())
}
