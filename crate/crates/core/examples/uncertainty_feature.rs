//! Compares 5-fold CV scores with and without the uncertainty feature on a
//! corpus where part of the flights carry message-order anomalies.
//!
//! ```text
//! cargo run --release --example uncertainty_feature -- [flights_per_day] [anomaly_share] [repeat_schedule] [seed]
//! ```

use std::env;

use chrono::NaiveDate;
use sector_congest::gbm::cross_validate;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::{build_sector_dataset, prepared_days, sectors_in, TrainConfig};
use sector_congest::synth::{generate_scenario, AnomalyRates, ScenarioSpec};
use sector_congest::time::day_range;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let share: f64 = arg(2, 0.3);
    let spec = ScenarioSpec {
        seed: arg(4, 66),
        from: NaiveDate::from_ymd_opt(2018, 3, 5).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 18).unwrap(),
        flights_per_day: arg(1, 500),
        sector_count: Some(4),
        repeat_schedule: arg(3, false),
        anomaly_rates: AnomalyRates {
            case3: share / 2.0,
            case4: share / 2.0,
            ..AnomalyRates::default()
        },
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

    let days = prepared_days(dir.path(), spec.from, spec.to);
    for sector in sectors_in(dir.path(), &days)? {
        let mut line = format!("{sector}:");
        for uncertainty in [false, true] {
            let cfg = TrainConfig {
                uncertainty,
                ..TrainConfig::default()
            };
            let data = build_sector_dataset(dir.path(), &sector, &days, &cfg)?;
            let cv = cross_validate(&data.samples, 5, cfg.schema(), &cfg.boost, 0)?;
            let label = if uncertainty { "with" } else { "without" };
            line.push_str(&format!(" {label} {:.4}", cv.mean_score));
        }
        println!("{line}");
    }
    Ok(())
}
