//! Writes every CSV plot kind for a small trained corpus.

use chrono::{NaiveDate, Weekday};
use sector_congest::gbm::BoostConfig;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::{emit_plot, train_all_sectors, ModelRegistry, PlotKind, PlotParams, TrainConfig};
use sector_congest::synth::{generate_scenario, ScenarioSpec};
use sector_congest::time::day_range;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        seed: 44,
        from: NaiveDate::from_ymd_opt(2018, 3, 5).unwrap(),
        to: NaiveDate::from_ymd_opt(2018, 3, 25).unwrap(),
        flights_per_day: 200,
        sector_count: Some(3),
        repeat_schedule: true,
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let dir = tempfile::tempdir()?;
    let store = RawStore::open(dir.path())?;
    for day in scenario.message_days() {
        store.ingest_day(scenario.lines_for_day(day), day)?;
    }
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default())?;
    }
    let cfg = TrainConfig {
        boost: BoostConfig {
            n_learners: 60,
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    };
    train_all_sectors(dir.path(), &ModelRegistry::open(dir.path()), spec.from, spec.to, &cfg)?;

    let params = PlotParams {
        sector: Some("S02".into()),
        day: Some(NaiveDate::from_ymd_opt(2018, 3, 21).unwrap()),
        weekday: Some(Weekday::Wed),
        ..PlotParams::default()
    };
    let out = dir.path().join("plots");
    for kind in PlotKind::ALL {
        let path = out.join(format!("{}.csv", kind.as_str()));
        let rows = emit_plot(dir.path(), kind, &params, &path)?;
        let text = std::fs::read_to_string(&path)?;
        let head: Vec<&str> = text.lines().take(2).collect();
        println!("{:<15} {rows:>5} rows  {}", kind.as_str(), head.join(" | "));
    }
    Ok(())
}
