use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc, Weekday};
use clap::{Parser, Subcommand};
use serde::Serialize;

use sector_congest::curve_filter::{reject_outliers, DailyCurve, MinuteWindow};
use sector_congest::gbm::{cross_validate, BoostConfig, CvReport, TreeParams};
use sector_congest::occupancy::PiStore;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::{
    build_sector_dataset, emit_plot, handle_predict_request, prepared_days, sectors_in, train_all_sectors,
    ModelRegistry, PlotKind, PlotParams, PredictionRequest, PredictionServer, TrainConfig,
};
use sector_congest::synth::{generate_scenario, ScenarioSpec};
use sector_congest::time::{format_day, parse_day, parse_utc};
use sector_congest::weather::save_weather;

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "sector-congest", version, about = "Sector congestion counting and prediction")]
struct Cli {
    /// Data root holding every collection.
    #[arg(long, env = "SECTOR_CONGEST_ROOT", default_value = "data", global = true)]
    root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Store one day of raw JSON-lines messages.
    Ingest {
        #[arg(long, value_parser = day)]
        day: NaiveDate,
        #[arg(long)]
        input: PathBuf,
        /// Directory of `<sector>.csv` weather files to copy into the root.
        #[arg(long)]
        weather_dir: Option<PathBuf>,
    },
    /// Build flight documents and sector counts for a day.
    Prepare {
        #[arg(long, value_parser = day)]
        day: NaiveDate,
        #[arg(long, default_value_t = 5)]
        lookback: u32,
    },
    /// Run curve rejection for one sector and weekday.
    Filter {
        #[arg(long)]
        sector: String,
        #[arg(long, value_parser = weekday)]
        weekday: Weekday,
        #[arg(long, value_parser = day)]
        from: Option<NaiveDate>,
        #[arg(long, value_parser = day)]
        to: Option<NaiveDate>,
        /// Window start and end minute of day.
        #[arg(long, default_value_t = 720)]
        window_start: usize,
        #[arg(long, default_value_t = 735)]
        window_end: usize,
        /// Report path; defaults to `<root>/reports/filter-<sector>-<weekday>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and activate one model per sector.
    Train {
        #[arg(long, value_parser = day)]
        from: NaiveDate,
        #[arg(long, value_parser = day)]
        to: NaiveDate,
        #[arg(long)]
        with_uncertainty: bool,
        #[arg(long, default_value_t = 0.1)]
        shrinkage: f64,
        #[arg(long, default_value_t = 400)]
        learners: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 5)]
        min_leaf: usize,
        /// Train on every day without curve rejection.
        #[arg(long)]
        no_filter: bool,
        /// Also store a k-fold CV score with each model.
        #[arg(long)]
        cv: Option<usize>,
    },
    /// k-fold cross-validation per sector.
    Validate {
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = day)]
        from: Option<NaiveDate>,
        #[arg(long, value_parser = day)]
        to: Option<NaiveDate>,
        #[arg(long)]
        sector: Option<String>,
        #[arg(long)]
        with_uncertainty: bool,
        #[arg(long, default_value_t = 400)]
        learners: usize,
    },
    /// Predict counts with the sector's active model.
    Predict {
        #[arg(long)]
        sector: String,
        #[arg(long, value_parser = utc)]
        start: DateTime<Utc>,
        #[arg(long, value_parser = utc)]
        end: DateTime<Utc>,
        #[arg(long, default_value_t = 1)]
        step: u32,
    },
    /// Serve POST /predict, GET /health and POST /train over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Generate a synthetic scenario.
    Gen {
        /// TOML scenario spec; defaults apply to missing keys.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory: `messages/<day>.jsonl`, `truth.json`, `weather/`, `spec.toml`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a CSV plot artifact.
    Plot {
        #[arg(long, value_parser = plot_kind)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sector: Option<String>,
        #[arg(long, value_parser = day)]
        day: Option<NaiveDate>,
        #[arg(long, value_parser = day)]
        from: Option<NaiveDate>,
        #[arg(long, value_parser = day)]
        to: Option<NaiveDate>,
        #[arg(long, value_parser = weekday)]
        weekday: Option<Weekday>,
    },
    /// Delete raw message collections before a day.
    Prune {
        #[arg(long, value_parser = day)]
        before: NaiveDate,
    },
}

fn day(s: &str) -> Result<NaiveDate, String> {
    parse_day(s).ok_or_else(|| format!("expected YYYY-MM-DD, got {s}"))
}

fn utc(s: &str) -> Result<DateTime<Utc>, String> {
    parse_utc(s).ok_or_else(|| format!("expected an ISO-8601 UTC time, got {s}"))
}

fn weekday(s: &str) -> Result<Weekday, String> {
    s.parse().map_err(|_| format!("unknown weekday {s}"))
}

fn plot_kind(s: &str) -> Result<PlotKind, String> {
    s.parse()
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn day_bounds(root: &Path, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<Vec<NaiveDate>, Error> {
    let all = PiStore::open(root).prepared_days();
    let (Some(first), Some(last)) = (all.first(), all.last()) else {
        return Err("no prepared days".into());
    };
    Ok(prepared_days(root, from.unwrap_or(*first), to.unwrap_or(*last)))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FilterCurve {
    day: String,
    score: f64,
    rejected: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FilterReport {
    sector: String,
    weekday: String,
    window: [usize; 2],
    threshold: f64,
    trend_slope: f64,
    trend_intercept: f64,
    curves: Vec<FilterCurve>,
}

#[derive(Serialize)]
struct SectorCv {
    sector: String,
    #[serde(flatten)]
    report: CvReport,
}

fn run(cli: Cli) -> Result<(), Error> {
    let root = cli.root;
    match cli.command {
        Command::Ingest {
            day,
            input,
            weather_dir,
        } => {
            let text = fs::read_to_string(&input)?;
            let report = RawStore::open(&root)?.ingest_day(text.lines(), day)?;
            println!(
                "{}: {} accepted, {} rejected, {} bytes",
                format_day(day),
                report.accepted,
                report.rejected,
                report.bytes_stored
            );
            for r in &report.rejections {
                eprintln!("line {}: {:?}", r.line, r.reason);
            }
            if let Some(dir) = weather_dir {
                let target = root.join("weather");
                fs::create_dir_all(&target)?;
                for entry in fs::read_dir(dir)? {
                    let path = entry?.path();
                    if path.extension().is_some_and(|e| e == "csv") {
                        fs::copy(&path, target.join(path.file_name().expect("file has a name")))?;
                    }
                }
            }
        }
        Command::Prepare { day, lookback } => {
            let cfg = PrepConfig {
                lookback_days: lookback,
                ..PrepConfig::default()
            };
            let r = run_preparation(&root, day, &cfg)?;
            println!(
                "{}: {} flights, {} documents, {} correlated, {} carried over, {} sectors, {} quarantined",
                format_day(day),
                r.flights_seen,
                r.documents_built,
                r.documents_correlated,
                r.carried_over,
                r.sectors_counted,
                r.quarantined.len()
            );
            for q in &r.quarantined {
                eprintln!("quarantined {}: {}", q.flight_ref, q.reason);
            }
        }
        Command::Filter {
            sector,
            weekday,
            from,
            to,
            window_start,
            window_end,
            out,
        } => {
            use chrono::Datelike;
            let pi = PiStore::open(&root);
            let curves: Vec<DailyCurve> = day_bounds(&root, from, to)?
                .into_iter()
                .filter(|d| d.weekday() == weekday)
                .map(|d| pi.read_series(d, &sector).map(|s| DailyCurve::from_series(&s)))
                .collect::<Result<_, _>>()?;
            let window = MinuteWindow(window_start..window_end);
            let r = reject_outliers(&curves, &window)?;
            let wd = sector_congest::serving::training::weekday_name(weekday);
            let report = FilterReport {
                sector: sector.clone(),
                weekday: wd.to_string(),
                window: [window_start, window_end],
                threshold: r.threshold,
                trend_slope: r.trend.slope,
                trend_intercept: r.trend.intercept,
                curves: curves
                    .iter()
                    .enumerate()
                    .map(|(i, c)| FilterCurve {
                        day: format_day(c.day),
                        score: r.scores[i],
                        rejected: r.rejected.contains(&i),
                    })
                    .collect(),
            };
            let path = out.unwrap_or_else(|| {
                root.join("reports").join(format!(
                    "filter-{}-{wd}.json",
                    sector_congest::fsutil::encode_component(&sector)
                ))
            });
            sector_congest::fsutil::write_atomic(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
            println!(
                "{} of {} curves rejected; report at {}",
                r.rejected.len(),
                curves.len(),
                path.display()
            );
        }
        Command::Train {
            from,
            to,
            with_uncertainty,
            shrinkage,
            learners,
            depth,
            min_leaf,
            no_filter,
            cv,
        } => {
            let cfg = TrainConfig {
                boost: BoostConfig {
                    n_learners: learners,
                    shrinkage,
                    tree: TreeParams {
                        max_depth: depth,
                        min_leaf,
                    },
                    ..BoostConfig::default()
                },
                uncertainty: with_uncertainty,
                filter: !no_filter,
                cv_folds: cv,
                ..TrainConfig::default()
            };
            let registry = ModelRegistry::open(&root);
            let report = train_all_sectors(&root, &registry, from, to, &cfg)?;
            print_json(&report)?;
            if report.days.is_empty() {
                return Err("no prepared day in range".into());
            }
        }
        Command::Validate {
            k,
            seed,
            from,
            to,
            sector,
            with_uncertainty,
            learners,
        } => {
            let cfg = TrainConfig {
                boost: BoostConfig {
                    n_learners: learners,
                    ..BoostConfig::default()
                },
                uncertainty: with_uncertainty,
                ..TrainConfig::default()
            };
            let days = day_bounds(&root, from, to)?;
            let sectors: Vec<String> = match sector {
                Some(s) => vec![s],
                None => sectors_in(&root, &days)?.into_iter().collect(),
            };
            let mut out = Vec::new();
            for s in sectors {
                let data = build_sector_dataset(&root, &s, &days, &cfg)?;
                let report = cross_validate(&data.samples, k, cfg.schema(), &cfg.boost, seed)?;
                out.push(SectorCv { sector: s, report });
            }
            print_json(&out)?;
        }
        Command::Predict {
            sector,
            start,
            end,
            step,
        } => {
            let registry = ModelRegistry::open(&root);
            let req = PredictionRequest {
                sector,
                start_time: start,
                end_time: end,
                step_minutes: step,
                weather: None,
            };
            print_json(&handle_predict_request(&registry, &req)?)?;
        }
        Command::Serve { port, host, workers } => {
            let server = PredictionServer::bind(&root, &format!("{host}:{port}"), TrainConfig::default())?;
            eprintln!("listening on http://{}", server.local_addr());
            server.run(workers);
        }
        Command::Gen { spec, seed, out } => {
            let mut s = match spec {
                Some(p) => ScenarioSpec::from_toml(&fs::read_to_string(p)?)?,
                None => ScenarioSpec::default(),
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let scenario = generate_scenario(&s)?;
            let messages = out.join("messages");
            fs::create_dir_all(&messages)?;
            for d in scenario.message_days() {
                let mut text = scenario.lines_for_day(d).join("\n");
                text.push('\n');
                fs::write(messages.join(format!("{}.jsonl", format_day(d))), text)?;
            }
            fs::write(out.join("truth.json"), serde_json::to_string(&scenario.truth)?)?;
            fs::write(out.join("spec.toml"), s.to_toml())?;
            for (sector, series) in &scenario.weather {
                save_weather(&out, sector, series)?;
            }
            println!(
                "{} messages over {} days, {} flights, written to {}",
                scenario.messages.len(),
                scenario.message_days().len(),
                scenario.truth.flights.len(),
                out.display()
            );
        }
        Command::Plot {
            kind,
            out,
            sector,
            day,
            from,
            to,
            weekday,
        } => {
            let params = PlotParams {
                sector,
                day,
                from,
                to,
                weekday,
                ..PlotParams::default()
            };
            let rows = emit_plot(&root, kind, &params, &out)?;
            println!("{} rows written to {}", rows, out.display());
        }
        Command::Prune { before } => {
            let removed = RawStore::open(&root)?.prune_before(before)?;
            for d in &removed {
                println!("removed {}", format_day(*d));
            }
            println!("{} day(s) pruned", removed.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
