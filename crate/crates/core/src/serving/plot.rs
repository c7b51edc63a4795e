//! CSV plot artifacts.
//!
//! | kind | rows | columns |
//! |------|------|---------|
//! | `sectorCurve` | minutes of a day | `minute,time,actual,predicted` |
//! | `convergence` | boosting iterations | `iteration,trainMse` |
//! | `scoreScatter` | (sector, day) pairs | `sector,day,dailyFlights,score` |
//! | `heatmap` | occupied sectors of a day | `sector,h00..h23` (peak count per hour) |
//! | `rejection` | curves of a (sector, weekday) group | `day,score,threshold,rejected` |
//! | `acceptedCurves` | minutes | `minute,<day>...` for the accepted curves |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use thiserror::Error;

use super::registry::ModelRegistry;
use super::training::{prepared_days, weekday_name};
use crate::curve_filter::{reject_outliers, DailyCurve, MinuteWindow};
use crate::fsutil::write_atomic;
use crate::gbm::{predict, score_scc};
use crate::occupancy::{PiStore, UncertaintyLevel};
use crate::time::{day_start, format_day, format_utc, MINUTES_PER_DAY};
use crate::weather::load_weather;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SectorCurve,
    Convergence,
    ScoreScatter,
    Heatmap,
    Rejection,
    AcceptedCurves,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::SectorCurve,
        PlotKind::Convergence,
        PlotKind::ScoreScatter,
        PlotKind::Heatmap,
        PlotKind::Rejection,
        PlotKind::AcceptedCurves,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::SectorCurve => "sectorCurve",
            PlotKind::Convergence => "convergence",
            PlotKind::ScoreScatter => "scoreScatter",
            PlotKind::Heatmap => "heatmap",
            PlotKind::Rejection => "rejection",
            PlotKind::AcceptedCurves => "acceptedCurves",
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown plot kind {s}"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct PlotParams {
    pub sector: Option<String>,
    pub day: Option<NaiveDate>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub weekday: Option<Weekday>,
    pub window: MinuteWindow,
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("writing plot: {0}")]
    Io(#[from] io::Error),
}

fn need<T: Clone>(v: &Option<T>, what: &str) -> Result<T, PlotError> {
    v.clone().ok_or_else(|| PlotError::MissingData(format!("{what} is required")))
}

fn missing(e: impl std::fmt::Display) -> PlotError {
    PlotError::MissingData(e.to_string())
}

/// Renders the plot as CSV text.
pub fn render_plot(root: &Path, kind: PlotKind, p: &PlotParams) -> Result<String, PlotError> {
    let pi = PiStore::open(root);
    let registry = ModelRegistry::open(root);
    let mut out = String::new();
    match kind {
        PlotKind::SectorCurve => {
            let sector = need(&p.sector, "sector")?;
            let day = need(&p.day, "day")?;
            let series = pi.read_series(day, &sector).map_err(missing)?;
            let model = registry.load_model(&sector).map_err(missing)?;
            let weather = load_weather(root, &sector)?;
            out.push_str("minute,time,actual,predicted\n");
            for (m, b) in series.buckets.iter().enumerate() {
                let t = day_start(day) + Duration::minutes(m as i64);
                let x = model
                    .model
                    .schema
                    .encode(t, weather.at(t).as_ref(), Some(UncertaintyLevel::Consistent));
                let pred = predict(&model.model, &x).map_err(missing)?.count;
                let _ = writeln!(out, "{m},{},{},{pred}", format_utc(&t), b.count());
            }
        }
        PlotKind::Convergence => {
            let sector = need(&p.sector, "sector")?;
            let model = registry.load_model(&sector).map_err(missing)?;
            out.push_str("iteration,trainMse\n");
            for (i, e) in model.model.train_mse.iter().enumerate() {
                let _ = writeln!(out, "{i},{e}");
            }
        }
        PlotKind::ScoreScatter => {
            let days = range_days(root, p)?;
            let sectors = match &p.sector {
                Some(s) => vec![s.clone()],
                None => registry.sectors(),
            };
            if sectors.is_empty() {
                return Err(PlotError::MissingData("no trained models".into()));
            }
            out.push_str("sector,day,dailyFlights,score\n");
            for sector in &sectors {
                let model = registry.load_model(sector).map_err(missing)?;
                let weather = load_weather(root, sector)?;
                for day in &days {
                    let series = pi.read_series(*day, sector).map_err(missing)?;
                    let flights: BTreeSet<&String> = series.buckets.iter().flat_map(|b| &b.flights).collect();
                    let actual: Vec<f64> = series.counts().iter().map(|c| *c as f64).collect();
                    let predicted: Vec<f64> = (0..MINUTES_PER_DAY)
                        .map(|m| {
                            let t = day_start(*day) + Duration::minutes(m as i64);
                            let x = model.model.schema.encode(
                                t,
                                weather.at(t).as_ref(),
                                Some(UncertaintyLevel::Consistent),
                            );
                            model.model.raw(&x.values).max(0.0)
                        })
                        .collect();
                    let score = score_scc(&actual, &predicted).map_err(missing)?;
                    let _ = writeln!(out, "{sector},{},{},{score}", format_day(*day), flights.len());
                }
            }
        }
        PlotKind::Heatmap => {
            let day = need(&p.day, "day")?;
            let all = pi.read_dms_b(day).map_err(missing)?;
            out.push_str("sector");
            for h in 0..24 {
                let _ = write!(out, ",h{h:02}");
            }
            out.push('\n');
            for (sector, series) in &all {
                out.push_str(sector);
                let counts = series.counts();
                for h in 0..24 {
                    let peak = counts[h * 60..(h + 1) * 60].iter().max().copied().unwrap_or(0);
                    let _ = write!(out, ",{peak}");
                }
                out.push('\n');
            }
        }
        PlotKind::Rejection | PlotKind::AcceptedCurves => {
            let sector = need(&p.sector, "sector")?;
            let weekday = need(&p.weekday, "weekday")?;
            let days: Vec<NaiveDate> = range_days(root, p)?
                .into_iter()
                .filter(|d| d.weekday() == weekday)
                .collect();
            let curves: Vec<DailyCurve> = days
                .iter()
                .map(|d| pi.read_series(*d, &sector).map(|s| DailyCurve::from_series(&s)))
                .collect::<Result<_, _>>()
                .map_err(missing)?;
            let r = reject_outliers(&curves, &p.window).map_err(|e| {
                PlotError::MissingData(format!("{sector} on {}: {e}", weekday_name(weekday)))
            })?;
            if kind == PlotKind::Rejection {
                out.push_str("day,score,threshold,rejected\n");
                for (i, c) in curves.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        format_day(c.day),
                        r.scores[i],
                        r.threshold,
                        r.rejected.contains(&i)
                    );
                }
            } else {
                let kept = r.accepted();
                out.push_str("minute");
                for i in &kept {
                    let _ = write!(out, ",{}", format_day(curves[*i].day));
                }
                out.push('\n');
                for m in 0..MINUTES_PER_DAY {
                    let _ = write!(out, "{m}");
                    for i in &kept {
                        let _ = write!(out, ",{}", curves[*i].values[m]);
                    }
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

fn range_days(root: &Path, p: &PlotParams) -> Result<Vec<NaiveDate>, PlotError> {
    let pi = PiStore::open(root);
    let all = pi.prepared_days();
    let from = p.from.or(all.first().copied());
    let to = p.to.or(all.last().copied());
    let (Some(from), Some(to)) = (from, to) else {
        return Err(PlotError::MissingData("no prepared days".into()));
    };
    let days = prepared_days(root, from, to);
    if days.is_empty() {
        return Err(PlotError::MissingData(format!(
            "no prepared day in {}..{}",
            format_day(from),
            format_day(to)
        )));
    }
    Ok(days)
}

/// Renders the plot and writes it to `out`; returns the number of data rows.
pub fn emit_plot(root: &Path, kind: PlotKind, p: &PlotParams, out: &Path) -> Result<usize, PlotError> {
    let text = render_plot(root, kind, p)?;
    write_atomic(out, text.as_bytes())?;
    Ok(text.lines().count().saturating_sub(1))
}
