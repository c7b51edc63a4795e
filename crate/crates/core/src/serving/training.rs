//! Per-sector training sets and batch training.
//!
//! For a sector, every prepared day in the range contributes one daily
//! curve (zeros when the sector was empty that day). Curves are grouped by
//! weekday and filtered; each accepted curve yields one sample per minute:
//! time features, the sector's weather when available, optionally the
//! minute's uncertainty level, and the count as target.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{Duration, NaiveDate, Utc, Weekday};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::registry::{ModelRegistry, RegistryError, StoredModel};
use crate::curve_filter::{reject_outliers, DailyCurve, FilterError, MinuteWindow, RejectionResult};
use crate::gbm::{cross_validate, train_boosted, BoostConfig, CvReport, FeatureSchema, FeatureVector, GbmError};
use crate::occupancy::{PiError, PiStore, SectorCountSeries};
use crate::time::{day_range, day_start, MINUTES_PER_DAY};
use crate::weather::{load_weather, WeatherSeries};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Gbm(#[from] GbmError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("weather for {sector}: {source}")]
    Weather {
        sector: String,
        #[source]
        source: io::Error,
    },
    #[error("another training run holds {0}")]
    Busy(PathBuf),
    #[error("lock file {path}: {source}")]
    Lock {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no prepared day in range")]
    NoData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub boost: BoostConfig,
    pub uncertainty: bool,
    pub filter: bool,
    pub window: MinuteWindow,
    /// Folds for an optional cross-validation score stored with the model.
    pub cv_folds: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            boost: BoostConfig::default(),
            uncertainty: false,
            filter: true,
            window: MinuteWindow::default(),
            cv_folds: None,
        }
    }
}

impl TrainConfig {
    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema {
            uncertainty: self.uncertainty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRejection {
    pub weekday: String,
    pub days: Vec<NaiveDate>,
    pub result: Option<RejectionResult>,
}

#[derive(Debug, Clone)]
pub struct SectorDataset {
    pub sector: String,
    pub series: Vec<SectorCountSeries>,
    pub groups: Vec<GroupRejection>,
    pub accepted_days: Vec<NaiveDate>,
    pub samples: Vec<(FeatureVector, f64)>,
}

impl SectorDataset {
    pub fn rejected_days(&self) -> Vec<NaiveDate> {
        let accepted: BTreeSet<_> = self.accepted_days.iter().collect();
        self.series
            .iter()
            .map(|s| s.day)
            .filter(|d| !accepted.contains(d))
            .collect()
    }
}

/// Prepared days within `[from, to]`.
pub fn prepared_days(root: &Path, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let pi = PiStore::open(root);
    day_range(from, to).filter(|d| pi.is_prepared(*d)).collect()
}

/// Sectors occupied at least once on the given days.
pub fn sectors_in(root: &Path, days: &[NaiveDate]) -> Result<BTreeSet<String>, PiError> {
    let pi = PiStore::open(root);
    let mut out = BTreeSet::new();
    for d in days {
        out.extend(pi.read_dms_b(*d)?.into_keys());
    }
    Ok(out)
}

/// Groups curves by weekday and runs outlier rejection on each group of two
/// or more.
pub fn filter_by_weekday(
    curves: &[DailyCurve],
    window: &MinuteWindow,
) -> Result<(Vec<GroupRejection>, Vec<NaiveDate>), FilterError> {
    let mut by_day: BTreeMap<u32, Vec<&DailyCurve>> = BTreeMap::new();
    for c in curves {
        by_day.entry(c.weekday().num_days_from_monday()).or_default().push(c);
    }
    let mut groups = Vec::new();
    let mut accepted = Vec::new();
    for group in by_day.values() {
        let owned: Vec<DailyCurve> = group.iter().map(|c| (*c).clone()).collect();
        let days: Vec<NaiveDate> = owned.iter().map(|c| c.day).collect();
        let result = if owned.len() >= 2 {
            let r = reject_outliers(&owned, window)?;
            accepted.extend(r.accepted().into_iter().map(|i| days[i]));
            Some(r)
        } else {
            accepted.extend(days.iter().copied());
            None
        };
        groups.push(GroupRejection {
            weekday: weekday_name(group[0].weekday()).to_string(),
            days,
            result,
        });
    }
    accepted.sort();
    Ok((groups, accepted))
}

pub fn weekday_name(w: Weekday) -> &'static str {
    match w {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

/// Curves, filtering and samples of one sector.
pub fn build_sector_dataset(
    root: &Path,
    sector: &str,
    days: &[NaiveDate],
    cfg: &TrainConfig,
) -> Result<SectorDataset, TrainingError> {
    let pi = PiStore::open(root);
    let series: Vec<SectorCountSeries> = days
        .iter()
        .map(|d| pi.read_series(*d, sector))
        .collect::<Result<_, _>>()?;
    let curves: Vec<DailyCurve> = series.iter().map(DailyCurve::from_series).collect();
    let (groups, accepted_days) = if cfg.filter {
        filter_by_weekday(&curves, &cfg.window)?
    } else {
        (Vec::new(), days.to_vec())
    };
    let weather = load_weather(root, sector).map_err(|source| TrainingError::Weather {
        sector: sector.to_string(),
        source,
    })?;
    let schema = cfg.schema();
    let accepted: BTreeSet<NaiveDate> = accepted_days.iter().copied().collect();
    let mut samples = Vec::with_capacity(accepted.len() * MINUTES_PER_DAY);
    for s in series.iter().filter(|s| accepted.contains(&s.day)) {
        samples.extend(series_samples(s, &weather, schema));
    }
    Ok(SectorDataset {
        sector: sector.to_string(),
        series,
        groups,
        accepted_days,
        samples,
    })
}

/// One sample per minute of a daily series.
pub fn series_samples(s: &SectorCountSeries, weather: &WeatherSeries, schema: FeatureSchema) -> Vec<(FeatureVector, f64)> {
    let start = day_start(s.day);
    s.buckets
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let t = start + Duration::minutes(m as i64);
            let obs = weather.at(t);
            (schema.encode(t, obs.as_ref(), Some(b.uncertainty)), b.count() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorOutcome {
    pub sector: String,
    pub samples: usize,
    pub rejected_days: Vec<NaiveDate>,
    pub seconds: f64,
    pub model_id: Option<String>,
    pub cv: Option<CvReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainingReport {
    pub days: Vec<NaiveDate>,
    pub sectors: Vec<SectorOutcome>,
    pub total_seconds: f64,
}

impl TrainingReport {
    pub fn trained(&self) -> usize {
        self.sectors.iter().filter(|s| s.model_id.is_some()).count()
    }
}

/// Advisory lock held for the duration of a training run.
pub struct TrainingLock {
    path: PathBuf,
}

impl TrainingLock {
    pub fn acquire(root: &Path) -> Result<Self, TrainingError> {
        let dir = root.join("ml");
        fs::create_dir_all(&dir).map_err(|source| TrainingError::Lock {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join(".train.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(TrainingLock { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(TrainingError::Busy(path)),
            Err(source) => Err(TrainingError::Lock { path, source }),
        }
    }
}

impl Drop for TrainingLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn train_sector(
    root: &Path,
    registry: &ModelRegistry,
    sector: &str,
    days: &[NaiveDate],
    cfg: &TrainConfig,
) -> SectorOutcome {
    let clock = Instant::now();
    let mut outcome = SectorOutcome {
        sector: sector.to_string(),
        samples: 0,
        rejected_days: Vec::new(),
        seconds: 0.0,
        model_id: None,
        cv: None,
        error: None,
    };
    let result = (|| -> Result<(), TrainingError> {
        let data = build_sector_dataset(root, sector, days, cfg)?;
        outcome.samples = data.samples.len();
        outcome.rejected_days = data.rejected_days();
        if let Some(k) = cfg.cv_folds {
            outcome.cv = Some(cross_validate(&data.samples, k, cfg.schema(), &cfg.boost, cfg.boost.seed)?);
        }
        let model = train_boosted(&data.samples, cfg.schema(), &cfg.boost, sector)?;
        let stored = StoredModel {
            id: String::new(),
            sector: sector.to_string(),
            model,
            trained_through: *days.last().expect("days is non-empty"),
            training_seconds: clock.elapsed().as_secs_f64(),
            cv_mean_score: outcome.cv.as_ref().map(|c| c.mean_score),
            created_at: Utc::now(),
        };
        outcome.model_id = Some(registry.save_model(&stored)?);
        Ok(())
    })();
    outcome.error = result.err().map(|e| e.to_string());
    outcome.seconds = clock.elapsed().as_secs_f64();
    outcome
}

/// Trains and stores one model per sector present in the prepared days of
/// `[from, to]`. Failures are recorded per sector; the run continues.
pub fn train_all_sectors(
    root: &Path,
    registry: &ModelRegistry,
    from: NaiveDate,
    to: NaiveDate,
    cfg: &TrainConfig,
) -> Result<TrainingReport, TrainingError> {
    let _lock = TrainingLock::acquire(root)?;
    let clock = Instant::now();
    let days = prepared_days(root, from, to);
    if days.is_empty() {
        return Ok(TrainingReport::default());
    }
    let sectors: Vec<String> = sectors_in(root, &days)?.into_iter().collect();
    let outcomes: Vec<SectorOutcome> = sectors
        .par_iter()
        .map(|s| train_sector(root, registry, s, &days, cfg))
        .collect();
    Ok(TrainingReport {
        days,
        sectors: outcomes,
        total_seconds: clock.elapsed().as_secs_f64(),
    })
}
