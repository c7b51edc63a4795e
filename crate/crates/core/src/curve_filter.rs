//! Rejection of anomalous daily sector-count curves before training.
//!
//! Curves of one (sector, weekday) group are compared in a short window
//! (12:00–12:15 UTC by default). A least-squares line is fitted through the
//! per-curve window means against the curves' chronological position; each
//! curve scores the summed absolute deviation of its window samples from the
//! line. Scores are normalised by their maximum and curves scoring strictly
//! above the mean normalised score are rejected.

use std::collections::BTreeSet;
use std::ops::Range;

use chrono::{NaiveDate, Weekday};
use serde::Serialize;
use thiserror::Error;

use crate::occupancy::SectorCountSeries;
use crate::time::MINUTES_PER_DAY;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("need at least 2 curves, got {0}")]
    TooFewCurves(usize),
    #[error("window {0:?} is empty or outside the day")]
    EmptyWindow(Range<usize>),
    #[error("curves mix sectors or weekdays ({0})")]
    MixedGroup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyCurve {
    pub sector: String,
    pub day: NaiveDate,
    pub values: Vec<u32>,
}

impl DailyCurve {
    pub fn weekday(&self) -> Weekday {
        use chrono::Datelike;
        self.day.weekday()
    }

    pub fn from_series(series: &SectorCountSeries) -> Self {
        DailyCurve {
            sector: series.sector.clone(),
            day: series.day,
            values: series.counts(),
        }
    }

    fn window_mean(&self, window: &Range<usize>) -> f64 {
        self.values[window.clone()].iter().map(|v| *v as f64).sum::<f64>() / window.len() as f64
    }
}

/// Minute-of-day range `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinuteWindow(pub Range<usize>);

impl Default for MinuteWindow {
    fn default() -> Self {
        MinuteWindow(720..735)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTrend {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearTrend {
    pub fn at(&self, day_index: f64) -> f64 {
        self.intercept + self.slope * day_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionResult {
    /// Normalised scores, in input order.
    pub scores: Vec<f64>,
    pub threshold: f64,
    /// Input positions of the rejected curves.
    pub rejected: BTreeSet<usize>,
    pub trend: LinearTrend,
}

impl RejectionResult {
    pub fn accepted(&self) -> Vec<usize> {
        (0..self.scores.len()).filter(|i| !self.rejected.contains(i)).collect()
    }
}

fn check_window(window: &MinuteWindow) -> Result<(), FilterError> {
    let w = &window.0;
    if w.start >= w.end || w.end > MINUTES_PER_DAY {
        return Err(FilterError::EmptyWindow(w.clone()));
    }
    Ok(())
}

fn check_group(curves: &[DailyCurve]) -> Result<(), FilterError> {
    if curves.len() < 2 {
        return Err(FilterError::TooFewCurves(curves.len()));
    }
    let first = &curves[0];
    for c in curves {
        if c.sector != first.sector || c.weekday() != first.weekday() {
            return Err(FilterError::MixedGroup(format!(
                "{} {} vs {} {}",
                first.sector,
                first.weekday(),
                c.sector,
                c.weekday()
            )));
        }
        if c.values.len() != MINUTES_PER_DAY {
            return Err(FilterError::MixedGroup(format!("{} has {} minutes", c.day, c.values.len())));
        }
    }
    Ok(())
}

/// Position of each curve in chronological order (ties keep input order).
fn day_indices(curves: &[DailyCurve]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by_key(|i| (curves[*i].day, *i));
    let mut idx = vec![0.0; curves.len()];
    for (rank, i) in order.into_iter().enumerate() {
        idx[i] = rank as f64;
    }
    idx
}

/// Ordinary least squares through points `(x, y)`.
fn ols(points: &[(f64, f64)]) -> LinearTrend {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    LinearTrend {
        slope,
        intercept: my - slope * mx,
    }
}

pub fn fit_reference_trend(curves: &[DailyCurve], window: &MinuteWindow) -> Result<LinearTrend, FilterError> {
    check_window(window)?;
    check_group(curves)?;
    let idx = day_indices(curves);
    let points: Vec<(f64, f64)> = curves
        .iter()
        .zip(&idx)
        .map(|(c, x)| (*x, c.window_mean(&window.0)))
        .collect();
    Ok(ols(&points))
}

/// Σ over the window of |value − trend(day_index)|.
pub fn score_curve(curve: &DailyCurve, trend: &LinearTrend, day_index: f64, window: &MinuteWindow) -> f64 {
    let reference = trend.at(day_index);
    curve.values[window.0.clone()]
        .iter()
        .map(|v| (*v as f64 - reference).abs())
        .sum()
}

pub fn reject_outliers(curves: &[DailyCurve], window: &MinuteWindow) -> Result<RejectionResult, FilterError> {
    let trend = fit_reference_trend(curves, window)?;
    let idx = day_indices(curves);
    let raw: Vec<f64> = curves
        .iter()
        .zip(&idx)
        .map(|(c, x)| score_curve(c, &trend, *x, window))
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    let scores: Vec<f64> = if max > 0.0 {
        raw.iter().map(|s| s / max).collect()
    } else {
        vec![0.0; raw.len()]
    };
    let threshold = scores.iter().sum::<f64>() / scores.len() as f64;
    let rejected = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(RejectionResult {
        scores,
        threshold,
        rejected,
        trend,
    })
}
