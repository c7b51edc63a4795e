//! Scenario specification, read from a TOML file:
//!
//! ```toml
//! seed = 7
//! from = "2018-03-12"
//! to = "2018-03-13"
//! flights_per_day = 500
//! sectors = ["S01", "S02", "S03"]      # or: sector_count = 10 (takes precedence)
//! hourly_profile = [1.0, 1.0, ...]       # 24 non-negative weights
//! min_sectors = 1
//! max_sectors = 6
//! min_dwell = 3                          # minutes
//! max_dwell = 45
//! repeat_schedule = false                # same flight plans every day
//! jitter_minutes = 0                     # per-day departure jitter when repeating
//! embed_departure = true                 # arrival messages carry the departure time
//! weather_sectors = ["S01"]
//!
//! [anomaly_rates]                        # per-flight probability of each case
//! case1 = 0.0
//! case2 = 0.0
//! case3 = 0.0
//! case4 = 0.0
//! ```
//!
//! Every key is optional; missing keys take the defaults shown by
//! [`ScenarioSpec::default`].

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("unknown confusion case {0} (expected 1..=4)")]
    UnknownCase(u8),
    #[error("flight has no {0} message to perturb")]
    MissingMessage(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyRates {
    pub case1: f64,
    pub case2: f64,
    pub case3: f64,
    pub case4: f64,
}

impl AnomalyRates {
    pub fn as_array(&self) -> [f64; 4] {
        [self.case1, self.case2, self.case3, self.case4]
    }
}

/// Weekday-like demand: quiet nights, morning and evening peaks.
pub const DEFAULT_HOURLY_PROFILE: [f64; 24] = [
    0.2, 0.1, 0.1, 0.1, 0.2, 0.5, 1.0, 1.6, 1.8, 1.6, 1.4, 1.3, 1.3, 1.4, 1.5, 1.6, 1.8, 1.9, 1.7, 1.4, 1.1, 0.8,
    0.5, 0.3,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub flights_per_day: usize,
    pub sectors: Vec<String>,
    /// Shorthand for `sectors = ["S01", ..]`; replaces `sectors` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector_count: Option<usize>,
    pub hourly_profile: Vec<f64>,
    pub min_sectors: usize,
    pub max_sectors: usize,
    pub min_dwell: i64,
    pub max_dwell: i64,
    pub anomaly_rates: AnomalyRates,
    pub repeat_schedule: bool,
    pub jitter_minutes: i64,
    pub embed_departure: bool,
    pub weather_sectors: Vec<String>,
}

pub fn sector_catalog(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("S{i:02}")).collect()
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 7,
            from: NaiveDate::from_ymd_opt(2018, 3, 12).unwrap(),
            to: NaiveDate::from_ymd_opt(2018, 3, 13).unwrap(),
            flights_per_day: 500,
            sectors: sector_catalog(10),
            sector_count: None,
            hourly_profile: DEFAULT_HOURLY_PROFILE.to_vec(),
            min_sectors: 1,
            max_sectors: 6,
            min_dwell: 3,
            max_dwell: 45,
            anomaly_rates: AnomalyRates::default(),
            repeat_schedule: false,
            jitter_minutes: 0,
            embed_departure: true,
            weather_sectors: Vec::new(),
        }
    }
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let mut spec: ScenarioSpec = toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        if let Some(n) = spec.sector_count {
            spec.sectors = sector_catalog(n);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec is always representable")
    }

    /// Sector names flights are routed through.
    pub fn catalog(&self) -> Vec<String> {
        match self.sector_count {
            Some(n) => sector_catalog(n),
            None => self.sectors.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let sectors = self.catalog();
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.to < self.from {
            return bad(format!("to {} precedes from {}", self.to, self.from));
        }
        if sectors.len() < 2 {
            return bad("at least two sectors are needed".into());
        }
        if sectors.iter().any(|s| s.is_empty()) {
            return bad("empty sector name".into());
        }
        if self.hourly_profile.len() != 24 || self.hourly_profile.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("hourly_profile needs 24 non-negative weights".into());
        }
        if self.hourly_profile.iter().sum::<f64>() <= 0.0 {
            return bad("hourly_profile sums to zero".into());
        }
        if self.min_sectors == 0 || self.min_sectors > self.max_sectors {
            return bad(format!("sector count range {}..={}", self.min_sectors, self.max_sectors));
        }
        if self.min_dwell < 1 || self.min_dwell > self.max_dwell {
            return bad(format!("dwell range {}..={}", self.min_dwell, self.max_dwell));
        }
        if self.min_dwell * (self.min_sectors as i64) < 3 {
            return bad("shortest flight must last at least 3 minutes".into());
        }
        if self.jitter_minutes < 0 {
            return bad("jitter_minutes is negative".into());
        }
        let rates = self.anomaly_rates.as_array();
        if rates.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("anomaly rates must lie in [0, 1]".into());
        }
        if rates.iter().sum::<f64>() > 1.0 + 1e-12 {
            return bad("anomaly rates sum above 1".into());
        }
        if let Some(s) = self.weather_sectors.iter().find(|s| !sectors.contains(s)) {
            return bad(format!("weather sector {s} not in catalog"));
        }
        Ok(())
    }
}
