//! Surface weather observations attached to a sector (airport sectors only,
//! most sectors have none).
//!
//! On disk a sector's series is `<root>/weather/<sector>.csv` with the header
//! `time,temperature,windSpeed,windDirection,humidity,pressure`. Empty cells
//! mean "not observed".

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::fsutil::{encode_component, write_atomic};

/// Observations older than this are not used for a bucket.
pub const MAX_OBSERVATION_AGE_MIN: i64 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeatherObservation {
    /// °C
    pub temperature: Option<f64>,
    /// knots
    pub wind_speed: Option<f64>,
    /// degrees, meteorological (direction the wind blows from)
    pub wind_direction: Option<f64>,
    /// %
    pub humidity: Option<f64>,
    /// hPa
    pub pressure: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Row {
    time: DateTime<Utc>,
    temperature: Option<f64>,
    wind_speed: Option<f64>,
    wind_direction: Option<f64>,
    humidity: Option<f64>,
    pressure: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherSeries {
    pub observations: BTreeMap<DateTime<Utc>, WeatherObservation>,
}

impl WeatherSeries {
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Latest observation at or before `t`, if recent enough.
    pub fn at(&self, t: DateTime<Utc>) -> Option<WeatherObservation> {
        let (when, obs) = self.observations.range(..=t).next_back()?;
        (t - *when <= Duration::minutes(MAX_OBSERVATION_AGE_MIN)).then_some(*obs)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (time, o) in &self.observations {
            w.serialize(Row {
                time: *time,
                temperature: o.temperature,
                wind_speed: o.wind_speed,
                wind_direction: o.wind_direction,
                humidity: o.humidity,
                pressure: o.pressure,
            })
            .expect("in-memory csv write");
        }
        if self.observations.is_empty() {
            return "time,temperature,windSpeed,windDirection,humidity,pressure\n".into();
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut observations = BTreeMap::new();
        for row in r.deserialize::<Row>() {
            let row = row?;
            observations.insert(
                row.time,
                WeatherObservation {
                    temperature: row.temperature,
                    wind_speed: row.wind_speed,
                    wind_direction: row.wind_direction,
                    humidity: row.humidity,
                    pressure: row.pressure,
                },
            );
        }
        Ok(WeatherSeries { observations })
    }
}

pub fn weather_path(root: &Path, sector: &str) -> PathBuf {
    root.join("weather").join(format!("{}.csv", encode_component(sector)))
}

/// Loads a sector's series; a missing file is an empty series.
pub fn load_weather(root: &Path, sector: &str) -> io::Result<WeatherSeries> {
    let path = weather_path(root, sector);
    match fs::read_to_string(&path) {
        Ok(text) => WeatherSeries::from_csv(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(WeatherSeries::default()),
        Err(e) => Err(e),
    }
}

pub fn save_weather(root: &Path, sector: &str, series: &WeatherSeries) -> io::Result<()> {
    write_atomic(&weather_path(root, sector), series.to_csv().as_bytes())
}
