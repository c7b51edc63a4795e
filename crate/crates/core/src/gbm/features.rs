//! Feature encoding: time features, weather features with a presence mask,
//! and an optional uncertainty-level feature.
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | minute of day, 0..1440 |
//! | 1..=7 | weekday one-hot, Monday first |
//! | 8 | day of year, 1..=366 |
//! | 9 | temperature °C |
//! | 10 | wind speed kt |
//! | 11, 12 | wind direction as (sin, cos) |
//! | 13 | relative humidity % |
//! | 14 | pressure hPa |
//! | 15..=19 | presence mask for temperature, wind speed, wind direction, humidity, pressure |
//! | 20 | uncertainty level 1..=3 (only with [`FeatureSchema::uncertainty`]) |
//!
//! Missing weather values are encoded as 0 with their mask bit off.

use chrono::{DateTime, Datelike, Timelike, Utc};

use crate::occupancy::UncertaintyLevel;
use crate::weather::WeatherObservation;

pub const BASE_FEATURE_NAMES: [&str; 20] = [
    "minuteOfDay",
    "weekdayMon",
    "weekdayTue",
    "weekdayWed",
    "weekdayThu",
    "weekdayFri",
    "weekdaySat",
    "weekdaySun",
    "dayOfYear",
    "temperature",
    "windSpeed",
    "windDirSin",
    "windDirCos",
    "humidity",
    "pressure",
    "hasTemperature",
    "hasWindSpeed",
    "hasWindDirection",
    "hasHumidity",
    "hasPressure",
];
pub const UNCERTAINTY_FEATURE: &str = "uncertainty";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FeatureSchema {
    pub uncertainty: bool,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        BASE_FEATURE_NAMES.len() + usize::from(self.uncertainty)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut n = BASE_FEATURE_NAMES.to_vec();
        if self.uncertainty {
            n.push(UNCERTAINTY_FEATURE);
        }
        n
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Option<Self> {
        [FeatureSchema { uncertainty: false }, FeatureSchema { uncertainty: true }]
            .into_iter()
            .find(|s| s.names().len() == names.len() && s.names().iter().zip(names).all(|(a, b)| *a == b.as_ref()))
    }

    /// Encodes one bucket. `level` is ignored unless the schema carries the
    /// uncertainty feature, where a missing level counts as consistent.
    pub fn encode(
        &self,
        bucket: DateTime<Utc>,
        weather: Option<&WeatherObservation>,
        level: Option<UncertaintyLevel>,
    ) -> FeatureVector {
        let mut fv = encode_features(bucket, weather);
        if self.uncertainty {
            fv.values
                .push(level.unwrap_or(UncertaintyLevel::Consistent).as_u8() as f64);
        }
        fv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn minute_of_day(&self) -> f64 {
        self.values[0]
    }

    pub fn weather_mask(&self) -> [bool; 5] {
        std::array::from_fn(|k| self.values[15 + k] == 1.0)
    }
}

/// Time and weather features of one bucket (the 20 base features).
pub fn encode_features(bucket: DateTime<Utc>, weather: Option<&WeatherObservation>) -> FeatureVector {
    let mut v = Vec::with_capacity(BASE_FEATURE_NAMES.len() + 1);
    v.push((bucket.hour() * 60 + bucket.minute()) as f64);
    let wd = bucket.weekday().num_days_from_monday() as usize;
    v.extend((0..7).map(|k| if k == wd { 1.0 } else { 0.0 }));
    v.push(bucket.ordinal() as f64);

    let w = weather.copied().unwrap_or_default();
    let dir = w.wind_direction.map(|d| d.to_radians());
    let values = [
        w.temperature,
        w.wind_speed,
        dir.map(f64::sin),
        dir.map(f64::cos),
        w.humidity,
        w.pressure,
    ];
    v.extend(values.iter().map(|x| x.unwrap_or(0.0)));
    let present = [
        w.temperature,
        w.wind_speed,
        w.wind_direction,
        w.humidity,
        w.pressure,
    ];
    v.extend(present.iter().map(|x| if x.is_some() { 1.0 } else { 0.0 }));
    FeatureVector { values: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_utc;

    #[test]
    fn noon_on_a_wednesday() {
        let fv = encode_features(parse_utc("2018-03-14T12:00:00Z").unwrap(), None);
        assert_eq!(fv.len(), 20);
        assert_eq!(fv.values[0], 720.0);
        assert_eq!(&fv.values[1..8], &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(fv.values[8], 73.0);
        assert_eq!(fv.weather_mask(), [false; 5]);
        assert!(fv.values[9..15].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn east_wind_is_unit_sine() {
        let obs = WeatherObservation {
            wind_direction: Some(90.0),
            ..WeatherObservation::default()
        };
        let fv = encode_features(parse_utc("2018-03-14T12:00:00Z").unwrap(), Some(&obs));
        assert!((fv.values[11] - 1.0).abs() < 1e-12);
        assert!(fv.values[12].abs() < 1e-12);
        assert_eq!(fv.weather_mask(), [false, false, true, false, false]);
    }

    #[test]
    fn uncertainty_is_appended() {
        let s = FeatureSchema { uncertainty: true };
        let fv = s.encode(parse_utc("2018-03-14T12:00:00Z").unwrap(), None, Some(UncertaintyLevel::Severe));
        assert_eq!(fv.len(), s.len());
        assert_eq!(fv.values[20], 3.0);
        assert_eq!(FeatureSchema::from_names(&s.names()), Some(s));
        assert_eq!(FeatureSchema::from_names(&["x"]), None);
    }
}
