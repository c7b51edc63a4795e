//! Small UTC helpers shared by every stage: minute truncation, day bounds and
//! the canonical second-resolution RFC 3339 rendering.

use chrono::{DateTime, Duration, NaiveDate, SecondsFormat, TimeZone, Timelike, Utc};

pub const MINUTES_PER_DAY: usize = 1440;

/// Renders `t` as `2018-03-14T12:00:00Z`.
pub fn format_utc(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses an RFC 3339 timestamp and normalises it to UTC.
pub fn parse_utc(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub fn floor_minute(t: DateTime<Utc>) -> DateTime<Utc> {
    let secs = t.timestamp();
    Utc.timestamp_opt(secs - secs.rem_euclid(60), 0).unwrap()
}

pub fn is_minute_aligned(t: &DateTime<Utc>) -> bool {
    t.second() == 0 && t.nanosecond() == 0
}

pub fn day_start(day: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).unwrap())
}

/// Start of minute bucket `minute` (0..1440) of `day`.
pub fn bucket_start(day: NaiveDate, minute: usize) -> DateTime<Utc> {
    day_start(day) + Duration::minutes(minute as i64)
}

/// Minute-of-day index of the bucket holding `t`.
pub fn minute_of_day(t: &DateTime<Utc>) -> usize {
    (t.hour() * 60 + t.minute()) as usize
}

pub fn parse_day(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

pub fn format_day(day: NaiveDate) -> String {
    day.format("%Y-%m-%d").to_string()
}

/// Inclusive day range, empty when `from > to`.
pub fn day_range(from: NaiveDate, to: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    let mut next = Some(from);
    std::iter::from_fn(move || {
        let d = next?;
        if d > to {
            return None;
        }
        next = d.succ_opt();
        Some(d)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_and_format() {
        let t = parse_utc("2018-03-14T12:00:30Z").unwrap();
        assert_eq!(format_utc(&floor_minute(t)), "2018-03-14T12:00:00Z");
        assert_eq!(minute_of_day(&t), 720);
        assert!(!is_minute_aligned(&t));
    }

    #[test]
    fn offsets_are_normalised() {
        let t = parse_utc("2018-03-14T14:00:00+02:00").unwrap();
        assert_eq!(format_utc(&t), "2018-03-14T12:00:00Z");
    }

    #[test]
    fn ranges() {
        let a = parse_day("2018-02-27").unwrap();
        let b = parse_day("2018-03-02").unwrap();
        assert_eq!(day_range(a, b).count(), 4);
        assert_eq!(day_range(b, a).count(), 0);
    }
}
