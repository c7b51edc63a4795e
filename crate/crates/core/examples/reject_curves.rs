//! Outlier rejection over one (sector, weekday) group of daily curves.

use chrono::{Duration, NaiveDate};
use sector_congest::curve_filter::{reject_outliers, DailyCurve, MinuteWindow};
use sector_congest::time::MINUTES_PER_DAY;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let first = NaiveDate::from_ymd_opt(2018, 1, 3).unwrap();
    let curves: Vec<DailyCurve> = (0..16)
        .map(|week| {
            let offset = if [2, 6, 11, 13].contains(&week) { 50 } else { 0 };
            let values = (0..MINUTES_PER_DAY)
                .map(|m| {
                    let shape = if (360..1320).contains(&m) { 12 } else { 2 };
                    shape + week as u32 / 4 + ((m + week) % 3) as u32 + offset
                })
                .collect();
            DailyCurve {
                sector: "ZDC52".into(),
                day: first + Duration::weeks(week as i64),
                values,
            }
        })
        .collect();

    let r = reject_outliers(&curves, &MinuteWindow::default())?;
    println!("trend: {:.3} + {:.3} * week", r.trend.intercept, r.trend.slope);
    println!("threshold {:.4}", r.threshold);
    for (i, c) in curves.iter().enumerate() {
        let mark = if r.rejected.contains(&i) { "rejected" } else { "" };
        println!("{} score {:.4} {mark}", c.day, r.scores[i]);
    }
    println!("{} of {} curves kept", r.accepted().len(), curves.len());
    Ok(())
}
