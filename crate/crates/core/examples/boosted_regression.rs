//! Boosted regression trees on time features: training, scoring, and the
//! text model format.

use chrono::Duration;
use sector_congest::gbm::{
    encode_features, model_from_text, model_to_text, predict, score_scc, train_boosted, BoostConfig, FeatureSchema,
};
use sector_congest::time::parse_utc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t0 = parse_utc("2018-03-12T00:00:00Z").unwrap();
    // Two weeks of a synthetic daily profile: busy daytime, busier on weekdays.
    let samples: Vec<_> = (0..14 * 1440)
        .step_by(5)
        .map(|m| {
            let t = t0 + Duration::minutes(m);
            let minute = (m % 1440) as f64;
            let weekday = (m / 1440) % 7 < 5;
            let y = if (420.0..1260.0).contains(&minute) { 8.0 } else { 1.0 } + if weekday { 3.0 } else { 0.0 };
            (encode_features(t, None), y)
        })
        .collect();

    let cfg = BoostConfig {
        n_learners: 100,
        ..BoostConfig::default()
    };
    let model = train_boosted(&samples, FeatureSchema::default(), &cfg, "demo")?;
    let mse = &model.train_mse;
    println!("f0 {:.3}, training MSE {:.4} -> {:.6}", model.f0, mse[0], mse[mse.len() - 1]);

    let actual: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let predicted: Vec<f64> = samples.iter().map(|s| predict(&model, &s.0).unwrap().raw).collect();
    println!("in-sample score {:.4}", score_scc(&actual, &predicted)?);

    let text = model_to_text(&model);
    let back = model_from_text(&text)?;
    println!("model text: {} lines, round trip equal: {}", text.lines().count(), back == model);

    let t = parse_utc("2018-03-26T13:00:00Z").unwrap();
    let p = predict(&model, &encode_features(t, None))?;
    println!("{t}: raw {:.3}, count {}", p.raw, p.count);
    Ok(())
}
