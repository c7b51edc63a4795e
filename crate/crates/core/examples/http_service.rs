//! Runs the HTTP prediction service on a free port and queries it.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::thread;

use chrono::NaiveDate;
use sector_congest::gbm::{encode_features, train_boosted, BoostConfig, FeatureSchema};
use sector_congest::serving::{ModelRegistry, PredictionServer, StoredModel, TrainConfig};
use sector_congest::time::parse_utc;

fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    let status = out.lines().next().unwrap_or_default().to_string();
    let payload = out.split("\r\n\r\n").nth(1).unwrap_or_default();
    Ok(format!("{status} {payload}"))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let t0 = parse_utc("2018-03-14T00:00:00Z").unwrap();
    let samples: Vec<_> = (0..1440)
        .step_by(10)
        .map(|m| (encode_features(t0 + chrono::Duration::minutes(m), None), (m / 120) as f64))
        .collect();
    let cfg = BoostConfig {
        n_learners: 50,
        ..BoostConfig::default()
    };
    ModelRegistry::open(dir.path()).save_model(&StoredModel {
        id: String::new(),
        sector: "ZNY10".into(),
        model: train_boosted(&samples, FeatureSchema::default(), &cfg, "ZNY10")?,
        trained_through: NaiveDate::from_ymd_opt(2018, 3, 14).unwrap(),
        training_seconds: 0.0,
        cv_mean_score: None,
        created_at: t0,
    })?;

    let server = PredictionServer::bind(dir.path(), "127.0.0.1:0", TrainConfig::default())?;
    let addr = server.local_addr();
    let stop = server.shutdown_handle();
    thread::scope(|s| -> Result<(), Box<dyn std::error::Error>> {
        s.spawn(|| server.run(2));
        println!("{}", request(addr, "GET", "/health", "")?);
        let body = r#"{"sector":"ZNY10","startTime":"2018-03-15T10:00:00Z","endTime":"2018-03-15T10:03:00Z"}"#;
        println!("{}", request(addr, "POST", "/predict", body)?);
        println!("{}", request(addr, "POST", "/predict", r#"{"sector":"ZNY10"}"#)?);
        stop();
        Ok(())
    })?;
    Ok(())
}
