use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, Weekday};
use tempfile::TempDir;

use sector_congest::gbm::BoostConfig;
use sector_congest::prep::{run_preparation, PrepConfig};
use sector_congest::raw_store::RawStore;
use sector_congest::serving::training::TrainingLock;
use sector_congest::serving::{
    emit_plot, handle_predict_json, render_plot, train_all_sectors, ModelRegistry, PlotError, PlotKind, PlotParams,
    PredictionResponse, PredictionServer, TrainConfig, TrainingError,
};
use sector_congest::synth::{generate_scenario, ScenarioSpec};
use sector_congest::time::day_range;
use sector_congest::weather::save_weather;

const FROM: (i32, u32, u32) = (2018, 3, 5);
const TO: (i32, u32, u32) = (2018, 3, 18);

fn d((y, m, day): (i32, u32, u32)) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn quick() -> TrainConfig {
    TrainConfig {
        boost: BoostConfig {
            n_learners: 40,
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    }
}

/// Prepared 14-day corpus over three sectors, with weather for S01.
fn prepared() -> TempDir {
    let spec = ScenarioSpec {
        seed: 77,
        from: d(FROM),
        to: d(TO),
        flights_per_day: 150,
        sector_count: Some(3),
        repeat_schedule: true,
        jitter_minutes: 2,
        weather_sectors: vec!["S01".into()],
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = RawStore::open(dir.path()).unwrap();
    for day in scenario.message_days() {
        store.ingest_day(scenario.lines_for_day(day), day).unwrap();
    }
    for (s, w) in &scenario.weather {
        save_weather(dir.path(), s, w).unwrap();
    }
    for day in day_range(spec.from, spec.to) {
        run_preparation(dir.path(), day, &PrepConfig::default()).unwrap();
    }
    dir
}

/// A trained corpus shared by the read-only tests.
fn trained() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = prepared();
        let registry = ModelRegistry::open(dir.path());
        let report = train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &quick()).unwrap();
        assert_eq!(report.trained(), 3, "{report:?}");
        dir
    })
    .path()
}

#[test]
fn training_stores_one_active_model_per_sector() {
    let root = trained();
    let registry = ModelRegistry::open(root);
    assert_eq!(registry.sectors(), vec!["S01", "S02", "S03"]);
    for s in registry.sectors() {
        let m = registry.load_model(&s).unwrap();
        assert_eq!(m.trained_through, d(TO));
        assert_eq!(m.model.n_learners(), 40);
    }
}

#[test]
fn a_held_lock_makes_training_busy() {
    let dir = prepared();
    let _held = TrainingLock::acquire(dir.path()).unwrap();
    let registry = ModelRegistry::open(dir.path());
    let err = train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &quick()).unwrap_err();
    assert!(matches!(err, TrainingError::Busy(_)), "{err}");
    drop(_held);
    assert!(train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &quick()).is_ok());
}

#[test]
fn retraining_activates_a_new_version() {
    let dir = prepared();
    let registry = ModelRegistry::open(dir.path());
    train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &quick()).unwrap();
    let cfg = TrainConfig {
        uncertainty: true,
        ..quick()
    };
    train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &cfg).unwrap();
    assert_eq!(registry.versions("S02").unwrap(), vec!["v0001", "v0002"]);
    let active = ModelRegistry::open(dir.path()).load_model("S02").unwrap();
    assert_eq!(active.id, "v0002");
    assert!(active.model.schema.uncertainty);
}

#[test]
fn prediction_json_contract() {
    let registry = ModelRegistry::open(trained());
    let ok = r#"{"sector":"S01","startTime":"2018-03-19T06:00:00Z","endTime":"2018-03-19T07:00:00Z","stepMinutes":10}"#;
    let (status, body) = handle_predict_json(&registry, ok);
    assert_eq!(status, 200, "{body}");
    let resp: PredictionResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.buckets.len(), 6);
    assert!(resp.buckets.iter().all(|b| b.predicted_count >= 0.0));

    let cases = [
        (r#"{"sector":"S09","startTime":"2018-03-19T06:00:00Z","endTime":"2018-03-19T07:00:00Z"}"#, 404),
        (r#"{"sector":"S01","startTime":"2018-03-19T07:00:00Z","endTime":"2018-03-19T06:00:00Z"}"#, 400),
        (r#"{"sector":"S01","startTime":"2018-03-19T06:00:00Z","endTime":"2018-03-19T07:00:00Z","stepMinutes":0}"#, 400),
        (r#"{"sector":"S01","startTime":"2018-03-19T06:00:00Z","endTime":"2018-04-19T07:00:00Z"}"#, 400),
        (r#"{"sector":"S01","startTime":"2018-03-19T06:00:00Z"}"#, 400),
        (r#"{"sector":"S01","startTime":"2018-03-19T06:00:00Z","endTime":"2018-03-19T07:00:00Z","extra":1}"#, 400),
        ("not json", 400),
    ];
    for (body, want) in cases {
        let (status, text) = handle_predict_json(&registry, body);
        assert_eq!(status, want, "{body} -> {text}");
        let err: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(err["error"].is_string() && err["message"].is_string());
    }
}

fn http(addr: SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: x\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    let status = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, out.split("\r\n\r\n").nth(1).unwrap_or_default().to_string())
}

#[test]
fn http_routes() {
    let dir = prepared();
    let registry = ModelRegistry::open(dir.path());
    train_all_sectors(dir.path(), &registry, d(FROM), d(TO), &quick()).unwrap();
    let cfg = TrainConfig {
        boost: BoostConfig {
            n_learners: 150,
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    };
    let server = PredictionServer::bind(dir.path(), "127.0.0.1:0", cfg).unwrap();
    let addr = server.local_addr();
    let stop = server.shutdown_handle();
    thread::scope(|s| {
        s.spawn(|| server.run(3));
        let (status, body) = http(addr, "GET", "/health", "");
        assert_eq!(status, 200, "{body}");

        let predict = r#"{"sector":"S03","startTime":"2018-03-19T12:00:00Z","endTime":"2018-03-19T14:00:00Z"}"#;
        let (status, first) = http(addr, "POST", "/predict", predict);
        assert_eq!(status, 200, "{first}");
        let first: PredictionResponse = serde_json::from_str(&first).unwrap();
        assert_eq!(first.buckets.len(), 120);

        assert_eq!(http(addr, "GET", "/nowhere", "").0, 404);
        assert_eq!(http(addr, "POST", "/predict", "{").0, 400);
        assert_eq!(http(addr, "POST", "/train", r#"{"from":"2018-03-05"}"#).0, 400);

        let train = r#"{"from":"2018-03-05","to":"2018-03-18"}"#;
        let (status, body) = http(addr, "POST", "/train", train);
        assert_eq!(status, 202, "{body}");
        let (status, body) = http(addr, "POST", "/train", train);
        assert_eq!(status, 409, "{body}");

        // reads keep working while training runs; the answer comes from a
        // complete model, old or new
        let (status, during) = http(addr, "POST", "/predict", predict);
        assert_eq!(status, 200, "{during}");
        let during: PredictionResponse = serde_json::from_str(&during).unwrap();
        assert!(during.model_id == "v0001" || during.model_id == "v0002");

        let deadline = Instant::now() + Duration::from_secs(300);
        loop {
            let (_, body) = http(addr, "POST", "/predict", predict);
            let r: PredictionResponse = serde_json::from_str(&body).unwrap();
            let (_, health) = http(addr, "GET", "/health", "");
            if r.model_id == "v0002" && health.contains(r#""training":false"#) {
                break;
            }
            assert!(Instant::now() < deadline, "training did not finish");
            thread::sleep(Duration::from_millis(100));
        }
        let (status, _) = http(addr, "POST", "/train", train);
        assert_eq!(status, 202);
        let deadline = Instant::now() + Duration::from_secs(300);
        while http(addr, "GET", "/health", "").1.contains(r#""training":true"#) {
            assert!(Instant::now() < deadline, "training did not finish");
            thread::sleep(Duration::from_millis(100));
        }
        stop();
    });
}

#[test]
fn plots_are_deterministic_and_complete() {
    let root = trained();
    let params = PlotParams {
        sector: Some("S01".into()),
        day: Some(NaiveDate::from_ymd_opt(2018, 3, 14).unwrap()),
        weekday: Some(Weekday::Wed),
        ..PlotParams::default()
    };
    let out = tempfile::tempdir().unwrap();
    for kind in PlotKind::ALL {
        let a = render_plot(root, kind, &params).unwrap();
        let b = render_plot(root, kind, &params).unwrap();
        assert_eq!(a, b, "{kind:?}");
        let path = out.path().join(format!("{}.csv", kind.as_str()));
        let rows = emit_plot(root, kind, &params, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), a);
        assert!(rows > 0, "{kind:?}");
        assert_eq!(kind.as_str().parse::<PlotKind>().unwrap(), kind);
    }

    let conv = render_plot(root, PlotKind::Convergence, &params).unwrap();
    let mse: Vec<f64> = conv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(mse.len(), 41);
    assert!(mse.windows(2).all(|w| w[1] <= w[0]));

    let heat = render_plot(root, PlotKind::Heatmap, &params).unwrap();
    assert_eq!(heat.lines().count(), 4);

    let missing = PlotParams {
        sector: Some("S99".into()),
        ..params.clone()
    };
    assert!(matches!(
        render_plot(root, PlotKind::Convergence, &missing),
        Err(PlotError::MissingData(_))
    ));
    assert!(matches!(
        render_plot(root, PlotKind::SectorCurve, &PlotParams::default()),
        Err(PlotError::MissingData(_))
    ));
}
