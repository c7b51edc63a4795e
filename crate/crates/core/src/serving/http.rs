//! HTTP/1.1 front end.
//!
//! - `POST /predict`: prediction request body, see [`super::service`].
//! - `GET /health`: `{"status":"ok","sectors":<models loaded>}`.
//! - `POST /train`: `{"from":"YYYY-MM-DD","to":"YYYY-MM-DD","withUncertainty":false}`;
//!   starts a background training run and answers 202, or 409 while one runs.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use chrono::NaiveDate;
use serde::Deserialize;
use tiny_http::{Header, Method, Request, Response, Server};

use super::registry::ModelRegistry;
use super::service::{handle_predict_json, ServiceError};
use super::training::{train_all_sectors, TrainConfig};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TrainBody {
    from: NaiveDate,
    to: NaiveDate,
    #[serde(default)]
    with_uncertainty: bool,
}

pub struct PredictionServer {
    server: Arc<Server>,
    root: PathBuf,
    registry: Arc<ModelRegistry>,
    training: Arc<AtomicBool>,
    train_config: TrainConfig,
}

impl PredictionServer {
    /// Binds `addr` (port 0 picks a free port).
    pub fn bind(root: &Path, addr: &str, train_config: TrainConfig) -> std::io::Result<Self> {
        let server = Server::http(addr).map_err(|e| std::io::Error::new(std::io::ErrorKind::AddrInUse, e))?;
        Ok(PredictionServer {
            server: Arc::new(server),
            root: root.to_path_buf(),
            registry: Arc::new(ModelRegistry::open(root)),
            training: Arc::new(AtomicBool::new(false)),
            train_config,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.server
            .server_addr()
            .to_ip()
            .expect("bound to an IP address")
    }

    /// Handle that stops [`Self::run`] from another thread.
    pub fn shutdown_handle(&self) -> impl Fn() + Send + 'static {
        let server = self.server.clone();
        move || server.unblock()
    }

    /// Serves requests on `workers` threads until unblocked.
    pub fn run(&self, workers: usize) {
        thread::scope(|s| {
            for _ in 0..workers.max(1) {
                s.spawn(|| {
                    while let Ok(req) = self.server.recv() {
                        self.handle(req);
                    }
                    // each unblock wakes one worker; pass it on
                    self.server.unblock();
                });
            }
        });
    }

    fn handle(&self, mut req: Request) {
        let mut body = String::new();
        if req.as_reader().read_to_string(&mut body).is_err() {
            let e = ServiceError::BadRequest("body is not UTF-8".into());
            return reply(req, e.status(), e.body());
        }
        let (status, text) = match (req.method(), req.url()) {
            (Method::Post, "/predict") => handle_predict_json(&self.registry, &body),
            (Method::Get, "/health") => (
                200,
                format!(
                    r#"{{"status":"ok","sectors":{},"training":{}}}"#,
                    self.registry.sectors().len(),
                    self.training.load(Ordering::SeqCst)
                ),
            ),
            (Method::Post, "/train") => self.start_training(&body),
            _ => (404, r#"{"error":"notFound","message":"no such endpoint"}"#.to_string()),
        };
        reply(req, status, text)
    }

    fn start_training(&self, body: &str) -> (u16, String) {
        let parsed: TrainBody = match serde_json::from_str(body) {
            Ok(b) => b,
            Err(e) => {
                let err = ServiceError::BadRequest(format!("malformed train request: {e}"));
                return (err.status(), err.body());
            }
        };
        if self.training.swap(true, Ordering::SeqCst) {
            return (409, r#"{"error":"busy","message":"training already running"}"#.into());
        }
        let root = self.root.clone();
        let registry = self.registry.clone();
        let flag = self.training.clone();
        let cfg = TrainConfig {
            uncertainty: parsed.with_uncertainty,
            ..self.train_config.clone()
        };
        thread::spawn(move || {
            if let Err(e) = train_all_sectors(&root, &registry, parsed.from, parsed.to, &cfg) {
                eprintln!("training failed: {e}");
            }
            flag.store(false, Ordering::SeqCst);
        });
        (202, r#"{"status":"training"}"#.into())
    }
}

fn reply(req: Request, status: u16, body: String) {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let _ = req.respond(Response::from_string(body).with_status_code(status).with_header(header));
}
