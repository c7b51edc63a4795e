//! Prediction requests and responses.
//!
//! Request body:
//!
//! ```json
//! {"sector": "S01", "startTime": "2018-03-26T12:00:00Z",
//!  "endTime": "2018-03-26T14:00:00Z", "stepMinutes": 1,
//!  "weather": {"temperature": 12.0, "windSpeed": 8.0, "windDirection": 270.0,
//!              "humidity": 60.0, "pressure": 1012.0}}
//! ```
//!
//! `stepMinutes` defaults to 1 and `weather` is optional (missing values are
//! encoded as absent). A response lists one bucket per step in
//! `[startTime, endTime)`. Errors come back as `{"error": kind, "message": ..}`
//! with kind `notFound` or `badRequest`.

use std::time::Instant;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::registry::{ModelRegistry, RegistryError};
use crate::gbm::predict;
use crate::occupancy::UncertaintyLevel;
use crate::time::is_minute_aligned;
use crate::weather::WeatherObservation;

/// Longest horizon served in one request.
pub const MAX_HORIZON_MINUTES: i64 = 7 * 1440;

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PredictionRequest {
    pub sector: String,
    pub start_time: DateTime<Utc>,
    pub end_time: DateTime<Utc>,
    #[serde(default = "one")]
    pub step_minutes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<WeatherObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictedBucket {
    pub time: DateTime<Utc>,
    pub predicted_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictionResponse {
    pub sector: String,
    pub buckets: Vec<PredictedBucket>,
    pub model_id: String,
    pub elapsed_millis: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) => 404,
            ServiceError::BadRequest(_) => 400,
        }
    }

    pub fn body(&self) -> String {
        let kind = match self {
            ServiceError::NotFound(_) => "notFound",
            ServiceError::BadRequest(_) => "badRequest",
        };
        serde_json::to_string(&ErrorBody {
            error: kind.into(),
            message: self.to_string(),
        })
        .expect("error body encodes")
    }
}

impl PredictionRequest {
    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: &str| Err(ServiceError::BadRequest(m.to_string()));
        if self.sector.is_empty() {
            return bad("sector is empty");
        }
        if self.start_time >= self.end_time {
            return bad("startTime must precede endTime");
        }
        if self.step_minutes == 0 {
            return bad("stepMinutes must be at least 1");
        }
        if !is_minute_aligned(&self.start_time) {
            return bad("startTime must be minute-aligned");
        }
        if self.end_time - self.start_time > Duration::minutes(MAX_HORIZON_MINUTES) {
            return bad("horizon longer than 7 days");
        }
        Ok(())
    }

    /// Bucket start times: `start + k·step` for every such time before `end`.
    pub fn bucket_times(&self) -> Vec<DateTime<Utc>> {
        let step = Duration::minutes(self.step_minutes as i64);
        let mut out = Vec::new();
        let mut t = self.start_time;
        while t < self.end_time {
            out.push(t);
            t += step;
        }
        out
    }
}

/// Loads the sector's active model and predicts every bucket. Buckets of a
/// model trained with the uncertainty feature are predicted at level 1.
pub fn handle_predict_request(
    registry: &ModelRegistry,
    req: &PredictionRequest,
) -> Result<PredictionResponse, ServiceError> {
    let clock = Instant::now();
    req.validate()?;
    let stored = registry.load_model(&req.sector).map_err(|e| match e {
        RegistryError::NotFound(s) => ServiceError::NotFound(format!("no model for sector {s}")),
        other => ServiceError::NotFound(other.to_string()),
    })?;
    let schema = stored.model.schema;
    let buckets = req
        .bucket_times()
        .into_iter()
        .map(|t| {
            let x = schema.encode(t, req.weather.as_ref(), Some(UncertaintyLevel::Consistent));
            let p = predict(&stored.model, &x).expect("encoded with the model's schema");
            PredictedBucket {
                time: t,
                predicted_count: p.count,
            }
        })
        .collect();
    Ok(PredictionResponse {
        sector: req.sector.clone(),
        buckets,
        model_id: stored.id.clone(),
        elapsed_millis: clock.elapsed().as_secs_f64() * 1000.0,
    })
}

/// Decodes a JSON request, serves it and encodes the reply: `(status, body)`.
pub fn handle_predict_json(registry: &ModelRegistry, body: &str) -> (u16, String) {
    let req: PredictionRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => {
            let err = ServiceError::BadRequest(format!("malformed request: {e}"));
            return (err.status(), err.body());
        }
    };
    match handle_predict_request(registry, &req) {
        Ok(resp) => (200, serde_json::to_string(&resp).expect("response encodes")),
        Err(e) => (e.status(), e.body()),
    }
}
