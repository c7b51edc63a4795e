//! Model store: `ml/<sector>/<id>.model` plus an `ACTIVE` pointer per sector.
//!
//! Saving writes the model file, then replaces `ACTIVE` atomically, so a
//! reader sees either the previous or the new model. Earlier versions stay on
//! disk and can be loaded by id.
//!
//! A model file is a header of `key value` lines (`id`, `trainedThrough`,
//! `trainingSeconds`, `cvMeanScore`, `createdAt`), a `---` line, then the
//! model text.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDate, SecondsFormat, Timelike, Utc};
use thiserror::Error;

use crate::fsutil::{decode_component, encode_component, write_atomic};
use crate::gbm::{model_from_text, model_to_text, BoostedModel};
use crate::time::{format_day, parse_day, parse_utc};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("no model for sector {0}")]
    NotFound(String),
    #[error("storing model at {path}: {source}")]
    StorageFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt model file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    /// Assigned by [`ModelRegistry::save_model`]; ignored on input.
    pub id: String,
    pub sector: String,
    pub model: BoostedModel,
    pub trained_through: NaiveDate,
    pub training_seconds: f64,
    pub cv_mean_score: Option<f64>,
    pub created_at: DateTime<Utc>,
}

impl StoredModel {
    fn to_text(&self) -> String {
        let mut s = format!(
            "id {}\ntrainedThrough {}\ntrainingSeconds {}\n",
            self.id,
            format_day(self.trained_through),
            self.training_seconds
        );
        if let Some(cv) = self.cv_mean_score {
            s.push_str(&format!("cvMeanScore {cv}\n"));
        }
        s.push_str(&format!(
            "createdAt {}\n---\n",
            self.created_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        ));
        s.push_str(&model_to_text(&self.model));
        s
    }

    fn from_text(text: &str) -> Result<Self, String> {
        let (head, body) = text.split_once("---\n").ok_or("missing header separator")?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for line in head.lines() {
            let (k, v) = line.split_once(' ').ok_or_else(|| format!("bad header line {line:?}"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing {k}"));
        let model = model_from_text(body).map_err(|e| e.to_string())?;
        Ok(StoredModel {
            id: get("id")?.to_string(),
            sector: model.sector.clone(),
            trained_through: parse_day(get("trainedThrough")?).ok_or("bad trainedThrough")?,
            training_seconds: get("trainingSeconds")?.parse().map_err(|_| "bad trainingSeconds")?,
            cv_mean_score: match fields.get("cvMeanScore") {
                Some(v) => Some(v.parse().map_err(|_| "bad cvMeanScore")?),
                None => None,
            },
            created_at: parse_utc(get("createdAt")?).ok_or("bad createdAt")?,
            model,
        })
    }
}

pub struct ModelRegistry {
    dir: PathBuf,
    cache: RwLock<HashMap<String, Arc<StoredModel>>>,
    save_lock: Mutex<()>,
}

impl ModelRegistry {
    pub fn open(root: impl AsRef<Path>) -> Self {
        ModelRegistry {
            dir: root.as_ref().join("ml"),
            cache: RwLock::new(HashMap::new()),
            save_lock: Mutex::new(()),
        }
    }

    fn sector_dir(&self, sector: &str) -> PathBuf {
        self.dir.join(encode_component(sector))
    }

    fn storage(path: &Path) -> impl FnOnce(io::Error) -> RegistryError + '_ {
        move |source| RegistryError::StorageFailure {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stores the model under a fresh id and makes it the sector's active model.
    pub fn save_model(&self, stored: &StoredModel) -> Result<String, RegistryError> {
        let _guard = self.save_lock.lock().unwrap();
        let dir = self.sector_dir(&stored.sector);
        let next = self.versions(&stored.sector)?.len() + 1;
        let id = format!("v{next:04}");
        let mut stored = stored.clone();
        stored.id = id.clone();
        stored.model.sector = stored.sector.clone();
        stored.created_at = stored.created_at.with_nanosecond(0).expect("zero is a valid nanosecond");
        let path = dir.join(format!("{id}.model"));
        write_atomic(&path, stored.to_text().as_bytes()).map_err(Self::storage(&path))?;
        let active = dir.join("ACTIVE");
        write_atomic(&active, format!("{id}\n").as_bytes()).map_err(Self::storage(&active))?;
        self.cache
            .write()
            .unwrap()
            .insert(stored.sector.clone(), Arc::new(stored));
        Ok(id)
    }

    fn active_id(&self, sector: &str) -> Result<String, RegistryError> {
        let path = self.sector_dir(sector).join("ACTIVE");
        match fs::read_to_string(&path) {
            Ok(s) => Ok(s.trim().to_string()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(RegistryError::NotFound(sector.to_string())),
            Err(source) => Err(RegistryError::StorageFailure { path, source }),
        }
    }

    /// The sector's active model.
    pub fn load_model(&self, sector: &str) -> Result<Arc<StoredModel>, RegistryError> {
        let id = self.active_id(sector)?;
        if let Some(m) = self.cache.read().unwrap().get(sector) {
            if m.id == id {
                return Ok(m.clone());
            }
        }
        let m = Arc::new(self.load_version(sector, &id)?);
        self.cache.write().unwrap().insert(sector.to_string(), m.clone());
        Ok(m)
    }

    pub fn load_version(&self, sector: &str, id: &str) -> Result<StoredModel, RegistryError> {
        let path = self.sector_dir(sector).join(format!("{id}.model"));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(RegistryError::NotFound(sector.to_string())),
            Err(source) => return Err(RegistryError::StorageFailure { path, source }),
        };
        StoredModel::from_text(&text).map_err(|reason| RegistryError::Corrupt { path, reason })
    }

    /// Stored version ids of a sector, oldest first.
    pub fn versions(&self, sector: &str) -> Result<Vec<String>, RegistryError> {
        let dir = self.sector_dir(sector);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(RegistryError::StorageFailure { path: dir, source }),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".model").map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Sectors with an active model.
    pub fn sectors(&self) -> Vec<String> {
        let Ok(entries) = fs::read_dir(&self.dir) else {
            return Vec::new();
        };
        let mut out: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("ACTIVE").exists())
            .filter_map(|e| decode_component(e.file_name().to_str()?))
            .collect();
        out.sort();
        out
    }
}
