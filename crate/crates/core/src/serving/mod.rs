//! Model store, batch training, the prediction service and plot output.

pub mod http;
pub mod plot;
pub mod registry;
pub mod service;
pub mod training;

pub use http::PredictionServer;
pub use plot::{emit_plot, render_plot, PlotError, PlotKind, PlotParams};
pub use registry::{ModelRegistry, RegistryError, StoredModel};
pub use service::{
    handle_predict_json, handle_predict_request, PredictedBucket, PredictionRequest, PredictionResponse, ServiceError,
};
pub use training::{
    build_sector_dataset, prepared_days, sectors_in, train_all_sectors, SectorDataset, TrainConfig, TrainingError,
    TrainingReport,
};
