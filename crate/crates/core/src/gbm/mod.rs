//! Gradient boosting over least-squares regression trees, the exponential
//! accuracy score and k-fold cross-validation.

pub mod boost;
pub mod cv;
pub mod features;
pub mod model_io;
pub mod score;
pub mod tree;

use thiserror::Error;

pub use boost::{predict, train_boosted, BoostConfig, BoostedModel, Prediction, Term};
pub use cv::{cross_validate, fold_assignment, CvReport};
pub use features::{encode_features, FeatureSchema, FeatureVector};
pub use model_io::{model_from_text, model_to_text, ModelFormatError};
pub use score::{score_scc, ScoreError};
pub use tree::{fit_regression_tree, Node, RegressionTree, TrainMatrix, TreeParams};

#[derive(Debug, Error, PartialEq)]
pub enum GbmError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("feature vector has {got} values, model expects {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("dataset of {got} samples cannot be split into {k} folds")]
    DatasetTooSmall { k: usize, got: usize },
    #[error(transparent)]
    Score(#[from] ScoreError),
}
