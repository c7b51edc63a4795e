use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("no samples to score")]
    EmptyArrays,
    #[error("{actual} actual values vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
}

/// Exponential accuracy score: `(1/n) Σ exp(−|y_k − F_k| / max(mean(y), 1))`.
/// Equals 1 for a perfect prediction and decays towards 0 with the error.
pub fn score_scc(actual: &[f64], predicted: &[f64]) -> Result<f64, ScoreError> {
    if actual.len() != predicted.len() {
        return Err(ScoreError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(ScoreError::EmptyArrays);
    }
    let n = actual.len() as f64;
    let denom = (actual.iter().sum::<f64>() / n).max(1.0);
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(y, f)| (-(y - f).abs() / denom).exp())
        .sum::<f64>()
        / n)
}
