use super::features::{FeatureSchema, FeatureVector};
use super::tree::{fit_on_matrix, RegressionTree, TrainMatrix, TreeParams};
use super::GbmError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig {
    pub n_learners: usize,
    /// ν: every term's step length is ν, or ν times the line-search optimum.
    pub shrinkage: f64,
    pub tree: TreeParams,
    pub line_search: bool,
    /// Fold shuffling seed for cross-validation; training itself draws no
    /// random numbers.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_learners: 400,
            shrinkage: 0.1,
            tree: TreeParams::default(),
            line_search: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub tree: RegressionTree,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub sector: String,
    pub schema: FeatureSchema,
    pub f0: f64,
    pub shrinkage: f64,
    pub terms: Vec<Term>,
    /// Mean squared training error after F₀ and after each term.
    pub train_mse: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub raw: f64,
    /// `raw` clamped at zero.
    pub count: f64,
}

impl BoostedModel {
    pub fn n_learners(&self) -> usize {
        self.terms.len()
    }

    pub fn raw(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.f0, |acc, t| acc + t.rho * t.tree.predict(x))
    }
}

pub fn predict(model: &BoostedModel, x: &FeatureVector) -> Result<Prediction, GbmError> {
    if x.len() != model.schema.len() {
        return Err(GbmError::SchemaMismatch {
            expected: model.schema.len(),
            got: x.len(),
        });
    }
    let raw = model.raw(&x.values);
    Ok(Prediction {
        raw,
        count: raw.max(0.0),
    })
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Boosting: F₀ = mean(y); for each term fit a tree to the residuals
/// y − Fᵢ₋₁(x) and add it with step length ρᵢ.
pub fn train_boosted(
    samples: &[(FeatureVector, f64)],
    schema: FeatureSchema,
    cfg: &BoostConfig,
    sector: &str,
) -> Result<BoostedModel, GbmError> {
    if samples.is_empty() {
        return Err(GbmError::EmptyDataset);
    }
    let rows: Vec<FeatureVector> = samples.iter().map(|s| s.0.clone()).collect();
    if let Some(bad) = rows.iter().find(|r| r.len() != schema.len()) {
        return Err(GbmError::SchemaMismatch {
            expected: schema.len(),
            got: bad.len(),
        });
    }
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let matrix = TrainMatrix::new(&rows)?;
    train_on_matrix(&matrix, &y, schema, cfg, sector)
}

pub(crate) fn train_on_matrix(
    matrix: &TrainMatrix,
    y: &[f64],
    schema: FeatureSchema,
    cfg: &BoostConfig,
    sector: &str,
) -> Result<BoostedModel, GbmError> {
    let n = y.len();
    if n == 0 {
        return Err(GbmError::EmptyDataset);
    }
    let params = TreeParams {
        max_depth: cfg.tree.max_depth,
        min_leaf: cfg.tree.min_leaf.clamp(1, n),
    };
    let f0 = y.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![f0; n];
    let mut history = vec![mse(y, &fitted)];
    let mut terms = Vec::with_capacity(cfg.n_learners);
    let mut residuals = vec![0.0; n];
    for _ in 0..cfg.n_learners {
        for i in 0..n {
            residuals[i] = y[i] - fitted[i];
        }
        let (tree, h) = fit_on_matrix(matrix, &residuals, &params)?;
        let rho = if cfg.line_search {
            let num: f64 = residuals.iter().zip(&h).map(|(r, v)| r * v).sum();
            let den: f64 = h.iter().map(|v| v * v).sum();
            if den > 0.0 {
                cfg.shrinkage * num / den
            } else {
                cfg.shrinkage
            }
        } else {
            cfg.shrinkage
        };
        for i in 0..n {
            fitted[i] += rho * h[i];
        }
        history.push(mse(y, &fitted));
        terms.push(Term { tree, rho });
    }
    Ok(BoostedModel {
        sector: sector.to_string(),
        schema,
        f0,
        shrinkage: cfg.shrinkage,
        terms,
        train_mse: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbm::features::encode_features;
    use crate::time::parse_utc;
    use chrono::Duration;

    fn samples(target: impl Fn(usize) -> f64, n: usize) -> Vec<(FeatureVector, f64)> {
        let t0 = parse_utc("2018-03-14T00:00:00Z").unwrap();
        (0..n)
            .map(|i| (encode_features(t0 + Duration::minutes(i as i64 * 7), None), target(i)))
            .collect()
    }

    #[test]
    fn constant_target_is_a_fixed_point() {
        let s = samples(|_| 4.0, 30);
        let m = train_boosted(&s, FeatureSchema::default(), &BoostConfig { n_learners: 20, ..Default::default() }, "S").unwrap();
        assert_eq!(m.f0, 4.0);
        for (x, _) in &s {
            assert_eq!(predict(&m, x).unwrap().raw, 4.0);
        }
    }

    #[test]
    fn zero_learners_predict_the_mean() {
        let s = samples(|i| i as f64, 10);
        let m = train_boosted(&s, FeatureSchema::default(), &BoostConfig { n_learners: 0, ..Default::default() }, "S").unwrap();
        assert!(m.terms.is_empty());
        assert_eq!(predict(&m, &s[0].0).unwrap().raw, 4.5);
    }

    #[test]
    fn piecewise_constant_is_learned() {
        let s = samples(|i| [0.0, 5.0, 2.0, 9.0][i / 5], 20);
        let cfg = BoostConfig {
            n_learners: 50,
            shrinkage: 1.0,
            tree: TreeParams { max_depth: 3, min_leaf: 1 },
            ..Default::default()
        };
        let m = train_boosted(&s, FeatureSchema::default(), &cfg, "S").unwrap();
        assert!(*m.train_mse.last().unwrap() < 1e-6);
        assert!(m.train_mse.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn clamps_negative_predictions() {
        let s = samples(|_| 0.0, 5);
        let mut m = train_boosted(&s, FeatureSchema::default(), &BoostConfig { n_learners: 0, ..Default::default() }, "S").unwrap();
        m.f0 = 2.0;
        m.terms.push(Term {
            tree: RegressionTree::leaf(-6.0),
            rho: 0.5,
        });
        let p = predict(&m, &s[0].0).unwrap();
        assert_eq!(p.raw, -1.0);
        assert_eq!(p.count, 0.0);
    }

    #[test]
    fn rejects_wrong_schema() {
        let s = samples(|_| 1.0, 5);
        let m = train_boosted(&s, FeatureSchema::default(), &BoostConfig { n_learners: 1, ..Default::default() }, "S").unwrap();
        let short = FeatureVector { values: vec![1.0] };
        assert_eq!(
            predict(&m, &short),
            Err(GbmError::SchemaMismatch { expected: 20, got: 1 })
        );
        assert_eq!(
            train_boosted(&[], FeatureSchema::default(), &BoostConfig::default(), "S"),
            Err(GbmError::EmptyDataset)
        );
    }
}
