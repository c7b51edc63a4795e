use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::boost::{train_on_matrix, BoostConfig};
use super::features::{FeatureSchema, FeatureVector};
use super::score::score_scc;
use super::tree::TrainMatrix;
use super::GbmError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CvReport {
    pub k: usize,
    pub per_fold_score: Vec<f64>,
    pub mean_score: f64,
    pub fold_sizes: Vec<usize>,
}

/// Seeded shuffle, then sample at shuffled position `p` goes to fold `p % k`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k.max(1) + 1); k];
    for (p, i) in order.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// k rounds of train-on-the-rest, score-the-fold.
pub fn cross_validate(
    samples: &[(FeatureVector, f64)],
    k: usize,
    schema: FeatureSchema,
    cfg: &BoostConfig,
    seed: u64,
) -> Result<CvReport, GbmError> {
    if k < 2 || samples.len() < k {
        return Err(GbmError::DatasetTooSmall { k, got: samples.len() });
    }
    let folds = fold_assignment(samples.len(), k, seed);
    let scores: Vec<Result<f64, GbmError>> = folds
        .par_iter()
        .map(|held| {
            let mut in_fold = vec![false; samples.len()];
            for i in held {
                in_fold[*i] = true;
            }
            let (train, y): (Vec<FeatureVector>, Vec<f64>) = samples
                .iter()
                .zip(&in_fold)
                .filter(|(_, f)| !**f)
                .map(|(s, _)| (s.0.clone(), s.1))
                .unzip();
            let matrix = TrainMatrix::new(&train)?;
            let model = train_on_matrix(&matrix, &y, schema, cfg, "")?;
            let actual: Vec<f64> = held.iter().map(|i| samples[*i].1).collect();
            let predicted: Vec<f64> = held
                .iter()
                .map(|i| model.raw(&samples[*i].0.values).max(0.0))
                .collect();
            Ok(score_scc(&actual, &predicted)?)
        })
        .collect();
    let per_fold_score = scores.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mean_score = per_fold_score.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        k,
        mean_score,
        fold_sizes: folds.iter().map(Vec::len).collect(),
        per_fold_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_dataset() {
        let folds = fold_assignment(23, 5, 9);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, fold_assignment(23, 5, 9));
        assert_ne!(folds, fold_assignment(23, 5, 10));
    }

    #[test]
    fn leave_one_out_and_too_small() {
        let s: Vec<_> = (0..4)
            .map(|i| (FeatureVector { values: vec![0.0; 20] }, i as f64))
            .collect();
        let cfg = BoostConfig { n_learners: 3, ..Default::default() };
        let r = cross_validate(&s, 4, FeatureSchema::default(), &cfg, 1).unwrap();
        assert_eq!(r.per_fold_score.len(), 4);
        assert_eq!(r.fold_sizes, vec![1; 4]);
        assert!(r.per_fold_score.iter().all(|s| (0.0..=1.0).contains(s)));
        assert_eq!(
            cross_validate(&s, 5, FeatureSchema::default(), &cfg, 1),
            Err(GbmError::DatasetTooSmall { k: 5, got: 4 })
        );
    }
}
