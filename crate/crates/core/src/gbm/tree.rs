//! Least-squares regression trees.
//!
//! Trees grow level by level. Each feature column is sorted once per
//! training matrix; a level costs one pass over every sorted column, with
//! each sample routed to the accumulator of the node it currently sits in.
//! Candidate thresholds are midpoints between consecutive distinct values
//! and a sample goes left when `x <= threshold`. Among splits with equal
//! squared-error reduction the lowest feature index wins, then the lowest
//! threshold.

use super::features::FeatureVector;
use super::GbmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 4,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Checks child links and finiteness.
    pub fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if std::mem::replace(&mut seen[at], true) {
                return Err(format!("node {at} reached twice"));
            }
            match &self.nodes[at] {
                Node::Leaf { value } if !value.is_finite() => return Err(format!("leaf {at} not finite")),
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(format!("split {at} malformed"));
                    }
                    for c in [*left, *right] {
                        if c <= at || c >= self.nodes.len() {
                            return Err(format!("split {at} points to {c}"));
                        }
                        stack.push(c);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }
}

/// Column-major feature matrix with every column sorted once.
#[derive(Debug, Clone)]
pub struct TrainMatrix {
    n_samples: usize,
    n_features: usize,
    columns: Vec<Vec<f64>>,
    /// Per feature: sample ids by ascending value, and the values in that order.
    sorted: Vec<(Vec<u32>, Vec<f64>)>,
}

impl TrainMatrix {
    pub fn new(rows: &[FeatureVector]) -> Result<Self, GbmError> {
        let n_features = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(GbmError::SchemaMismatch {
                expected: n_features,
                got: bad.len(),
            });
        }
        let columns: Vec<Vec<f64>> = (0..n_features)
            .map(|f| rows.iter().map(|r| r.values[f]).collect())
            .collect();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut ids: Vec<u32> = (0..rows.len() as u32).collect();
                ids.sort_by(|a, b| col[*a as usize].total_cmp(&col[*b as usize]).then(a.cmp(b)));
                let vals = ids.iter().map(|i| col[*i as usize]).collect();
                (ids, vals)
            })
            .collect();
        Ok(TrainMatrix {
            n_samples: rows.len(),
            n_features,
            columns,
            sorted,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn is_constant(&self, f: usize) -> bool {
        let vals = &self.sorted[f].1;
        vals.first() == vals.last()
    }
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Scan {
    left_sum: f64,
    left_n: usize,
    last: f64,
}

/// `a` beats `b` when its gain is larger beyond rounding noise.
pub(crate) fn strictly_better(a: f64, b: f64) -> bool {
    a > b + 1e-10 * b.abs().max(1.0)
}

/// Fits a tree to `residuals` and returns it with each sample's leaf value.
pub fn fit_on_matrix(
    m: &TrainMatrix,
    residuals: &[f64],
    params: &TreeParams,
) -> Result<(RegressionTree, Vec<f64>), GbmError> {
    let n = m.n_samples;
    if n == 0 || n < params.min_leaf || residuals.len() != n {
        return Err(GbmError::TooFewSamples {
            needed: params.min_leaf.max(1),
            got: n,
        });
    }
    let min_leaf = params.min_leaf.max(1);
    // node id of every sample; node stats indexed by node id
    let mut node_of = vec![0u32; n];
    let mut sums = vec![residuals.iter().sum::<f64>()];
    let mut counts = vec![n];
    let mut splits: Vec<Option<(usize, f64, usize, usize)>> = vec![None];
    let mut frontier = vec![0usize];

    for _ in 0..params.max_depth {
        let open: Vec<usize> = frontier.iter().copied().filter(|id| counts[*id] >= 2 * min_leaf).collect();
        if open.is_empty() {
            break;
        }
        let mut slot = vec![usize::MAX; sums.len()];
        for (k, id) in open.iter().enumerate() {
            slot[*id] = k;
        }
        let mut best: Vec<Option<Best>> = vec![None; open.len()];
        for f in 0..m.n_features {
            if m.is_constant(f) {
                continue;
            }
            let mut scans = vec![Scan::default(); open.len()];
            let (ids, vals) = &m.sorted[f];
            for (i, x) in ids.iter().zip(vals) {
                let i = *i as usize;
                let k = slot[node_of[i] as usize];
                if k == usize::MAX {
                    continue;
                }
                let id = open[k];
                let s = &mut scans[k];
                if s.left_n >= min_leaf && *x != s.last && counts[id] - s.left_n >= min_leaf {
                    let right_sum = sums[id] - s.left_sum;
                    let right_n = counts[id] - s.left_n;
                    let gain = s.left_sum * s.left_sum / s.left_n as f64 + right_sum * right_sum / right_n as f64;
                    let threshold = s.last + (*x - s.last) / 2.0;
                    if best[k].map_or(true, |b| strictly_better(gain, b.gain)) {
                        best[k] = Some(Best {
                            gain,
                            feature: f,
                            threshold,
                        });
                    }
                }
                s.left_sum += residuals[i];
                s.left_n += 1;
                s.last = *x;
            }
        }
        let mut next = Vec::new();
        let mut child_of = vec![(0u32, 0u32); open.len()];
        let mut will_split = vec![false; open.len()];
        for (k, id) in open.iter().enumerate() {
            let Some(b) = best[k] else { continue };
            let parent = sums[*id] * sums[*id] / counts[*id] as f64;
            if !strictly_better(b.gain, parent) {
                continue;
            }
            let left = sums.len();
            sums.extend([0.0, 0.0]);
            counts.extend([0, 0]);
            splits.extend([None, None]);
            splits[*id] = Some((b.feature, b.threshold, left, left + 1));
            child_of[k] = (left as u32, left as u32 + 1);
            will_split[k] = true;
            next.extend([left, left + 1]);
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            let id = node_of[i] as usize;
            let k = if id < slot.len() { slot[id] } else { usize::MAX };
            if k == usize::MAX || !will_split[k] {
                continue;
            }
            let (feature, threshold, ..) = splits[id].unwrap();
            let child = if m.columns[feature][i] <= threshold {
                child_of[k].0
            } else {
                child_of[k].1
            };
            node_of[i] = child;
        }
        let is_new: Vec<bool> = (0..sums.len()).map(|id| id >= slot.len()).collect();
        for i in 0..n {
            let id = node_of[i] as usize;
            if is_new[id] {
                sums[id] += residuals[i];
                counts[id] += 1;
            }
        }
        frontier = next;
    }

    // renumber in depth-first order so children always follow their parent
    let mut nodes = Vec::with_capacity(splits.len());
    let mut new_id = vec![0usize; splits.len()];
    fn emit(
        id: usize,
        splits: &[Option<(usize, f64, usize, usize)>],
        sums: &[f64],
        counts: &[usize],
        nodes: &mut Vec<Node>,
        new_id: &mut [usize],
    ) -> usize {
        let me = nodes.len();
        new_id[id] = me;
        match splits[id] {
            None => nodes.push(Node::Leaf {
                value: sums[id] / counts[id] as f64,
            }),
            Some((feature, threshold, l, r)) => {
                nodes.push(Node::Leaf { value: 0.0 });
                let left = emit(l, splits, sums, counts, nodes, new_id);
                let right = emit(r, splits, sums, counts, nodes, new_id);
                nodes[me] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        me
    }
    emit(0, &splits, &sums, &counts, &mut nodes, &mut new_id);
    let fitted = node_of
        .iter()
        .map(|id| match nodes[new_id[*id as usize]] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("samples always sit in leaves"),
        })
        .collect();
    Ok((RegressionTree { nodes }, fitted))
}

/// Fits one tree to `(features, residual)` samples.
pub fn fit_regression_tree(samples: &[(FeatureVector, f64)], params: &TreeParams) -> Result<RegressionTree, GbmError> {
    let rows: Vec<FeatureVector> = samples.iter().map(|s| s.0.clone()).collect();
    let residuals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let m = TrainMatrix::new(&rows)?;
    Ok(fit_on_matrix(&m, &residuals, params)?.0)
}
