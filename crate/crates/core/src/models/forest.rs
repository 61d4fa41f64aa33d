//! Bootstrap-aggregated CART trees split on class-weighted Gini impurity.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{midpoint, Node, Tree};
use super::{ForestParams, ModelKind, TrainedModel, TrainingSet};
use crate::corpus::ClassWeights;
use crate::error::Result;
use crate::scalar::Real;

pub(crate) fn tree_seed(seed: u64, tree: usize) -> u64 {
    seed ^ (tree as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Sample<T> {
    index: usize,
    count: usize,
    /// Class weights times bootstrap multiplicity, per class.
    weight: [T; 2],
}

struct Builder<'a, 'd, T> {
    data: &'a TrainingSet<'d, T>,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node<T>>,
}

struct Candidate<T> {
    score: T,
    feature: usize,
    threshold: T,
}

fn weighted_sums<T: Real>(samples: &[Sample<T>]) -> ([T; 2], usize) {
    samples.iter().fold(([T::zero(); 2], 0), |(w, n), s| {
        ([w[0] + s.weight[0], w[1] + s.weight[1]], n + s.count)
    })
}

/// Sum of squared class weights over total weight; larger is purer.
fn purity<T: Real>(w: [T; 2]) -> T {
    let total = w[0] + w[1];
    if total > T::zero() {
        (w[0] * w[0] + w[1] * w[1]) / total
    } else {
        T::zero()
    }
}

impl<T: Real> Builder<'_, '_, T> {
    fn leaf_value(w: [T; 2]) -> T {
        let total = w[0] + w[1];
        if total > T::zero() {
            w[1] / total
        } else {
            T::lit(0.5)
        }
    }

    fn best_split(
        &self,
        samples: &[Sample<T>],
        features: &[usize],
        parent: [T; 2],
        n: usize,
    ) -> Option<Candidate<T>> {
        let min_leaf = self.params.min_samples_leaf;
        let base = purity(parent);
        let eps = T::lit(1e-12) * (parent[0] + parent[1]);
        let mut best: Option<Candidate<T>> = None;
        let mut order: Vec<(T, usize)> = Vec::with_capacity(samples.len());
        let mut sorted_features = features.to_vec();
        sorted_features.sort_unstable();
        for &f in &sorted_features {
            order.clear();
            order.extend(
                samples
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (self.data.x[[s.index, f]], k)),
            );
            order.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("finite features")
                    .then(a.1.cmp(&b.1))
            });
            let mut left = [T::zero(); 2];
            let mut left_n = 0usize;
            for w in 0..order.len() - 1 {
                let s = &samples[order[w].1];
                left[0] = left[0] + s.weight[0];
                left[1] = left[1] + s.weight[1];
                left_n += s.count;
                let (lo, hi) = (order[w].0, order[w + 1].0);
                if lo == hi || left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1]];
                let score = purity(left) + purity(right) - base;
                if score > eps && best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Candidate {
                        score,
                        feature: f,
                        threshold: midpoint(lo, hi),
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<Sample<T>>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let (w, n) = weighted_sums(&samples);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: Self::leaf_value(w),
        });
        let pure = w[0] == T::zero() || w[1] == T::zero();
        if pure
            || depth >= self.params.max_depth
            || n < self.params.min_samples_split
            || samples.len() < 2
        {
            return id;
        }
        let width = self.data.x.ncols();
        let features = index::sample(rng, width, self.mtry).into_vec();
        let Some(split) = self.best_split(&samples, &features, w, n) else {
            return id;
        };
        let (left, right): (Vec<_>, Vec<_>) = samples
            .into_iter()
            .partition(|s| self.data.x[[s.index, split.feature]] <= split.threshold);
        let l = self.build(left, depth + 1, rng);
        let r = self.build(right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

fn grow_tree<T: Real>(
    data: &TrainingSet<'_, T>,
    weights: &ClassWeights<T>,
    params: &ForestParams,
    tree: usize,
) -> Tree<T> {
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(params.seed, tree));
    let mut counts = vec![0usize; n];
    if params.bootstrap {
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
    } else {
        counts.iter_mut().for_each(|c| *c = 1);
    }
    let samples: Vec<Sample<T>> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let mut weight = [T::zero(); 2];
            let label = data.y[i];
            weight[label.index()] = weights.get(label) * T::from_count(c);
            Sample {
                index: i,
                count: c,
                weight,
            }
        })
        .collect();
    let mut builder = Builder {
        data,
        params,
        mtry: params.max_features.count(data.x.ncols()),
        nodes: Vec::new(),
    };
    builder.build(samples, 0, &mut rng);
    Tree {
        nodes: builder.nodes,
    }
}

/// Trains a class-weighted random forest. Trees are grown independently
/// from per-tree seeds, so the result does not depend on thread count.
pub fn train_random_forest<T: Real>(
    data: &TrainingSet<'_, T>,
    weights: &ClassWeights<T>,
    params: &ForestParams,
) -> Result<TrainedModel<T>> {
    params.validate()?;
    data.validate_for_training()?;
    let trees: Vec<Tree<T>> = (0..params.estimators)
        .into_par_iter()
        .map(|t| grow_tree(data, weights, params, t))
        .collect();
    Ok(TrainedModel {
        kind: ModelKind::Forest(params.clone()),
        trees,
        base_score: T::zero(),
        fingerprint: data.fingerprint.to_owned(),
        width: data.x.ncols(),
        training_loss: Vec::new(),
    })
}
