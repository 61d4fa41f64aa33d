//! Newton boosting of regression trees on class-weighted logistic loss.
//!
//! Trees are grown level by level with an exact greedy split search over
//! presorted feature columns.

use rayon::prelude::*;

use super::tree::{midpoint, Node, Tree};
use super::{BoostParams, ModelKind, TrainedModel, TrainingSet};
use crate::corpus::ClassWeights;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn softplus<T: Real>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// Logistic loss of raw score `f` for a sample with label `y` (0 or 1).
fn logistic_loss<T: Real>(f: T, positive: bool) -> T {
    if positive {
        softplus(-f)
    } else {
        softplus(f)
    }
}

const CLOSED: usize = usize::MAX;

#[derive(Clone, Copy)]
struct SplitChoice<T> {
    gain: T,
    feature: usize,
    threshold: T,
}

struct OpenNode<T> {
    node: usize,
    grad: T,
    hess: T,
}

/// Best split per open node along one feature column.
#[allow(clippy::too_many_arguments)]
fn scan_feature<T: Real>(
    data: &TrainingSet<'_, T>,
    order: &[u32],
    feature: usize,
    slot_of: &[usize],
    open: &[OpenNode<T>],
    grad: &[T],
    hess: &[T],
    params: &BoostParams,
) -> Vec<Option<SplitChoice<T>>> {
    let k = open.len();
    let mut gl = vec![T::zero(); k];
    let mut hl = vec![T::zero(); k];
    let mut last: Vec<Option<T>> = vec![None; k];
    let mut best: Vec<Option<SplitChoice<T>>> = vec![None; k];
    let half = T::lit(0.5);
    let gamma = T::lit(params.gamma);
    let mcw = T::lit(params.min_child_weight);
    for &i in order {
        let i = i as usize;
        let slot = slot_of[i];
        if slot == CLOSED {
            continue;
        }
        let v = data.x[[i, feature]];
        if let Some(prev) = last[slot] {
            if v > prev {
                let node = &open[slot];
                let (gr, hr) = (node.grad - gl[slot], node.hess - hl[slot]);
                if hl[slot] > T::zero() && hr > T::zero() && hl[slot] >= mcw && hr >= mcw {
                    let gain = half
                        * (gl[slot] * gl[slot] / hl[slot] + gr * gr / hr
                            - node.grad * node.grad / node.hess)
                        - gamma;
                    if gain > T::zero() && best[slot].is_none_or(|b| gain > b.gain) {
                        best[slot] = Some(SplitChoice {
                            gain,
                            feature,
                            threshold: midpoint(prev, v),
                        });
                    }
                }
            }
        }
        gl[slot] = gl[slot] + grad[i];
        hl[slot] = hl[slot] + hess[i];
        last[slot] = Some(v);
    }
    best
}

/// Grows one tree on the given gradients; returns the tree (leaf values are
/// raw Newton steps) and the leaf node index of every sample.
fn grow<T: Real>(
    data: &TrainingSet<'_, T>,
    sorted: &[Vec<u32>],
    grad: &[T],
    hess: &[T],
    params: &BoostParams,
) -> (Vec<Node<T>>, Vec<usize>) {
    let n = data.len();
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { value: T::zero() }];
    let mut node_of = vec![0usize; n];
    let mut totals: Vec<(T, T)> = vec![(grad.iter().copied().sum(), hess.iter().copied().sum())];
    let mut open_ids = vec![0usize];

    for _depth in 0..params.max_depth {
        if open_ids.is_empty() {
            break;
        }
        let open: Vec<OpenNode<T>> = open_ids
            .iter()
            .map(|&id| OpenNode {
                node: id,
                grad: totals[id].0,
                hess: totals[id].1,
            })
            .collect();
        let mut slot_by_node = vec![CLOSED; nodes.len()];
        for (s, o) in open.iter().enumerate() {
            slot_by_node[o.node] = s;
        }
        let slot_of: Vec<usize> = node_of.iter().map(|&id| slot_by_node[id]).collect();

        let per_feature: Vec<Vec<Option<SplitChoice<T>>>> = sorted
            .par_iter()
            .enumerate()
            .map(|(f, order)| scan_feature(data, order, f, &slot_of, &open, grad, hess, params))
            .collect();
        let mut best: Vec<Option<SplitChoice<T>>> = vec![None; open.len()];
        for feature_best in per_feature {
            for (b, cand) in best.iter_mut().zip(feature_best) {
                if let Some(c) = cand {
                    if b.is_none_or(|cur| c.gain > cur.gain) {
                        *b = Some(c);
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        let mut children_of: Vec<Option<(usize, usize, SplitChoice<T>)>> = vec![None; open.len()];
        for (s, choice) in best.into_iter().enumerate() {
            let Some(c) = choice else { continue };
            let parent = open[s].node;
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { value: T::zero() });
            nodes.push(Node::Leaf { value: T::zero() });
            totals.push((T::zero(), T::zero()));
            totals.push((T::zero(), T::zero()));
            nodes[parent] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left: l,
                right: r,
            };
            children_of[s] = Some((l, r, c));
            next_open.push(l);
            next_open.push(r);
        }
        for i in 0..n {
            let slot = slot_of[i];
            if slot == CLOSED {
                continue;
            }
            if let Some((l, r, c)) = children_of[slot] {
                let child = if data.x[[i, c.feature]] <= c.threshold {
                    l
                } else {
                    r
                };
                node_of[i] = child;
                totals[child].0 = totals[child].0 + grad[i];
                totals[child].1 = totals[child].1 + hess[i];
            }
        }
        open_ids = next_open;
    }

    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            let (g, h) = totals[id];
            *value = if h > T::zero() { -g / h } else { T::zero() };
        }
    }
    (nodes, node_of)
}

fn weighted_loss<T: Real>(scores: &[T], data: &TrainingSet<'_, T>, w: &[T]) -> T {
    let mut total = T::zero();
    let mut weight = T::zero();
    for i in 0..scores.len() {
        total = total + w[i] * logistic_loss(scores[i], data.y[i].is_positive());
        weight = weight + w[i];
    }
    total / weight
}

/// Trains a boosted ensemble. The weighted training log-loss after every
/// round is recorded in `training_loss` and is non-increasing.
pub fn train_gbt<T: Real>(
    data: &TrainingSet<'_, T>,
    weights: &ClassWeights<T>,
    params: &BoostParams,
) -> Result<TrainedModel<T>> {
    params.validate()?;
    data.validate_for_training()?;
    let n = data.len();
    let w: Vec<T> = data.y.iter().map(|&l| weights.get(l)).collect();
    let total_w: T = w.iter().copied().sum();
    let pos_w: T = w
        .iter()
        .zip(data.y)
        .filter(|(_, l)| l.is_positive())
        .map(|(&wi, _)| wi)
        .sum();
    let eps = T::lit(1e-6);
    let rate = (pos_w / total_w).max(eps).min(T::one() - eps);
    let base_score = (rate / (T::one() - rate)).ln();

    let sorted: Vec<Vec<u32>> = (0..data.x.ncols())
        .into_par_iter()
        .map(|f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                data.x[[a as usize, f]]
                    .partial_cmp(&data.x[[b as usize, f]])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let lr = T::lit(params.learning_rate);
    let mut scores = vec![base_score; n];
    let mut loss = weighted_loss(&scores, data, &w);
    let mut history = vec![loss.as_f64()];
    let mut trees = Vec::with_capacity(params.estimators);
    let mut grad = vec![T::zero(); n];
    let mut hess = vec![T::zero(); n];

    for round in 0..params.estimators {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            let y = if data.y[i].is_positive() {
                T::one()
            } else {
                T::zero()
            };
            grad[i] = w[i] * (p - y);
            hess[i] = w[i] * p * (T::one() - p);
        }
        let (mut nodes, leaf_of) = grow(data, &sorted, &grad, &hess, params);

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, &leaf) in leaf_of.iter().enumerate() {
            members[leaf].push(i);
        }
        for (id, node) in nodes.iter_mut().enumerate() {
            let Node::Leaf { value } = node else { continue };
            let leaf_loss = |step: T| -> T {
                members[id]
                    .iter()
                    .map(|&i| w[i] * logistic_loss(scores[i] + step, data.y[i].is_positive()))
                    .sum()
            };
            let before = leaf_loss(T::zero());
            let mut step = lr * *value;
            let mut halvings = 0;
            // a full Newton step can overshoot where curvature grows
            while step != T::zero() && leaf_loss(step) > before {
                halvings += 1;
                step = if halvings > 40 {
                    T::zero()
                } else {
                    step / T::lit(2.0)
                };
            }
            *value = step;
        }
        let tree = Tree { nodes };
        for (i, &leaf) in leaf_of.iter().enumerate() {
            if let Node::Leaf { value } = tree.nodes[leaf] {
                scores[i] = scores[i] + value;
            }
        }
        let next = weighted_loss(&scores, data, &w);
        if next > loss + T::lit(1e-12) * loss.abs().max(T::one()) {
            return Err(Error::Invariant(format!(
                "training loss rose from {loss} to {next} in round {round}"
            )));
        }
        loss = next;
        history.push(loss.as_f64());
        trees.push(tree);
    }

    Ok(TrainedModel {
        kind: ModelKind::Boost(params.clone()),
        trees,
        base_score,
        fingerprint: data.fingerprint.to_owned(),
        width: data.x.ncols(),
        training_loss: history,
    })
}
