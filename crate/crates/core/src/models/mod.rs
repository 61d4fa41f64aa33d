//! Tree-ensemble binary classifiers: a class-weighted random forest, Newton
//! boosting on logistic loss, and soft voting over trained members.

mod boost;
mod ensemble;
mod forest;
mod params;
mod tree;

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::scalar::Real;

pub use boost::train_gbt;
pub use ensemble::{soft_vote, AnyModel, VotingEnsemble};
pub use forest::train_random_forest;
pub use params::{BoostParams, ForestParams, MaxFeatures};
pub use tree::{Node, Tree};

/// Rows of features with labels and the fingerprint of their schema.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a, T> {
    pub x: ArrayView2<'a, T>,
    pub y: &'a [Label],
    pub fingerprint: &'a str,
}

impl<'a, T: Real> TrainingSet<'a, T> {
    pub fn new(x: ArrayView2<'a, T>, y: &'a [Label], fingerprint: &'a str) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        Ok(TrainingSet { x, y, fingerprint })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub(crate) fn validate_for_training(&self) -> Result<()> {
        if let Some(v) = self.x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training feature value {v}")));
        }
        let positives = self.y.iter().filter(|l| l.is_positive()).count();
        if positives == 0 || positives == self.y.len() {
            return Err(Error::invalid("training data must contain both classes"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Forest(ForestParams),
    Boost(BoostParams),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Forest(_) => "forest",
            ModelKind::Boost(_) => "boost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub kind: ModelKind,
    pub trees: Vec<Tree<T>>,
    /// Initial raw score for boosting; unused by forests.
    pub base_score: T,
    pub fingerprint: String,
    pub width: usize,
    /// Weighted training log-loss before the first round and after each
    /// round (boosting only).
    pub training_loss: Vec<f64>,
}

impl<T: Real> TrainedModel<T> {
    fn positive_probability(&self, row: ndarray::ArrayView1<'_, T>) -> T {
        match self.kind {
            ModelKind::Forest(_) => {
                let sum: T = self.trees.iter().map(|t| t.predict_row(row)).sum();
                sum / T::from_count(self.trees.len().max(1))
            }
            ModelKind::Boost(_) => {
                let raw = self
                    .trees
                    .iter()
                    .fold(self.base_score, |acc, t| acc + t.predict_row(row));
                boost::sigmoid(raw)
            }
        }
    }

    /// Class probabilities, columns `[not_troll, troll]`, checking only the
    /// column count.
    pub fn predict_proba_unchecked(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.ncols() != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                found: x.ncols(),
            });
        }
        let mut out = Array2::zeros((x.nrows(), 2));
        for (row, mut o) in x.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
            let p = self.positive_probability(row).max(T::zero()).min(T::one());
            o[0] = T::one() - p;
            o[1] = p;
        }
        Ok(out)
    }

    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<()> {
        if self.fingerprint != fingerprint {
            return Err(Error::SchemaMismatch {
                expected: self.fingerprint.clone(),
                found: fingerprint.to_owned(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>, fingerprint: &str) -> Result<Array2<T>> {
        self.check_fingerprint(fingerprint)?;
        self.predict_proba_unchecked(x)
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix<T>) -> Result<Array2<T>> {
        self.predict_proba(m.values.view(), m.schema.fingerprint())
    }

    const HEADER: &'static str = "stylometry-model v1";

    /// Versioned line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::HEADER);
        let _ = writeln!(out, "kind {}", self.kind.name());
        let pairs = match &self.kind {
            ModelKind::Forest(p) => p.to_pairs(),
            ModelKind::Boost(p) => p.to_pairs(),
        };
        for (k, v) in pairs {
            let _ = writeln!(out, "param {k} {v}");
        }
        let _ = writeln!(out, "schema {}", self.fingerprint);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "base_score {:e}", self.base_score.as_f64());
        let losses: Vec<String> = self
            .training_loss
            .iter()
            .map(|l| format!("{l:e}"))
            .collect();
        let _ = writeln!(out, "loss {}", losses.join(" "));
        let _ = writeln!(out, "trees {}", self.trees.len());
        for t in &self.trees {
            let _ = writeln!(out, "tree {}", t.nodes.len());
            for n in &t.nodes {
                match n {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ =
                            writeln!(out, "S {feature} {:e} {left} {right}", threshold.as_f64());
                    }
                    Node::Leaf { value } => {
                        let _ = writeln!(out, "L {:e}", value.as_f64());
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = LineParser::new(text);
        p.expect_exact(Self::HEADER)?;
        let kind_name = p.field("kind")?;
        let mut pairs: Vec<(String, String)> = Vec::new();
        while let Some(rest) = p.peek().and_then(|l| l.strip_prefix("param ")) {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| p.error("expected `param key value`"))?;
            pairs.push((k.to_owned(), v.to_owned()));
            p.advance();
        }
        let borrowed = pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()));
        let kind = match kind_name.as_str() {
            "forest" => ModelKind::Forest(ForestParams::default().apply_pairs(borrowed)?),
            "boost" => ModelKind::Boost(BoostParams::default().apply_pairs(borrowed)?),
            other => return Err(p.error(&format!("unknown model kind `{other}`"))),
        };
        let fingerprint = p.field("schema")?;
        let width: usize = p.parsed("width")?;
        let base_score = T::lit(p.parsed::<f64>("base_score")?);
        let loss_line = p.field("loss")?;
        let training_loss = loss_line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| p.error("bad loss value")))
            .collect::<Result<Vec<_>>>()?;
        let n_trees: usize = p.parsed("trees")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes: usize = p.parsed("tree")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let line = p.next_line()?;
                let f: Vec<&str> = line.split(' ').collect();
                let node = match f.as_slice() {
                    ["S", feat, thr, l, r] => Node::Split {
                        feature: feat.parse().map_err(|_| p.error("bad feature"))?,
                        threshold: T::lit(thr.parse().map_err(|_| p.error("bad threshold"))?),
                        left: l.parse().map_err(|_| p.error("bad child"))?,
                        right: r.parse().map_err(|_| p.error("bad child"))?,
                    },
                    ["L", v] => Node::Leaf {
                        value: T::lit(v.parse().map_err(|_| p.error("bad leaf"))?),
                    },
                    _ => return Err(p.error("expected a node line")),
                };
                nodes.push(node);
            }
            let tree = Tree { nodes };
            validate_tree(&tree, width).map_err(|m| p.error(&m))?;
            trees.push(tree);
        }
        Ok(TrainedModel {
            kind,
            trees,
            base_score,
            fingerprint,
            width,
            training_loss,
        })
    }
}

fn validate_tree<T>(tree: &Tree<T>, width: usize) -> std::result::Result<(), String> {
    let n = tree.nodes.len();
    if n == 0 {
        return Err("empty tree".into());
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = node
        {
            if *feature >= width {
                return Err(format!("feature {feature} outside width {width}"));
            }
            if *left <= i || *right <= i || *left >= n || *right >= n {
                return Err(format!("node {i} has invalid children"));
            }
        }
    }
    Ok(())
}

pub(crate) struct LineParser<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> LineParser<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        LineParser {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    pub(crate) fn error(&self, message: &str) -> Error {
        Error::Parse {
            path: "model".into(),
            line: self.pos + 1,
            message: message.to_owned(),
        }
    }

    pub(crate) fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    pub(crate) fn advance(&mut self) {
        self.pos += 1;
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        let line = self
            .peek()
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(line)
    }

    pub(crate) fn expect_exact(&mut self, expected: &str) -> Result<()> {
        if self.peek() != Some(expected) {
            return Err(self.error(&format!("expected `{expected}`")));
        }
        self.pos += 1;
        Ok(())
    }

    pub(crate) fn field(&mut self, key: &str) -> Result<String> {
        let line = self
            .peek()
            .ok_or_else(|| self.error("unexpected end of input"))?;
        let value = if line == key {
            ""
        } else {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| self.error(&format!("expected `{key}`")))?
        };
        self.pos += 1;
        Ok(value.to_owned())
    }

    pub(crate) fn parsed<N: std::str::FromStr>(&mut self, key: &str) -> Result<N> {
        let v = self.field(key)?;
        v.parse().map_err(|_| {
            self.pos -= 1;
            self.error(&format!("bad value for `{key}`"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn forest_of_leaves(p: f64) -> TrainedModel<f64> {
        TrainedModel {
            kind: ModelKind::Forest(ForestParams::default()),
            trees: vec![Tree::leaf(p); 3],
            base_score: 0.0,
            fingerprint: "fp".into(),
            width: 2,
            training_loss: vec![],
        }
    }

    #[test]
    fn identical_leaves_give_constant_rows() {
        let m = forest_of_leaves(0.7);
        let out = m
            .predict_proba(array![[1.0, 2.0], [3.0, -4.0]].view(), "fp")
            .unwrap();
        for row in out.rows() {
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn boost_without_trees_is_logistic_of_base() {
        let m = TrainedModel {
            kind: ModelKind::Boost(BoostParams::default()),
            trees: vec![],
            base_score: 0.4f64,
            fingerprint: "fp".into(),
            width: 1,
            training_loss: vec![],
        };
        let out = m.predict_proba(array![[0.0], [9.0]].view(), "fp").unwrap();
        let expected = 1.0 / (1.0 + (-0.4f64).exp());
        assert!(out.column(1).iter().all(|&p| (p - expected).abs() < 1e-12));
    }

    #[test]
    fn fingerprint_and_width_checks() {
        let m = forest_of_leaves(0.5);
        assert!(matches!(
            m.predict_proba(array![[1.0, 2.0]].view(), "other"),
            Err(Error::SchemaMismatch { .. })
        ));
        assert!(m.predict_proba(array![[1.0]].view(), "fp").is_err());
    }

    #[test]
    fn text_rejects_out_of_range_features() {
        let mut m = forest_of_leaves(0.5);
        m.trees[0] = Tree {
            nodes: vec![
                Node::Split {
                    feature: 5,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: 0.1 },
                Node::Leaf { value: 0.9 },
            ],
        };
        assert!(TrainedModel::<f64>::from_text(&m.to_text()).is_err());
    }
}
