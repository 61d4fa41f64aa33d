use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};

use super::{LineParser, TrainedModel};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::scalar::Real;

/// Weighted average of member probability matrices. Weights are normalised
/// to sum to one; all shapes must agree.
pub fn soft_vote<T: Real>(probas: &[Array2<T>], weights: &[T]) -> Result<Array2<T>> {
    if probas.is_empty() {
        return Err(Error::invalid("soft vote needs at least one member"));
    }
    if probas.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: probas.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::invalid(
            "voting weights must be finite and non-negative",
        ));
    }
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::invalid("voting weights must not all be zero"));
    }
    let shape = probas[0].dim();
    let mut out = Array2::zeros(shape);
    for (p, &w) in probas.iter().zip(weights) {
        if p.dim() != shape {
            return Err(Error::DimensionMismatch {
                expected: shape.0,
                found: p.nrows(),
            });
        }
        out.scaled_add(w / total, p);
    }
    Ok(out)
}

/// Soft-voting ensemble of models trained on the same feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct VotingEnsemble<T> {
    pub members: Vec<TrainedModel<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> VotingEnsemble<T> {
    pub fn new(members: Vec<TrainedModel<T>>, weights: Vec<T>) -> Result<Self> {
        if members.is_empty() || members.len() != weights.len() {
            return Err(Error::invalid("ensemble needs one weight per member"));
        }
        let fp = &members[0].fingerprint;
        if let Some(m) = members.iter().find(|m| &m.fingerprint != fp) {
            return Err(Error::SchemaMismatch {
                expected: fp.clone(),
                found: m.fingerprint.clone(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero())
            || weights.iter().copied().sum::<T>() <= T::zero()
        {
            return Err(Error::invalid(
                "voting weights must be non-negative and not all zero",
            ));
        }
        Ok(VotingEnsemble { members, weights })
    }

    pub fn fingerprint(&self) -> &str {
        &self.members[0].fingerprint
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>, fingerprint: &str) -> Result<Array2<T>> {
        let probas = self
            .members
            .iter()
            .map(|m| m.predict_proba(x, fingerprint))
            .collect::<Result<Vec<_>>>()?;
        soft_vote(&probas, &self.weights)
    }

    const HEADER: &'static str = "stylometry-ensemble v1";

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::HEADER);
        let _ = writeln!(out, "members {}", self.members.len());
        for (m, w) in self.members.iter().zip(&self.weights) {
            let body = m.to_text();
            let _ = writeln!(out, "member {:e} {}", w.as_f64(), body.lines().count());
            out.push_str(&body);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = LineParser::new(text);
        p.expect_exact(Self::HEADER)?;
        let n: usize = p.parsed("members")?;
        let mut members = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let head = p.field("member")?;
            let (w, count) = head
                .split_once(' ')
                .and_then(|(w, c)| Some((w.parse::<f64>().ok()?, c.parse::<usize>().ok()?)))
                .ok_or_else(|| p.error("expected `member weight lines`"))?;
            let mut body = String::new();
            for _ in 0..count {
                body.push_str(p.next_line()?);
                body.push('\n');
            }
            members.push(TrainedModel::from_text(&body)?);
            weights.push(T::lit(w));
        }
        VotingEnsemble::new(members, weights)
    }
}

/// Either a single trained model or a voting ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T> {
    Single(TrainedModel<T>),
    Ensemble(VotingEnsemble<T>),
}

impl<T: Real> AnyModel<T> {
    pub fn fingerprint(&self) -> &str {
        match self {
            AnyModel::Single(m) => &m.fingerprint,
            AnyModel::Ensemble(e) => e.fingerprint(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AnyModel::Single(m) => m.kind.name().to_owned(),
            AnyModel::Ensemble(_) => "ensemble".to_owned(),
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>, fingerprint: &str) -> Result<Array2<T>> {
        match self {
            AnyModel::Single(m) => m.predict_proba(x, fingerprint),
            AnyModel::Ensemble(e) => e.predict_proba(x, fingerprint),
        }
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix<T>) -> Result<Array2<T>> {
        self.predict_proba(m.values.view(), m.schema.fingerprint())
    }

    /// Parses a saved model and checks it was trained on `fingerprint`.
    pub fn load(text: &str, fingerprint: &str) -> Result<Self> {
        let model = Self::from_text(text)?;
        if model.fingerprint() != fingerprint {
            return Err(Error::SchemaMismatch {
                expected: fingerprint.to_owned(),
                found: model.fingerprint().to_owned(),
            });
        }
        Ok(model)
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyModel::Single(m) => m.to_text(),
            AnyModel::Ensemble(e) => e.to_text(),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        if text.starts_with(VotingEnsemble::<T>::HEADER) {
            VotingEnsemble::from_text(text).map(AnyModel::Ensemble)
        } else {
            TrainedModel::from_text(text).map(AnyModel::Single)
        }
    }
}
