//! Featurize, split, transform, train and evaluate in one place, so the
//! command-line tool and tests run the same sequence.

use crate::assets::Lexicon;
use crate::burrows::BurrowsModel;
use crate::corpus::{assign_partitions, class_weights, AuthorCorpus, Label, Partition, SplitSpec};
use crate::error::{Error, Result};
use crate::features::Featurizer;
use crate::matrix::FeatureMatrix;
use crate::metrics::{confusion, macro_prf, ConfusionMatrix, MacroScores};
use crate::models::{AnyModel, TrainingSet, VotingEnsemble};
use crate::scalar::{FromCount, Real};
use crate::transform::FeatureTransform;
use crate::tuning::{random_search, ParamSpace, SearchOutcome, TrialParams, ValidationSet};

pub const DEFAULT_BURROWS_WORDS: usize = 1000;

/// Raw features for every author plus the train-only fitted artifacts.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    pub partitions: Vec<Partition>,
    pub burrows: BurrowsModel<T>,
    pub raw: FeatureMatrix<T>,
    pub transform: FeatureTransform<T>,
}

/// Splits authors, fits the Burrows model and the power transform on the
/// training authors only, and featurizes everyone.
pub fn prepare<T: Real>(
    corpora: &[AuthorCorpus],
    split: &SplitSpec,
    burrows_words: usize,
    lexicon: &Lexicon,
) -> Result<Prepared<T>> {
    let partitions = assign_partitions(corpora, split)?;
    let train: Vec<AuthorCorpus> = corpora
        .iter()
        .zip(&partitions)
        .filter(|(_, p)| **p == Partition::Train)
        .map(|(c, _)| c.clone())
        .collect();
    let burrows = BurrowsModel::fit(&train, burrows_words)?;
    let raw = Featurizer::new(lexicon, &burrows)?.matrix(corpora)?;
    let train_rows = rows_in(&partitions, Partition::Train);
    let transform = FeatureTransform::fit(&raw.select(&train_rows).values)?;
    Ok(Prepared {
        partitions,
        burrows,
        raw,
        transform,
    })
}

pub fn rows_in(partitions: &[Partition], part: Partition) -> Vec<usize> {
    partitions
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == part)
        .map(|(i, _)| i)
        .collect()
}

/// Applies a fitted transform, keeping ids, labels and schema.
pub fn transform_matrix<T: Real>(
    transform: &FeatureTransform<T>,
    m: &FeatureMatrix<T>,
) -> Result<FeatureMatrix<T>> {
    Ok(FeatureMatrix {
        schema: m.schema.clone(),
        author_ids: m.author_ids.clone(),
        labels: m.labels.clone(),
        values: transform.apply(&m.values)?,
    })
}

/// Transformed, labeled rows of one partition.
#[derive(Debug, Clone)]
pub struct LabeledPart<T> {
    pub matrix: FeatureMatrix<T>,
    pub labels: Vec<Label>,
}

impl<T: Real> LabeledPart<T> {
    pub fn new(matrix: FeatureMatrix<T>) -> Result<Self> {
        let labels = matrix.require_labels()?;
        Ok(LabeledPart { matrix, labels })
    }

    pub fn training_set(&self) -> Result<TrainingSet<'_, T>> {
        TrainingSet::new(
            self.matrix.values.view(),
            &self.labels,
            self.matrix.schema.fingerprint(),
        )
    }

    pub fn validation_set(&self) -> ValidationSet<'_, T> {
        ValidationSet {
            x: self.matrix.values.view(),
            y: &self.labels,
        }
    }
}

pub fn part<T: Real>(
    transformed: &FeatureMatrix<T>,
    partitions: &[Partition],
    which: Partition,
) -> Result<LabeledPart<T>> {
    let rows = rows_in(partitions, which);
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "the {} partition is empty",
            which.name()
        )));
    }
    LabeledPart::new(transformed.select(&rows))
}

pub fn train<T: Real + FromCount>(
    params: &TrialParams,
    train: &LabeledPart<T>,
) -> Result<AnyModel<T>> {
    let weights = class_weights::<T>(&train.labels)?;
    params
        .train(&train.training_set()?, &weights)
        .map(AnyModel::Single)
}

/// Random search, then the winning configuration is retrained.
pub fn tune<T: Real + FromCount>(
    space: &ParamSpace,
    trials: usize,
    seed: u64,
    train: &LabeledPart<T>,
    validation: &LabeledPart<T>,
) -> Result<(SearchOutcome, TrialParams, AnyModel<T>)> {
    let weights = class_weights::<T>(&train.labels)?;
    let set = train.training_set()?;
    let outcome = random_search(
        space,
        trials,
        &set,
        &weights,
        validation.validation_set(),
        seed,
    )?;
    let best = space.instantiate(seed, &outcome.best_trial().params)?;
    let model = best.train(&set, &weights).map(AnyModel::Single)?;
    Ok((outcome, best, model))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub scores: MacroScores<f64>,
}

pub fn predict_labels<T: Real>(
    model: &AnyModel<T>,
    m: &FeatureMatrix<T>,
) -> Result<(Vec<f64>, Vec<Label>)> {
    let proba = model.predict_matrix(m)?;
    let p: Vec<f64> = proba.column(1).iter().map(|v| v.as_f64()).collect();
    let labels = p
        .iter()
        .map(|&v| {
            if v > 0.5 {
                Label::Troll
            } else {
                Label::NotTroll
            }
        })
        .collect();
    Ok((p, labels))
}

pub fn evaluate<T: Real>(model: &AnyModel<T>, part: &LabeledPart<T>) -> Result<Evaluation> {
    let (_, predicted) = predict_labels(model, &part.matrix)?;
    let confusion = confusion(&part.labels, &predicted)?;
    Ok(Evaluation {
        scores: macro_prf(&confusion),
        confusion,
    })
}

/// Trains each configuration and soft-votes them, weighting every member by
/// its validation macro-F1.
pub fn train_ensemble<T: Real + FromCount>(
    members: &[TrialParams],
    train: &LabeledPart<T>,
    validation: &LabeledPart<T>,
) -> Result<(VotingEnsemble<T>, Vec<f64>)> {
    let weights = class_weights::<T>(&train.labels)?;
    let set = train.training_set()?;
    let mut models = Vec::with_capacity(members.len());
    let mut scores = Vec::with_capacity(members.len());
    for params in members {
        let model = params.train(&set, &weights)?;
        let f1 = evaluate(&AnyModel::Single(model.clone()), validation)?
            .scores
            .macro_f1;
        models.push(model);
        scores.push(f1);
    }
    let ensemble = VotingEnsemble::new(models, scores.iter().map(|&s| T::lit(s)).collect())?;
    Ok((ensemble, scores))
}
