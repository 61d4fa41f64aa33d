//! Random-search hyper-parameter tuning scored by validation macro-F1.

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use ndarray::ArrayView2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{ClassWeights, Label};
use crate::error::{Error, Result};
use crate::metrics::macro_f1;
use crate::models::{
    train_gbt, train_random_forest, BoostParams, ForestParams, TrainedModel, TrainingSet,
};
use crate::scalar::Real;

/// Distribution of one tuned parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    /// Integer uniform over the closed range.
    IntUniform {
        lo: i64,
        hi: i64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `exp(U(ln lo, ln hi))`.
    LogUniform {
        lo: f64,
        hi: f64,
    },
    Categorical(Vec<String>),
}

impl ParamSpec {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            ParamSpec::IntUniform { lo, hi } => lo <= hi,
            ParamSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            ParamSpec::LogUniform { lo, hi } => *lo > 0.0 && hi.is_finite() && lo <= hi,
            ParamSpec::Categorical(c) => !c.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid range for `{name}`: {self}"
            )))
        }
    }

    fn extremes(&self) -> Vec<String> {
        match self {
            ParamSpec::IntUniform { lo, hi } => vec![lo.to_string(), hi.to_string()],
            ParamSpec::Uniform { lo, hi } | ParamSpec::LogUniform { lo, hi } => {
                vec![format!("{lo:e}"), format!("{hi:e}")]
            }
            ParamSpec::Categorical(c) => c.clone(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> String {
        match self {
            ParamSpec::IntUniform { lo, hi } => rng.random_range(*lo..=*hi).to_string(),
            ParamSpec::Uniform { lo, hi } => format!("{:e}", uniform(rng, *lo, *hi)),
            ParamSpec::LogUniform { lo, hi } => {
                let v = uniform(rng, lo.ln(), hi.ln()).exp();
                format!("{:e}", v.clamp(*lo, *hi))
            }
            ParamSpec::Categorical(c) => c[rng.random_range(0..c.len())].clone(),
        }
    }

    /// Parses `int LO HI`, `uniform LO HI`, `loguniform LO HI` or
    /// `choice A B ...`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let bad = || Error::invalid(format!("bad parameter spec `{s}`"));
        let pair = |rest: &[&str]| -> Result<(f64, f64)> {
            match rest {
                [a, b] => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
                _ => Err(bad()),
            }
        };
        match kind {
            "int" => match rest.as_slice() {
                [a, b] => Ok(ParamSpec::IntUniform {
                    lo: a.parse().map_err(|_| bad())?,
                    hi: b.parse().map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            },
            "uniform" => pair(&rest).map(|(lo, hi)| ParamSpec::Uniform { lo, hi }),
            "loguniform" => pair(&rest).map(|(lo, hi)| ParamSpec::LogUniform { lo, hi }),
            "choice" if !rest.is_empty() => Ok(ParamSpec::Categorical(
                rest.iter().map(|s| s.to_string()).collect(),
            )),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSpec::IntUniform { lo, hi } => write!(f, "int {lo} {hi}"),
            ParamSpec::Uniform { lo, hi } => write!(f, "uniform {lo:e} {hi:e}"),
            ParamSpec::LogUniform { lo, hi } => write!(f, "loguniform {lo:e} {hi:e}"),
            ParamSpec::Categorical(c) => write!(f, "choice {}", c.join(" ")),
        }
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Forest,
    Boost,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Forest => "forest",
            ModelFamily::Boost => "boost",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forest" | "random_forest" => Some(ModelFamily::Forest),
            "boost" | "gbt" | "xgboost" => Some(ModelFamily::Boost),
            _ => None,
        }
    }
}

/// Ordered parameter distributions for one model family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub family: ModelFamily,
    pub specs: Vec<(String, ParamSpec)>,
}

/// Sampled parameter values as `(name, value)` strings.
pub type ParamSet = Vec<(String, String)>;

impl ParamSpace {
    pub fn new(family: ModelFamily, specs: Vec<(String, ParamSpec)>) -> Result<Self> {
        for (name, spec) in &specs {
            spec.validate(name)?;
        }
        let space = ParamSpace { family, specs };
        // Ranges are checked against the model's own validation at both ends.
        let base = space.sample(&mut ChaCha8Rng::seed_from_u64(0));
        for (i, (_, spec)) in space.specs.iter().enumerate() {
            for value in spec.extremes() {
                let mut set = base.clone();
                set[i].1 = value;
                space.instantiate(0, &set)?;
            }
        }
        Ok(space)
    }

    /// Default search ranges for the random forest.
    pub fn forest() -> Self {
        ParamSpace {
            family: ModelFamily::Forest,
            specs: vec![
                (
                    "estimators".into(),
                    ParamSpec::IntUniform { lo: 20, hi: 1000 },
                ),
                (
                    "max_features".into(),
                    ParamSpec::Categorical(vec!["log".into(), "sqrt".into()]),
                ),
                (
                    "max_depth".into(),
                    ParamSpec::IntUniform { lo: 10, hi: 110 },
                ),
                (
                    "min_samples_leaf".into(),
                    ParamSpec::IntUniform { lo: 1, hi: 5 },
                ),
                (
                    "min_samples_split".into(),
                    ParamSpec::IntUniform { lo: 2, hi: 10 },
                ),
            ],
        }
    }

    /// Default search ranges for boosting.
    pub fn boost() -> Self {
        ParamSpace {
            family: ModelFamily::Boost,
            specs: vec![
                (
                    "estimators".into(),
                    ParamSpec::IntUniform { lo: 20, hi: 1000 },
                ),
                ("max_depth".into(), ParamSpec::IntUniform { lo: 1, hi: 20 }),
                (
                    "learning_rate".into(),
                    ParamSpec::LogUniform { lo: 1e-4, hi: 1e-1 },
                ),
                ("gamma".into(), ParamSpec::LogUniform { lo: 1e-4, hi: 1.0 }),
            ],
        }
    }

    pub fn default_for(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Forest => Self::forest(),
            ModelFamily::Boost => Self::boost(),
        }
    }

    /// Replaces or adds specs from `(name, spec text)` pairs.
    pub fn with_overrides<'a>(
        mut self,
        entries: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        for (name, text) in entries {
            let spec = ParamSpec::parse(text)?;
            match self.specs.iter_mut().find(|(n, _)| n == name) {
                Some(slot) => slot.1 = spec,
                None => self.specs.push((name.to_owned(), spec)),
            }
        }
        ParamSpace::new(self.family, self.specs)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ParamSet {
        self.specs
            .iter()
            .map(|(name, spec)| (name.clone(), spec.sample(rng)))
            .collect()
    }

    pub fn instantiate(&self, seed: u64, set: &ParamSet) -> Result<TrialParams> {
        let pairs = set.iter().map(|(k, v)| (k.as_str(), v.as_str()));
        Ok(match self.family {
            ModelFamily::Forest => TrialParams::Forest(
                ForestParams {
                    seed,
                    ..ForestParams::default()
                }
                .apply_pairs(pairs)?,
            ),
            ModelFamily::Boost => TrialParams::Boost(
                BoostParams {
                    seed,
                    ..BoostParams::default()
                }
                .apply_pairs(pairs)?,
            ),
        })
    }
}

/// Draws `n` parameter sets sequentially from one seeded stream.
pub fn sample_params(space: &ParamSpace, n: usize, seed: u64) -> Vec<ParamSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| space.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialParams {
    Forest(ForestParams),
    Boost(BoostParams),
}

impl TrialParams {
    pub fn train<T: Real>(
        &self,
        data: &TrainingSet<'_, T>,
        weights: &ClassWeights<T>,
    ) -> Result<TrainedModel<T>> {
        match self {
            TrialParams::Forest(p) => train_random_forest(data, weights, p),
            TrialParams::Boost(p) => train_gbt(data, weights, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub index: usize,
    pub params: ParamSet,
    pub f1: f64,
    pub duration: Duration,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: usize,
    pub trials: Vec<TrialResult>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialResult {
        &self.trials[self.best]
    }

    /// Tab-separated trial log: index, params, F1, seconds, status.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("index\tparams\tf1\tseconds\tstatus\n");
        for t in &self.trials {
            let params: Vec<String> = t.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let status = match &t.error {
                None => "ok".to_owned(),
                Some(e) => format!("failed: {}", e.replace(['\t', '\n'], " ")),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.3}\t{}",
                t.index,
                params.join(","),
                t.f1,
                t.duration.as_secs_f64(),
                status
            );
        }
        out
    }
}

/// Validation rows scored by each trial.
#[derive(Debug, Clone, Copy)]
pub struct ValidationSet<'a, T> {
    pub x: ArrayView2<'a, T>,
    pub y: &'a [Label],
}

/// Trains one model per sampled parameter set and keeps the one with the
/// highest validation macro-F1 (earliest on ties). Failing trials score 0.
pub fn random_search<T: Real>(
    space: &ParamSpace,
    trials: usize,
    train: &TrainingSet<'_, T>,
    weights: &ClassWeights<T>,
    validation: ValidationSet<'_, T>,
    seed: u64,
) -> Result<SearchOutcome> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if validation.x.nrows() != validation.y.len() {
        return Err(Error::DimensionMismatch {
            expected: validation.x.nrows(),
            found: validation.y.len(),
        });
    }
    let sets = sample_params(space, trials, seed);
    let results: Vec<TrialResult> = sets
        .into_par_iter()
        .enumerate()
        .map(|(index, params)| {
            let start = Instant::now();
            let scored = space
                .instantiate(seed, &params)
                .and_then(|p| p.train(train, weights))
                .and_then(|m| score(&m, validation));
            let duration = start.elapsed();
            match scored {
                Ok(f1) => TrialResult {
                    index,
                    params,
                    f1,
                    duration,
                    error: None,
                },
                Err(e) => {
                    log::warn!("trial {index} failed: {e}");
                    TrialResult {
                        index,
                        params,
                        f1: 0.0,
                        duration,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let best = results.iter().fold(0, |best, t| {
        if t.f1 > results[best].f1 {
            t.index
        } else {
            best
        }
    });
    Ok(SearchOutcome {
        best,
        trials: results,
    })
}

fn score<T: Real>(model: &TrainedModel<T>, validation: ValidationSet<'_, T>) -> Result<f64> {
    let proba = model.predict_proba_unchecked(validation.x)?;
    let predicted: Vec<Label> = proba
        .column(1)
        .iter()
        .map(|&p| {
            if p > T::lit(0.5) {
                Label::Troll
            } else {
                Label::NotTroll
            }
        })
        .collect();
    macro_f1(validation.y, &predicted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_estimators_stay_in_range() {
        for set in sample_params(&ParamSpace::forest(), 2000, 7) {
            let v: i64 = set[0].1.parse().unwrap();
            assert!((20..=1000).contains(&v));
        }
    }

    #[test]
    fn degenerate_range_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let int = ParamSpec::IntUniform { lo: 5, hi: 5 };
        let log = ParamSpec::LogUniform { lo: 0.3, hi: 0.3 };
        for _ in 0..100 {
            assert_eq!(int.sample(&mut rng), "5");
            assert_eq!(log.sample(&mut rng).parse::<f64>().unwrap(), 0.3);
        }
    }

    #[test]
    fn spec_text_round_trip() {
        for text in [
            "int 1 20",
            "loguniform 1e-4 1e-1",
            "uniform -1e0 2.5e0",
            "choice log sqrt",
        ] {
            let spec = ParamSpec::parse(text).unwrap();
            assert_eq!(ParamSpec::parse(&spec.to_string()).unwrap(), spec);
        }
        assert!(ParamSpec::parse("loguniform 0 1")
            .and_then(|s| s.validate("x"))
            .is_err());
        assert!(ParamSpec::parse("int 1").is_err());
    }

    #[test]
    fn overrides_are_validated() {
        let space = ParamSpace::boost()
            .with_overrides([("estimators", "int 5 10")])
            .unwrap();
        assert_eq!(space.specs[0].1, ParamSpec::IntUniform { lo: 5, hi: 10 });
        assert!(ParamSpace::boost()
            .with_overrides([("bogus", "int 1 2")])
            .is_err());
        assert!(ParamSpace::boost()
            .with_overrides([("learning_rate", "uniform -1 1")])
            .is_err());
    }
}
