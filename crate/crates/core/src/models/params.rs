use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Log2,
    Sqrt,
}

impl MaxFeatures {
    /// Candidate features per split for `width` columns, at least one.
    pub fn count(self, width: usize) -> usize {
        let w = width as f64;
        let k = match self {
            MaxFeatures::Log2 => w.log2(),
            MaxFeatures::Sqrt => w.sqrt(),
        };
        (k.floor() as usize).clamp(1, width.max(1))
    }

    pub fn name(self) -> &'static str {
        match self {
            MaxFeatures::Log2 => "log",
            MaxFeatures::Sqrt => "sqrt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log" | "log2" => Some(MaxFeatures::Log2),
            "sqrt" => Some(MaxFeatures::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub estimators: usize,
    pub max_features: MaxFeatures,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Draw a bootstrap sample per tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    /// The best random-forest configuration reported on the troll data.
    fn default() -> Self {
        ForestParams {
            estimators: 346,
            max_features: MaxFeatures::Sqrt,
            max_depth: 10,
            min_samples_leaf: 4,
            min_samples_split: 4,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostParams {
    pub estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum loss reduction required to split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    /// The best boosting configuration reported on the troll data.
    fn default() -> Self {
        BoostParams {
            estimators: 705,
            max_depth: 4,
            learning_rate: 9.0e-2,
            gamma: 3.4e-1,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.estimators < 1 {
            return Err(Error::invalid("forest needs at least one estimator"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be at least 2"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        [
            ("estimators", self.estimators.to_string()),
            ("max_features", self.max_features.name().to_owned()),
            ("max_depth", self.max_depth.to_string()),
            ("min_samples_leaf", self.min_samples_leaf.to_string()),
            ("min_samples_split", self.min_samples_split.to_string()),
            ("bootstrap", self.bootstrap.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
    }

    /// Overrides fields from `key=value` pairs; unknown keys are errors.
    pub fn apply_pairs<'a>(
        mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        for (k, v) in pairs {
            match k {
                "estimators" => self.estimators = parse_num(k, v)?,
                "max_features" => {
                    self.max_features = MaxFeatures::parse(v)
                        .ok_or_else(|| Error::invalid(format!("max_features `{v}`")))?
                }
                "max_depth" => self.max_depth = parse_num(k, v)?,
                "min_samples_leaf" | "min_sample_leaf" => self.min_samples_leaf = parse_num(k, v)?,
                "min_samples_split" | "min_sample_split" => {
                    self.min_samples_split = parse_num(k, v)?
                }
                "bootstrap" => self.bootstrap = parse_num(k, v)?,
                "seed" => self.seed = parse_num(k, v)?,
                _ => return Err(Error::invalid(format!("unknown forest parameter `{k}`"))),
            }
        }
        self.validate()?;
        Ok(self)
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if self.min_child_weight.is_nan() || self.min_child_weight < 0.0 {
            return Err(Error::invalid("min_child_weight must be non-negative"));
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        [
            ("estimators", self.estimators.to_string()),
            ("max_depth", self.max_depth.to_string()),
            ("learning_rate", format!("{:e}", self.learning_rate)),
            ("gamma", format!("{:e}", self.gamma)),
            ("min_child_weight", format!("{:e}", self.min_child_weight)),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
    }

    pub fn apply_pairs<'a>(
        mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        for (k, v) in pairs {
            match k {
                "estimators" => self.estimators = parse_num(k, v)?,
                "max_depth" => self.max_depth = parse_num(k, v)?,
                "learning_rate" => self.learning_rate = parse_num(k, v)?,
                "gamma" => self.gamma = parse_num(k, v)?,
                "min_child_weight" => self.min_child_weight = parse_num(k, v)?,
                "seed" => self.seed = parse_num(k, v)?,
                _ => return Err(Error::invalid(format!("unknown boosting parameter `{k}`"))),
            }
        }
        self.validate()?;
        Ok(self)
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, v: &str) -> Result<N> {
    v.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value `{v}` for `{key}`")))
}

fn fmt_pairs(f: &mut fmt::Formatter<'_>, pairs: BTreeMap<String, String>) -> fmt::Result {
    let joined: Vec<String> = pairs.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    f.write_str(&joined.join(","))
}

impl fmt::Display for ForestParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_pairs(f, self.to_pairs())
    }
}

impl fmt::Display for BoostParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_pairs(f, self.to_pairs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(1119), 33);
        assert_eq!(MaxFeatures::Log2.count(1119), 10);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
    }

    #[test]
    fn pairs_round_trip() {
        let p = BoostParams::default();
        let pairs = p.to_pairs();
        let back = BoostParams::default()
            .apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .unwrap();
        assert_eq!(back, p);
        let f = ForestParams {
            max_features: MaxFeatures::Log2,
            ..Default::default()
        };
        let pairs = f.to_pairs();
        let back = ForestParams::default()
            .apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn reported_boost_config_parses() {
        let p = BoostParams::default()
            .apply_pairs([
                ("estimators", "705"),
                ("max_depth", "4"),
                ("learning_rate", "9.0e-2"),
                ("gamma", "3.4e-1"),
            ])
            .unwrap();
        assert_eq!(p.estimators, 705);
        assert_eq!(p.learning_rate, 0.09);
    }

    #[test]
    fn invalid_values() {
        assert!(ForestParams::default()
            .apply_pairs([("min_samples_split", "1")])
            .is_err());
        assert!(BoostParams::default()
            .apply_pairs([("learning_rate", "0")])
            .is_err());
        assert!(BoostParams::default()
            .apply_pairs([("gamma", "-1")])
            .is_err());
        assert!(BoostParams::default().apply_pairs([("nope", "1")]).is_err());
    }
}
