//! Stylometric author profiling.
//!
//! Posts are grouped per author, turned into readability, lexical,
//! syntactic and Burrows' Z features, normalised with a Yeo-Johnson power
//! transform and classified with tree ensembles.

pub mod assets;
pub mod burrows;
pub mod corpus;
pub mod error;
pub mod features;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod readability;
pub mod scalar;
pub mod synthetic;
pub mod tokenizer;
pub mod transform;
pub mod tuning;

pub use assets::Lexicon;
pub use corpus::{AuthorCorpus, Label, Partition, PostRecord, SplitSpec};
pub use error::{Error, Result};
pub use features::{FeatureSchema, Featurizer};
pub use scalar::{FromCount, Real};

pub type ExactRatio = num_rational::Ratio<i128>;

pub type BurrowsModel64 = burrows::BurrowsModel<f64>;
pub type FeatureMatrix64 = matrix::FeatureMatrix<f64>;
pub type FeatureTransform64 = transform::FeatureTransform<f64>;
pub type TrainedModel64 = models::TrainedModel<f64>;
pub type AnyModel64 = models::AnyModel<f64>;
pub type ClassWeights64 = corpus::ClassWeights<f64>;
pub type ReadabilityScores64 = readability::ReadabilityScores<f64>;

pub type BurrowsModel32 = burrows::BurrowsModel<f32>;
pub type FeatureMatrix32 = matrix::FeatureMatrix<f32>;
pub type TrainedModel32 = models::TrainedModel<f32>;
