//! Per-post lexical and syntactic features and their aggregation into a
//! fixed-width vector per author.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::assets::Lexicon;
use crate::burrows::{BurrowsModel, ProfileCounter, Vocabulary};
use crate::corpus::AuthorCorpus;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::readability::{ReadabilityScores, TextStats};
use crate::scalar::Real;
use crate::tokenizer::{self, PosTag, Token, TokenClass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationStats<T> {
    pub min: T,
    pub mean: T,
    pub median: T,
    pub max: T,
}

impl<T: Real> AggregationStats<T> {
    pub const NAMES: [&'static str; 4] = ["min", "mean", "median", "max"];

    pub fn zero() -> Self {
        AggregationStats {
            min: T::zero(),
            mean: T::zero(),
            median: T::zero(),
            max: T::zero(),
        }
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.min, self.mean, self.median, self.max]
    }
}

/// Min, mean, median and max; all zero for an empty slice.
pub fn aggregate<T: Real>(values: &[T]) -> AggregationStats<T> {
    if values.is_empty() {
        return AggregationStats::zero();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("aggregated values are finite"));
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0)
    };
    let mean = (sorted.iter().copied().sum::<T>() / T::from_count(n))
        .max(min)
        .min(max);
    AggregationStats {
        min,
        mean,
        median,
        max,
    }
}

pub const DENSITY_NAMES: [&str; 6] = [
    "punctuation",
    "word",
    "digit",
    "special",
    "stopword",
    "meaningful",
];

/// Number of density features per post: six class densities plus one per
/// part-of-speech tag.
pub const DENSITY_COUNT: usize = DENSITY_NAMES.len() + PosTag::ALL.len();

/// Densities in schema order: token classes over all tokens, then
/// stopword, meaningful and part-of-speech counts over word tokens.
pub fn syntactic_post_features<T: Real>(tokens: &[Token], lexicon: &Lexicon) -> [T; DENSITY_COUNT] {
    let mut class_counts = [0usize; 4];
    let mut stop = 0usize;
    let mut tags = [0usize; 13];
    for t in tokens {
        let slot = match t.class {
            TokenClass::Punctuation => 0,
            TokenClass::Word => 1,
            TokenClass::Digit => 2,
            TokenClass::Special => 3,
        };
        class_counts[slot] += 1;
        if t.is_word() {
            if lexicon.is_stopword(&t.text) {
                stop += 1;
            }
            tags[tokenizer::tag_word(lexicon, &t.text).index()] += 1;
        }
    }
    let mut out = [T::zero(); DENSITY_COUNT];
    if tokens.is_empty() {
        return out;
    }
    let total = T::from_count(tokens.len());
    for (o, c) in out.iter_mut().zip(class_counts) {
        *o = T::from_count(c) / total;
    }
    let words = class_counts[1];
    if words > 0 {
        let w = T::from_count(words);
        out[4] = T::from_count(stop) / w;
        out[5] = T::from_count(words - stop) / w;
        for (o, c) in out[6..].iter_mut().zip(tags) {
            *o = T::from_count(c) / w;
        }
    }
    out
}

/// Character count and number of distinct word forms.
pub fn lexical_post_features(text: &str) -> (usize, usize) {
    lexical_from_tokens(text, &tokenizer::tokenize(text))
}

fn lexical_from_tokens(text: &str, tokens: &[Token]) -> (usize, usize) {
    let unique: HashSet<&str> = tokens
        .iter()
        .filter(|t| t.is_word())
        .map(|t| t.text.as_str())
        .collect();
    (text.chars().count(), unique.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostFeatures<T> {
    pub char_count: usize,
    pub unique_word_count: usize,
    pub densities: [T; DENSITY_COUNT],
    /// `None` for posts without word tokens.
    pub readability: Option<ReadabilityScores<T>>,
}

pub fn post_features<T: Real>(text: &str, lexicon: &Lexicon) -> PostFeatures<T> {
    let tokens = tokenizer::tokenize(text);
    post_features_from_tokens(text, &tokens, lexicon)
}

fn post_features_from_tokens<T: Real>(
    text: &str,
    tokens: &[Token],
    lexicon: &Lexicon,
) -> PostFeatures<T> {
    let (char_count, unique_word_count) = lexical_from_tokens(text, tokens);
    let stats = TextStats::from_tokens(text, tokens, lexicon);
    PostFeatures {
        char_count,
        unique_word_count,
        densities: syntactic_post_features(tokens, lexicon),
        readability: ReadabilityScores::compute(&stats),
    }
}

/// Ordered feature names and a fingerprint identifying them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    fingerprint: String,
}

impl FeatureSchema {
    pub fn new(names: Vec<String>) -> Self {
        let mut hasher = Sha256::new();
        for n in &names {
            hasher.update(n.as_bytes());
            hasher.update([0u8]);
        }
        let fingerprint = hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect();
        FeatureSchema { names, fingerprint }
    }

    /// The standard layout: readability, post length, unique words, word
    /// length, densities, then one Burrows' Z column per vocabulary word.
    pub fn for_vocabulary(vocabulary: &Vocabulary) -> Self {
        let aggs = AggregationStats::<f64>::NAMES;
        let mut names = Vec::with_capacity(43 + 4 * DENSITY_COUNT + vocabulary.len());
        for metric in ReadabilityScores::<f64>::NAMES {
            names.extend(aggs.iter().map(|a| format!("readability.{metric}.{a}")));
        }
        names.extend(aggs.iter().map(|a| format!("post_chars.{a}")));
        names.extend(aggs.iter().map(|a| format!("unique_words.{a}")));
        names.extend(
            ["min", "mean", "max"]
                .iter()
                .map(|a| format!("word_length.{a}")),
        );
        let density_names = DENSITY_NAMES.iter().map(|d| d.to_string()).chain(
            PosTag::ALL
                .iter()
                .map(|t| format!("pos_{}", t.name().to_lowercase())),
        );
        for d in density_names {
            names.extend(aggs.iter().map(|a| format!("density.{d}.{a}")));
        }
        names.extend(vocabulary.words().iter().map(|w| format!("burrows_z.{w}")));
        FeatureSchema::new(names)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthorFeatureVector<T> {
    pub schema: Arc<FeatureSchema>,
    pub values: Vec<T>,
}

/// Computes author vectors against a fitted Burrows model.
pub struct Featurizer<'a, T> {
    lexicon: &'a Lexicon,
    burrows: &'a BurrowsModel<T>,
    schema: Arc<FeatureSchema>,
}

impl<'a, T: Real> Featurizer<'a, T> {
    pub fn new(lexicon: &'a Lexicon, burrows: &'a BurrowsModel<T>) -> Result<Self> {
        if burrows.is_empty() {
            return Err(Error::invalid("Burrows model is not fitted"));
        }
        Ok(Featurizer {
            lexicon,
            burrows,
            schema: Arc::new(FeatureSchema::for_vocabulary(&burrows.vocabulary)),
        })
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn author_vector(&self, corpus: &AuthorCorpus) -> Result<AuthorFeatureVector<T>> {
        let n_posts = corpus.posts.len();
        let mut readability: Vec<Vec<T>> = (0..8).map(|_| Vec::with_capacity(n_posts)).collect();
        let mut chars = Vec::with_capacity(n_posts);
        let mut uniques = Vec::with_capacity(n_posts);
        let mut densities: Vec<Vec<T>> = (0..DENSITY_COUNT)
            .map(|_| Vec::with_capacity(n_posts))
            .collect();
        let mut word_len = (usize::MAX, 0usize, 0usize, 0usize); // min, max, sum, count
        let mut profile = ProfileCounter::new(&self.burrows.vocabulary);

        for post in &corpus.posts {
            let tokens = tokenizer::tokenize(post);
            for t in tokens.iter().filter(|t| t.is_word()) {
                let len = t.text.chars().count();
                word_len.0 = word_len.0.min(len);
                word_len.1 = word_len.1.max(len);
                word_len.2 += len;
                word_len.3 += 1;
                profile.add_word(&t.text);
            }
            let pf: PostFeatures<T> = post_features_from_tokens(post, &tokens, self.lexicon);
            chars.push(T::from_count(pf.char_count));
            uniques.push(T::from_count(pf.unique_word_count));
            if let Some(r) = pf.readability {
                for (col, v) in readability.iter_mut().zip(r.to_array()) {
                    col.push(v);
                }
            }
            for (col, v) in densities.iter_mut().zip(pf.densities) {
                col.push(v);
            }
        }

        let mut values = Vec::with_capacity(self.schema.width());
        for col in &readability {
            values.extend(aggregate(col).to_array());
        }
        values.extend(aggregate(&chars).to_array());
        values.extend(aggregate(&uniques).to_array());
        if word_len.3 == 0 {
            values.extend([T::zero(); 3]);
        } else {
            values.extend([
                T::from_count(word_len.0),
                T::from_count(word_len.2) / T::from_count(word_len.3),
                T::from_count(word_len.1),
            ]);
        }
        for col in &densities {
            values.extend(aggregate(col).to_array());
        }
        values.extend(crate::burrows::z_score(&profile.finish(), self.burrows)?);

        if values.len() != self.schema.width() {
            return Err(Error::Invariant(format!(
                "feature vector has {} values for a schema of {}",
                values.len(),
                self.schema.width()
            )));
        }
        Ok(AuthorFeatureVector {
            schema: Arc::clone(&self.schema),
            values,
        })
    }

    /// One row per corpus, in input order. Authors are processed in
    /// parallel; the result does not depend on scheduling.
    pub fn matrix(&self, corpora: &[AuthorCorpus]) -> Result<FeatureMatrix<T>> {
        let rows: Vec<AuthorFeatureVector<T>> = corpora
            .par_iter()
            .map(|c| self.author_vector(c))
            .collect::<Result<_>>()?;
        FeatureMatrix::from_rows(
            Arc::clone(&self.schema),
            corpora.iter().map(|c| c.author_id.clone()).collect(),
            corpora.iter().map(|c| c.label).collect(),
            rows.into_iter().map(|r| r.values).collect(),
        )
    }
}

pub fn author_feature_vector<T: Real>(
    corpus: &AuthorCorpus,
    burrows: &BurrowsModel<T>,
    lexicon: &Lexicon,
) -> Result<AuthorFeatureVector<T>> {
    Featurizer::new(lexicon, burrows)?.author_vector(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burrows::Vocabulary;

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.to_array(), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(aggregate(&[7.0]).to_array(), [7.0; 4]);
        assert_eq!(aggregate::<f64>(&[]).to_array(), [0.0; 4]);
        assert_eq!(aggregate(&[3.0, 1.0, 2.0]).median, 2.0);
    }

    #[test]
    fn densities_of_dont_stop() {
        let lex = Lexicon::bundled();
        let d: [f64; DENSITY_COUNT] =
            syntactic_post_features(&tokenizer::tokenize("don't stop!!"), &lex);
        assert_eq!(d[0], 0.5);
        assert_eq!(d[1], 0.5);
        assert!((d[4] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d[5] - 1.0 / 3.0).abs() < 1e-15);
        let pos_sum: f64 = d[6..].iter().sum();
        assert!((pos_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn densities_degenerate_cases() {
        let lex = Lexicon::bundled();
        let d: [f64; DENSITY_COUNT] = syntactic_post_features(&[], &lex);
        assert!(d.iter().all(|&v| v == 0.0));
        let d: [f64; DENSITY_COUNT] =
            syntactic_post_features(&tokenizer::tokenize("all words here"), &lex);
        assert_eq!(&d[..4], &[0.0, 1.0, 0.0, 0.0]);
        let d: [f64; DENSITY_COUNT] = syntactic_post_features(&tokenizer::tokenize("42 !!"), &lex);
        assert!(d[4..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn injected_stopword_list() {
        let lex = Lexicon::builder().stopwords(["stop"]).build();
        let d: [f64; DENSITY_COUNT] =
            syntactic_post_features(&tokenizer::tokenize("stop go"), &lex);
        assert_eq!(d[4], 0.5);
    }

    #[test]
    fn lexical_examples() {
        assert_eq!(lexical_post_features("aa aa bb"), (8, 2));
        assert_eq!(lexical_post_features(""), (0, 0));
        assert_eq!(lexical_post_features("A a"), (3, 1));
    }

    fn model(words: &[&str]) -> BurrowsModel<f64> {
        let corpora = [AuthorCorpus::new("z", vec![words.join(" ")], None)];
        BurrowsModel::fit(&corpora, words.len()).unwrap()
    }

    #[test]
    fn default_width_is_1119() {
        let words: Vec<String> = (0..1000)
            .map(|i| format!("w{}", "a".repeat(i % 7 + 1)) + &"b".repeat(i / 7))
            .collect();
        let vocab = Vocabulary::new(words).unwrap();
        let schema = FeatureSchema::for_vocabulary(&vocab);
        assert_eq!(schema.width(), 1119);
        assert_eq!(FeatureSchema::for_vocabulary(&vocab), schema);
    }

    #[test]
    fn single_post_author() {
        let lex = Lexicon::bundled();
        let m = model(&["the", "cat", "sat"]);
        let c = AuthorCorpus::new("a", vec!["The cat sat. Wow!".into()], None);
        let v = author_feature_vector(&c, &m, &lex).unwrap();
        // readability, post length, unique words: min = mean = median = max
        for block in v.values[..40].chunks(4) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
        for block in v.values[43..43 + 4 * DENSITY_COUNT].chunks(4) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
    }

    #[test]
    fn author_without_words() {
        let lex = Lexicon::bundled();
        let m = model(&["a", "b"]);
        let c = AuthorCorpus::new("a", vec!["123 !!".into(), "🙂".into()], None);
        let v = author_feature_vector(&c, &m, &lex).unwrap();
        assert_eq!(&v.values[40..43], &[0.0, 0.0, 0.0]);
        assert!(v.values[..32].iter().all(|&x| x == 0.0));
        let z = &v.values[v.values.len() - 2..];
        let expected: Vec<f64> =
            m.mu.iter()
                .zip(&m.sigma)
                .map(|(mu, s)| if *s > 0.0 { -mu / s } else { 0.0 })
                .collect();
        assert_eq!(z, expected.as_slice());
    }

    #[test]
    fn unfitted_model_is_rejected() {
        let lex = Lexicon::bundled();
        let empty = BurrowsModel::<f64> {
            vocabulary: Vocabulary::default(),
            mu: vec![],
            sigma: vec![],
        };
        let c = AuthorCorpus::new("a", vec!["x".into()], None);
        assert!(author_feature_vector(&c, &empty, &lex).is_err());
    }

    #[test]
    fn post_order_does_not_matter() {
        let lex = Lexicon::bundled();
        let m = model(&["the", "cat", "dog", "ran"]);
        let posts: Vec<String> = vec![
            "The cat ran.".into(),
            "dog!! 42".into(),
            "a cat, a dog; the end?".into(),
        ];
        let mut rev = posts.clone();
        rev.reverse();
        let a = author_feature_vector(&AuthorCorpus::new("a", posts, None), &m, &lex).unwrap();
        let b = author_feature_vector(&AuthorCorpus::new("a", rev, None), &m, &lex).unwrap();
        assert_eq!(a.values, b.values);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn aggregation_ordering(v in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
                let a = aggregate(&v);
                prop_assert!(a.min <= a.median && a.median <= a.max);
                prop_assert!(a.min <= a.mean && a.mean <= a.max);
            }

            #[test]
            fn class_densities_partition(s in any::<String>()) {
                let lex = Lexicon::bundled();
                let toks = tokenizer::tokenize(&s);
                let d: [f64; DENSITY_COUNT] = syntactic_post_features(&toks, &lex);
                prop_assert!(d.iter().all(|&x| (0.0..=1.0).contains(&x)));
                if !toks.is_empty() {
                    prop_assert!((d[..4].iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
                if toks.iter().any(Token::is_word) {
                    prop_assert!((d[4] + d[5] - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
