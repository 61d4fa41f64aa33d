//! Post records, author grouping, stratified author-level splits and
//! balanced class weights.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::{Div, Mul};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::FromCount;

/// Binary author class. The positive class is `Troll`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotTroll = 0,
    Troll = 1,
}

impl Label {
    pub fn from_int(v: i64) -> Option<Label> {
        match v {
            0 => Some(Label::NotTroll),
            1 => Some(Label::Troll),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_positive(self) -> bool {
        self == Label::Troll
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostRecord {
    pub author_id: String,
    pub text: String,
    pub label: Option<Label>,
    pub source_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthorCorpus {
    pub author_id: String,
    pub posts: Vec<String>,
    pub label: Option<Label>,
}

impl AuthorCorpus {
    pub fn new(author_id: impl Into<String>, posts: Vec<String>, label: Option<Label>) -> Self {
        AuthorCorpus {
            author_id: author_id.into(),
            posts,
            label,
        }
    }
}

/// A rejected input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<PostRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Deserialize)]
struct RawRecord {
    author_id: String,
    text: String,
    #[serde(default)]
    label: Option<i64>,
    #[serde(default)]
    source: Option<String>,
}

/// Reads line-delimited JSON post records from `path`.
pub fn ingest(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), path)
}

/// Same as [`ingest`] over any buffered reader; `origin` names the source in
/// I/O errors.
pub fn ingest_reader(reader: impl BufRead, origin: impl AsRef<Path>) -> Result<Ingested> {
    let origin = origin.as_ref();
    let mut out = Ingested::default();
    let mut labels: HashMap<String, Label> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(trimmed) {
            Ok(r) => r,
            Err(e) => {
                out.diagnostics.push(Diagnostic {
                    line: line_no,
                    message: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        if raw.text.trim().is_empty() {
            out.diagnostics.push(Diagnostic {
                line: line_no,
                message: format!("empty text for author `{}`", raw.author_id),
            });
            continue;
        }
        let label = match raw.label {
            None => None,
            Some(v) => match Label::from_int(v) {
                Some(l) => Some(l),
                None => {
                    out.diagnostics.push(Diagnostic {
                        line: line_no,
                        message: format!("label must be 0 or 1, got {v}"),
                    });
                    continue;
                }
            },
        };
        if let Some(l) = label {
            match labels.get(&raw.author_id) {
                Some(prev) if *prev != l => return Err(Error::LabelConflict(raw.author_id)),
                Some(_) => {}
                None => {
                    labels.insert(raw.author_id.clone(), l);
                }
            }
        }
        out.records.push(PostRecord {
            author_id: raw.author_id,
            text: raw.text,
            label,
            source_tag: raw.source,
        });
    }
    Ok(out)
}

/// Groups records into one corpus per author, sorted by author id. Post
/// order within an author follows the input order.
pub fn group_by_author(records: &[PostRecord]) -> Vec<AuthorCorpus> {
    let mut by_author: BTreeMap<&str, AuthorCorpus> = BTreeMap::new();
    for r in records {
        let entry = by_author
            .entry(r.author_id.as_str())
            .or_insert_with(|| AuthorCorpus::new(r.author_id.clone(), Vec::new(), None));
        entry.posts.push(r.text.clone());
        if r.label.is_some() {
            entry.label = r.label;
        }
    }
    by_author.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        for (name, f) in [("train", train), ("validation", validation), ("test", test)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::invalid(format!(
                    "{name} fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        if (train + validation + test - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions must sum to 1, got {}",
                train + validation + test
            )));
        }
        Ok(SplitSpec {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
        })
    }

    /// 70/15/15.
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec::new(0.7, 0.15, 0.15, seed).expect("default fractions are valid")
    }

    fn fractions(&self) -> [f64; 3] {
        [
            self.train_fraction,
            self.validation_fraction,
            self.test_fraction,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Partition> {
        match s {
            "train" => Some(Partition::Train),
            "validation" => Some(Partition::Validation),
            "test" => Some(Partition::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Split {
    pub train: Vec<AuthorCorpus>,
    pub validation: Vec<AuthorCorpus>,
    pub test: Vec<AuthorCorpus>,
}

/// Largest-remainder apportionment of `n` items over `fractions`.
fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let quotas = fractions.map(|f| f * n as f64);
    let mut counts = quotas.map(|q| (q + 1e-9).floor() as usize);
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    // stable sort keeps train < validation < test on equal remainders
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Assigns each corpus (by index) to a partition, stratified by label.
pub fn assign_partitions(corpora: &[AuthorCorpus], spec: &SplitSpec) -> Result<Vec<Partition>> {
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, c) in corpora.iter().enumerate() {
        let label = c
            .label
            .ok_or_else(|| Error::Unlabeled(c.author_id.clone()))?;
        per_class[label.index()].push(i);
    }
    let mut assignment = vec![Partition::Train; corpora.len()];
    for (class, members) in per_class.iter_mut().enumerate() {
        if members.len() < 3 {
            return Err(Error::invalid(format!(
                "class {class} has {} authors; at least 3 are required to split",
                members.len()
            )));
        }
        members.sort_by(|&a, &b| corpora[a].author_id.cmp(&corpora[b].author_id));
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed ^ (class as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        members.shuffle(&mut rng);
        let [n_train, n_val, _] = apportion(members.len(), spec.fractions());
        for (pos, &idx) in members.iter().enumerate() {
            assignment[idx] = if pos < n_train {
                Partition::Train
            } else if pos < n_train + n_val {
                Partition::Validation
            } else {
                Partition::Test
            };
        }
    }
    Ok(assignment)
}

/// Splits labelled corpora by author into train, validation and test sets.
pub fn split(corpora: &[AuthorCorpus], spec: &SplitSpec) -> Result<Split> {
    let assignment = assign_partitions(corpora, spec)?;
    let mut out = Split::default();
    for (c, p) in corpora.iter().zip(assignment) {
        match p {
            Partition::Train => out.train.push(c.clone()),
            Partition::Validation => out.validation.push(c.clone()),
            Partition::Test => out.test.push(c.clone()),
        }
    }
    Ok(out)
}

/// Per-class weights indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights<T> {
    pub not_troll: T,
    pub troll: T,
}

impl<T: Copy> ClassWeights<T> {
    pub fn get(&self, label: Label) -> T {
        match label {
            Label::NotTroll => self.not_troll,
            Label::Troll => self.troll,
        }
    }
}

impl ClassWeights<f64> {
    pub fn uniform() -> Self {
        ClassWeights {
            not_troll: 1.0,
            troll: 1.0,
        }
    }
}

/// Balanced weights: `total / (2 * count(class))`.
pub fn class_weights<T>(labels: &[Label]) -> Result<ClassWeights<T>>
where
    T: FromCount + Copy + Div<Output = T> + Mul<Output = T>,
{
    let positives = labels.iter().filter(|l| l.is_positive()).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(
            "class weights need both classes to be present",
        ));
    }
    let total = T::from_count(labels.len() as u64);
    let two = T::from_count(2);
    Ok(ClassWeights {
        not_troll: total / (two * T::from_count(negatives)),
        troll: total / (two * T::from_count(positives)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use std::io::Cursor;

    fn ingest_str(s: &str) -> Result<Ingested> {
        ingest_reader(Cursor::new(s.as_bytes()), "mem")
    }

    #[test]
    fn ingest_rejects_blank_text() {
        let data = r#"{"author_id":"a","text":"hi","label":1}
{"author_id":"b","text":"  ","label":0}
{"author_id":"b","text":"yo","label":0}
{"author_id":"c","text":"hey"}
"#;
        let got = ingest_str(data).unwrap();
        assert_eq!(got.records.len(), 3);
        assert_eq!(got.diagnostics.len(), 1);
        assert_eq!(got.diagnostics[0].line, 2);
    }

    #[test]
    fn ingest_empty_input() {
        let got = ingest_str("").unwrap();
        assert!(got.records.is_empty());
        assert!(got.diagnostics.is_empty());
    }

    #[test]
    fn ingest_label_conflict_is_fatal() {
        let data = "{\"author_id\":\"a\",\"text\":\"x\",\"label\":1}\n{\"author_id\":\"a\",\"text\":\"y\",\"label\":0}\n";
        match ingest_str(data) {
            Err(Error::LabelConflict(a)) => assert_eq!(a, "a"),
            other => panic!("expected label conflict, got {other:?}"),
        }
    }

    #[test]
    fn ingest_skips_comments_and_reports_bad_lines() {
        let data = "# header\n{\"author_id\":\"a\",\"text\":\"x\",\"source\":\"ira\"}\nnot json\n{\"author_id\":\"a\",\"text\":\"x\",\"label\":7}\n";
        let got = ingest_str(data).unwrap();
        assert_eq!(got.records.len(), 1);
        assert_eq!(got.records[0].source_tag.as_deref(), Some("ira"));
        let lines: Vec<usize> = got.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![3, 4]);
    }

    #[test]
    fn unlabeled_and_labeled_posts_of_one_author_agree() {
        let data = "{\"author_id\":\"a\",\"text\":\"x\"}\n{\"author_id\":\"a\",\"text\":\"y\",\"label\":1}\n";
        let got = ingest_str(data).unwrap();
        let corpora = group_by_author(&got.records);
        assert_eq!(corpora[0].label, Some(Label::Troll));
    }

    fn rec(a: &str, t: &str) -> PostRecord {
        PostRecord {
            author_id: a.into(),
            text: t.into(),
            label: None,
            source_tag: None,
        }
    }

    #[test]
    fn grouping_preserves_order() {
        let got = group_by_author(&[rec("a", "x"), rec("b", "y"), rec("a", "z")]);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].author_id, "a");
        assert_eq!(got[0].posts, vec!["x", "z"]);
        assert_eq!(group_by_author(&[rec("q", "w")])[0].posts.len(), 1);
        assert!(group_by_author(&[]).is_empty());
    }

    fn labelled(n_pos: usize, n_neg: usize) -> Vec<AuthorCorpus> {
        (0..n_pos)
            .map(|i| AuthorCorpus::new(format!("t{i:02}"), vec!["x".into()], Some(Label::Troll)))
            .chain((0..n_neg).map(|i| {
                AuthorCorpus::new(format!("n{i:02}"), vec!["x".into()], Some(Label::NotTroll))
            }))
            .collect()
    }

    #[test]
    fn split_counts_for_ten_and_ten() {
        let corpora = labelled(10, 10);
        for seed in 0..20 {
            let s = split(&corpora, &SplitSpec::with_seed(seed)).unwrap();
            for label in [Label::Troll, Label::NotTroll] {
                let count =
                    |v: &[AuthorCorpus]| v.iter().filter(|c| c.label == Some(label)).count();
                assert_eq!(count(&s.train), 7);
                assert!(count(&s.validation) >= 1);
                assert!(count(&s.test) >= 1);
            }
            let mut ids: Vec<_> = s
                .train
                .iter()
                .chain(&s.validation)
                .chain(&s.test)
                .map(|c| c.author_id.clone())
                .collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), 20);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let corpora = labelled(10, 12);
        let spec = SplitSpec::with_seed(42);
        assert_eq!(
            assign_partitions(&corpora, &spec).unwrap(),
            assign_partitions(&corpora, &spec).unwrap()
        );
    }

    #[test]
    fn split_rejects_unlabeled_and_tiny_classes() {
        let mut corpora = labelled(4, 4);
        corpora.push(AuthorCorpus::new("u", vec!["x".into()], None));
        assert!(matches!(
            split(&corpora, &SplitSpec::with_seed(1)),
            Err(Error::Unlabeled(_))
        ));
        assert!(split(&labelled(2, 5), &SplitSpec::with_seed(1)).is_err());
    }

    #[test]
    fn split_spec_validation() {
        assert!(SplitSpec::new(0.5, 0.25, 0.25, 0).is_ok());
        assert!(SplitSpec::new(0.5, 0.3, 0.3, 0).is_err());
        assert!(SplitSpec::new(1.0, 0.0, 0.0, 0).is_err());
    }

    fn counts(pos: usize, neg: usize) -> Vec<Label> {
        let mut v = vec![Label::Troll; pos];
        v.extend(vec![Label::NotTroll; neg]);
        v
    }

    #[test]
    fn balanced_weights() {
        let w: ClassWeights<f64> = class_weights(&counts(10, 40)).unwrap();
        assert_eq!(w.troll, 2.5);
        assert_eq!(w.not_troll, 0.625);
        let w: ClassWeights<f64> = class_weights(&counts(7, 7)).unwrap();
        assert_eq!((w.troll, w.not_troll), (1.0, 1.0));
    }

    #[test]
    fn balanced_weight_ratio_at_corpus_scale() {
        let w: ClassWeights<Ratio<i64>> = class_weights(&counts(2560, 125_000)).unwrap();
        assert_eq!(w.troll / w.not_troll, Ratio::new(125_000, 2560));
        let ratio =
            *(w.troll / w.not_troll).numer() as f64 / *(w.troll / w.not_troll).denom() as f64;
        assert!((ratio - 48.828125).abs() < 1e-12);
        assert_eq!(
            w.troll * Ratio::from_integer(2560),
            w.not_troll * Ratio::from_integer(125_000)
        );
    }

    #[test]
    fn single_class_weights_error() {
        assert!(class_weights::<f64>(&counts(3, 0)).is_err());
        assert!(class_weights::<f64>(&[]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partition_and_stratification(n_pos in 3usize..40, n_neg in 3usize..40, seed in any::<u64>()) {
                let corpora = labelled(n_pos, n_neg);
                let spec = SplitSpec::with_seed(seed);
                let parts = assign_partitions(&corpora, &spec).unwrap();
                prop_assert_eq!(parts.len(), corpora.len());
                for (label, k) in [(Label::Troll, n_pos), (Label::NotTroll, n_neg)] {
                    for (p, f) in [(Partition::Train, 0.7), (Partition::Validation, 0.15), (Partition::Test, 0.15)] {
                        let got = corpora.iter().zip(&parts).filter(|(c, q)| c.label == Some(label) && **q == p).count();
                        prop_assert!((got as f64 / k as f64 - f).abs() <= 1.0 / k as f64 + 1e-12);
                    }
                }
            }

            #[test]
            fn weighted_counts_balance(pos in 1u64..5000, neg in 1u64..5000) {
                let labels = counts(pos as usize, neg as usize);
                let w: ClassWeights<f64> = class_weights(&labels).unwrap();
                prop_assert!((w.troll * pos as f64 - w.not_troll * neg as f64).abs() <= 1e-12 * (pos + neg) as f64);
                let r: ClassWeights<Ratio<i64>> = class_weights(&labels).unwrap();
                prop_assert_eq!(r.troll * Ratio::from_integer(pos as i64), r.not_troll * Ratio::from_integer(neg as i64));
            }
        }
    }
}
