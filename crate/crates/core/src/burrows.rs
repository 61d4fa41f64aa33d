//! Burrows' Z: per-author relative frequencies of the corpus's most common
//! words, standardized by the author-weighted mean and standard deviation,
//! plus the per-word troll-share report.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::Ratio;

use crate::assets::Lexicon;
use crate::corpus::{AuthorCorpus, Label};
use crate::error::{Error, Result};
use crate::scalar::{format_scaled, round_half_toward_zero, Real};
use crate::tokenizer::tokenize;

/// Ordered most-frequent word types.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

fn for_each_word(corpus: &AuthorCorpus, mut f: impl FnMut(&str)) {
    for post in &corpus.posts {
        for t in tokenize(post) {
            if t.is_word() {
                f(&t.text);
            }
        }
    }
}

fn word_counts<'a>(corpora: impl IntoIterator<Item = &'a AuthorCorpus>) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for c in corpora {
        for_each_word(c, |w| {
            if let Some(n) = counts.get_mut(w) {
                *n += 1;
            } else {
                counts.insert(w.to_owned(), 1);
            }
        });
    }
    counts
}

fn top_n(counts: &HashMap<String, u64>, n: usize) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = counts.iter().map(|(w, c)| (w.clone(), *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

/// The `n` most frequent word types over all posts; equal counts are
/// ordered lexicographically.
pub fn fit_vocabulary(corpora: &[AuthorCorpus], n: usize) -> Result<Vocabulary> {
    if n == 0 {
        return Err(Error::invalid("vocabulary size must be at least 1"));
    }
    let counts = word_counts(corpora);
    if counts.is_empty() {
        return Err(Error::invalid("corpus contains no word tokens"));
    }
    Vocabulary::new(top_n(&counts, n).into_iter().map(|(w, _)| w).collect())
}

/// Fraction of the author's word tokens that are each vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorProfile<T> {
    pub x: Vec<T>,
}

/// Accumulates word occurrences for one author.
#[derive(Debug, Clone)]
pub struct ProfileCounter<'v> {
    vocabulary: &'v Vocabulary,
    hits: Vec<u64>,
    total: u64,
}

impl<'v> ProfileCounter<'v> {
    pub fn new(vocabulary: &'v Vocabulary) -> Self {
        ProfileCounter {
            vocabulary,
            hits: vec![0; vocabulary.len()],
            total: 0,
        }
    }

    pub fn add_word(&mut self, word: &str) {
        self.total += 1;
        if let Some(i) = self.vocabulary.position(word) {
            self.hits[i] += 1;
        }
    }

    pub fn finish<T: Real>(self) -> AuthorProfile<T> {
        if self.total == 0 {
            return AuthorProfile {
                x: vec![T::zero(); self.hits.len()],
            };
        }
        let total = T::lit(self.total as f64);
        AuthorProfile {
            x: self
                .hits
                .into_iter()
                .map(|h| T::lit(h as f64) / total)
                .collect(),
        }
    }
}

pub fn author_profile<T: Real>(corpus: &AuthorCorpus, vocabulary: &Vocabulary) -> AuthorProfile<T> {
    let mut counter = ProfileCounter::new(vocabulary);
    for_each_word(corpus, |w| counter.add_word(w));
    counter.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurrowsModel<T> {
    pub vocabulary: Vocabulary,
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

/// Author-weighted mean and population standard deviation of the profiles.
pub fn fit_z_model<T: Real>(
    vocabulary: Vocabulary,
    profiles: &[AuthorProfile<T>],
) -> Result<BurrowsModel<T>> {
    if profiles.is_empty() {
        return Err(Error::invalid("cannot fit Burrows' Z on zero profiles"));
    }
    let n = vocabulary.len();
    if let Some(p) = profiles.iter().find(|p| p.x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.x.len(),
        });
    }
    let count = T::from_count(profiles.len());
    let mut mu = vec![T::zero(); n];
    for p in profiles {
        for (m, &x) in mu.iter_mut().zip(&p.x) {
            *m = *m + x;
        }
    }
    mu.iter_mut().for_each(|m| *m = *m / count);
    let mut var = vec![T::zero(); n];
    for p in profiles {
        for ((v, &x), &m) in var.iter_mut().zip(&p.x).zip(&mu) {
            let d = x - m;
            *v = *v + d * d;
        }
    }
    let sigma = var.into_iter().map(|v| (v / count).sqrt()).collect();
    Ok(BurrowsModel {
        vocabulary,
        mu,
        sigma,
    })
}

/// Element-wise `(x - mu) / sigma`; zero where `sigma` is zero.
pub fn z_score<T: Real>(profile: &AuthorProfile<T>, model: &BurrowsModel<T>) -> Result<Vec<T>> {
    if profile.x.len() != model.mu.len() {
        return Err(Error::DimensionMismatch {
            expected: model.mu.len(),
            found: profile.x.len(),
        });
    }
    Ok(profile
        .x
        .iter()
        .zip(&model.mu)
        .zip(&model.sigma)
        .map(|((&x, &m), &s)| {
            if s > T::zero() {
                (x - m) / s
            } else {
                T::zero()
            }
        })
        .collect())
}

impl<T: Real> BurrowsModel<T> {
    /// Fits vocabulary and standardization on `corpora`.
    pub fn fit(corpora: &[AuthorCorpus], n: usize) -> Result<Self> {
        let vocabulary = fit_vocabulary(corpora, n)?;
        let profiles: Vec<AuthorProfile<T>> = corpora
            .iter()
            .map(|c| author_profile(c, &vocabulary))
            .collect();
        fit_z_model(vocabulary, &profiles)
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn z_for(&self, corpus: &AuthorCorpus) -> Result<Vec<T>> {
        z_score(&author_profile(corpus, &self.vocabulary), self)
    }

    const HEADER: &'static str = "burrows-model v1";

    /// Text serialization: a header, the size, then `word<TAB>mu<TAB>sigma`
    /// per line with round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\nn\t{}\n", Self::HEADER, self.len());
        for ((w, m), s) in self
            .vocabulary
            .words()
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma)
        {
            let _ = writeln!(out, "{w}\t{:e}\t{:e}", m.as_f64(), s.as_f64());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::Parse {
            path: "burrows model".into(),
            line,
            message: message.into(),
        };
        let mut lines = text.lines();
        if lines.next() != Some(Self::HEADER) {
            return Err(bad(1, "unsupported header"));
        }
        let n: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("n\t"))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(2, "expected `n<TAB>count`"))?;
        let (mut words, mut mu, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let parse = |s: &str| s.parse::<f64>().ok().map(T::lit);
            match fields.as_slice() {
                [w, m, s] => {
                    words.push((*w).to_owned());
                    mu.push(parse(m).ok_or_else(|| bad(i + 3, "bad mean"))?);
                    sigma.push(parse(s).ok_or_else(|| bad(i + 3, "bad deviation"))?);
                }
                _ => return Err(bad(i + 3, "expected three fields")),
            }
        }
        if words.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: words.len(),
            });
        }
        Ok(BurrowsModel {
            vocabulary: Vocabulary::new(words)?,
            mu,
            sigma,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordReportRow {
    pub token: String,
    pub uses: u64,
    pub troll_uses: u64,
    /// Percentage of uses by troll authors.
    pub troll_share: f64,
    /// `troll_share` minus the corpus-wide troll share of word tokens.
    pub points_from_random: f64,
    pub stopword: bool,
    exact_share: Ratio<i128>,
    exact_points: Ratio<i128>,
}

impl WordReportRow {
    /// Percentage with two decimals; a full 100 prints as `100.0`.
    pub fn troll_share_display(&self) -> String {
        let scaled = round_half_toward_zero(&self.exact_share, 2);
        if scaled >= 10_000 {
            format_scaled(scaled / 10, 1, false)
        } else {
            format_scaled(scaled, 2, false)
        }
    }

    pub fn points_display(&self) -> String {
        format_scaled(round_half_toward_zero(&self.exact_points, 2), 2, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordReport {
    pub rows: Vec<WordReportRow>,
    pub total_words: u64,
    pub troll_words: u64,
    /// Troll percentage of all word tokens.
    pub baseline: f64,
    exact_baseline: Ratio<i128>,
}

fn percent(part: u64, whole: u64) -> Ratio<i128> {
    Ratio::new(100 * i128::from(part), i128::from(whole.max(1)))
}

fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl WordReport {
    pub fn baseline_display(&self) -> String {
        format_scaled(round_half_toward_zero(&self.exact_baseline, 2), 2, false)
    }

    /// Tab-separated table: token, uses, troll_percent, points, stopword.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# troll share of word tokens: {}\ntoken\tuses\ttroll_percent\tpoints\tstopword\n",
            self.baseline_display()
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.token,
                r.uses,
                r.troll_share_display(),
                r.points_display(),
                u8::from(r.stopword)
            );
        }
        out
    }
}

/// Troll share of each of the `n` most frequent words, sorted by distance
/// above the corpus-wide troll share.
pub fn word_report(corpora: &[AuthorCorpus], n: usize, lexicon: &Lexicon) -> Result<WordReport> {
    let labels: Vec<Label> = corpora
        .iter()
        .map(|c| c.label.ok_or_else(|| Error::Unlabeled(c.author_id.clone())))
        .collect::<Result<_>>()?;
    let trolls = corpora
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.is_positive())
        .map(|(c, _)| c);
    let troll_counts = word_counts(trolls);
    let all_counts = word_counts(corpora);
    if all_counts.is_empty() {
        return Err(Error::invalid("corpus contains no word tokens"));
    }
    let total_words: u64 = all_counts.values().sum();
    let troll_words: u64 = troll_counts.values().sum();
    let exact_baseline = percent(troll_words, total_words);

    let mut rows: Vec<WordReportRow> = top_n(&all_counts, n)
        .into_iter()
        .map(|(token, uses)| {
            let troll_uses = troll_counts.get(&token).copied().unwrap_or(0);
            let exact_share = percent(troll_uses, uses);
            let exact_points = exact_share - exact_baseline;
            WordReportRow {
                stopword: lexicon.is_stopword(&token),
                token,
                uses,
                troll_uses,
                troll_share: ratio_f64(&exact_share),
                points_from_random: ratio_f64(&exact_points),
                exact_share,
                exact_points,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.exact_points
            .cmp(&a.exact_points)
            .then_with(|| b.uses.cmp(&a.uses))
            .then_with(|| a.token.cmp(&b.token))
    });
    Ok(WordReport {
        rows,
        total_words,
        troll_words,
        baseline: ratio_f64(&exact_baseline),
        exact_baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn author(id: &str, text: &str, label: Option<Label>) -> AuthorCorpus {
        AuthorCorpus::new(id, vec![text.to_owned()], label)
    }

    #[test]
    fn vocabulary_order_and_ties() {
        let c = [author("x", "a a a a a b b b c c c", None)];
        let v = fit_vocabulary(&c, 2).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        let v = fit_vocabulary(&c, 10).unwrap();
        assert_eq!(v.words(), ["a", "b", "c"]);
        assert_eq!(fit_vocabulary(&c, 1).unwrap().words(), ["a"]);
        assert!(fit_vocabulary(&[author("x", "123 !!", None)], 3).is_err());
        assert!(fit_vocabulary(&c, 0).is_err());
    }

    #[test]
    fn profiles() {
        let v = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let p: AuthorProfile<f64> = author_profile(&author("x", "a a b", None), &v);
        assert_eq!(p.x, vec![2.0 / 3.0, 1.0 / 3.0]);
        let p: AuthorProfile<f64> = author_profile(&author("x", "zz yy", None), &v);
        assert_eq!(p.x, vec![0.0, 0.0]);
        let p: AuthorProfile<f64> = author_profile(&author("x", "a a", None), &v);
        assert_eq!(p.x, vec![1.0, 0.0]);
        let p: AuthorProfile<f64> = author_profile(&author("x", "!!", None), &v);
        assert_eq!(p.x, vec![0.0, 0.0]);
    }

    #[test]
    fn two_author_z_example() {
        let v = Vocabulary::new(vec!["a".into()]).unwrap();
        let p1 = AuthorProfile { x: vec![0.2f64] };
        let p2 = AuthorProfile { x: vec![0.4] };
        let m = fit_z_model(v, &[p1.clone(), p2.clone()]).unwrap();
        assert!((m.mu[0] - 0.3).abs() < 1e-15);
        assert!((m.sigma[0] - 0.1).abs() < 1e-15);
        assert!((z_score(&p1, &m).unwrap()[0] + 1.0).abs() < 1e-12);
        assert!((z_score(&p2, &m).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spread() {
        let v = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let p = AuthorProfile { x: vec![0.5, 0.25] };
        let m = fit_z_model(v.clone(), &[p.clone(), p.clone()]).unwrap();
        assert_eq!(m.sigma, vec![0.0, 0.0]);
        assert_eq!(z_score(&p, &m).unwrap(), vec![0.0, 0.0]);
        let single = fit_z_model(v, std::slice::from_ref(&p)).unwrap();
        assert_eq!(single.mu, p.x);
        assert_eq!(single.sigma, vec![0.0, 0.0]);
    }

    #[test]
    fn z_errors() {
        let v = Vocabulary::new(vec!["a".into()]).unwrap();
        assert!(fit_z_model::<f64>(v.clone(), &[]).is_err());
        let m = fit_z_model(v, &[AuthorProfile { x: vec![0.1] }]).unwrap();
        assert!(matches!(
            z_score(&AuthorProfile { x: vec![0.1, 0.2] }, &m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn model_text_round_trip() {
        let corpora = [
            author("a", "the cat sat on the mat", None),
            author("b", "a dog sat on a log", None),
            author("c", "the dog and the cat", None),
        ];
        let m: BurrowsModel<f64> = BurrowsModel::fit(&corpora, 5).unwrap();
        let back = BurrowsModel::<f64>::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(BurrowsModel::<f64>::from_text("nope").is_err());
    }

    #[test]
    fn report_requires_labels() {
        let lex = Lexicon::bundled();
        let c = [
            author("a", "x y", Some(Label::Troll)),
            author("b", "x", None),
        ];
        assert!(matches!(word_report(&c, 5, &lex), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn report_all_troll_corpus() {
        let lex = Lexicon::bundled();
        let c = [
            author("a", "x y y", Some(Label::Troll)),
            author("b", "y z", Some(Label::Troll)),
        ];
        let r = word_report(&c, 10, &lex).unwrap();
        assert_eq!(r.baseline, 100.0);
        for row in &r.rows {
            assert_eq!(row.troll_share, 100.0);
            assert_eq!(row.points_from_random, 0.0);
            assert_eq!(row.points_display(), "+0.00");
        }
    }

    #[test]
    fn report_rows_sorted_and_consistent() {
        let lex = Lexicon::bundled();
        let c = [
            author("a", "the troll troll word word", Some(Label::Troll)),
            author("b", "the plain word", Some(Label::NotTroll)),
            author("c", "the plain plain", Some(Label::NotTroll)),
        ];
        let r = word_report(&c, 10, &lex).unwrap();
        assert_eq!(r.total_words, 11);
        assert_eq!(r.troll_words, 5);
        assert_eq!(r.rows[0].token, "troll");
        assert_eq!(r.rows.last().unwrap().token, "plain");
        for w in r.rows.windows(2) {
            assert!(w[0].points_from_random >= w[1].points_from_random);
        }
        for row in &r.rows {
            assert!((row.points_from_random - (row.troll_share - r.baseline)).abs() < 1e-9);
        }
        let the = r.rows.iter().find(|x| x.token == "the").unwrap();
        assert!(the.stopword);
        assert!(r.to_tsv().contains("the\t3\t33.33\t-12.12\t1"));
    }
}
