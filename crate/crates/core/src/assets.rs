//! Word lists: stopwords, the closed-class part-of-speech lexicon and the
//! easy-word list used by the readability formulas.
//!
//! The bundled copies are compiled in; [`Lexicon::from_dir`] loads
//! replacements from a directory holding the same three files.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tokenizer::PosTag;

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const POS_LEXICON_FILE: &str = "pos_lexicon.tsv";
pub const EASY_WORDS_FILE: &str = "easy_words.txt";

const BUNDLED_STOPWORDS: &str = include_str!("../assets/stopwords.txt");
const BUNDLED_POS_LEXICON: &str = include_str!("../assets/pos_lexicon.tsv");
const BUNDLED_EASY_WORDS: &str = include_str!("../assets/easy_words.txt");

/// SHA-256 of the bundled stopword list.
pub const STOPWORDS_SHA256: &str =
    "019f104ba2ed07436d05f9cdd3383034ad66014edc27fc651f837e1a038b6451";

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    stopwords: HashSet<String>,
    pos: HashMap<String, PosTag>,
    easy_words: HashSet<String>,
}

fn word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn parse_pos_lexicon(text: &str, origin: &Path) -> Result<HashMap<String, PosTag>> {
    let mut out = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message,
        };
        let (word, tag) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected word<TAB>TAG".into()))?;
        let tag = PosTag::parse(tag.trim())
            .ok_or_else(|| parse_err(format!("unknown tag `{}`", tag.trim())))?;
        out.insert(word.trim().to_lowercase(), tag);
    }
    Ok(out)
}

fn read_asset(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingAsset(path));
    }
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

impl Lexicon {
    pub fn bundled() -> Self {
        Lexicon {
            stopwords: word_list(BUNDLED_STOPWORDS),
            pos: parse_pos_lexicon(BUNDLED_POS_LEXICON, Path::new(POS_LEXICON_FILE))
                .expect("bundled lexicon parses"),
            easy_words: word_list(BUNDLED_EASY_WORDS),
        }
    }

    /// Loads all three lists from `dir`. Every file must be present.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let stop = read_asset(dir, STOPWORDS_FILE)?;
        let pos = read_asset(dir, POS_LEXICON_FILE)?;
        let easy = read_asset(dir, EASY_WORDS_FILE)?;
        Ok(Lexicon {
            stopwords: word_list(&stop),
            pos: parse_pos_lexicon(&pos, &dir.join(POS_LEXICON_FILE))?,
            easy_words: word_list(&easy),
        })
    }

    /// Starts from empty lists.
    pub fn builder() -> LexiconBuilder {
        LexiconBuilder::default()
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        if self.stopwords.contains(word) {
            return true;
        }
        word.chars().any(char::is_uppercase) && self.stopwords.contains(&word.to_lowercase())
    }

    pub fn is_easy(&self, word: &str) -> bool {
        self.easy_words.contains(word)
    }

    pub fn pos_lookup(&self, word: &str) -> Option<PosTag> {
        self.pos.get(word).copied()
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn easy_word_count(&self) -> usize {
        self.easy_words.len()
    }
}

#[derive(Debug, Default)]
pub struct LexiconBuilder {
    inner: Lexicon,
}

impl LexiconBuilder {
    pub fn stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.inner.stopwords = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        self
    }

    pub fn easy_words<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.inner.easy_words = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        self
    }

    pub fn pos_entries<I, S>(mut self, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, PosTag)>,
        S: AsRef<str>,
    {
        self.inner.pos = entries
            .into_iter()
            .map(|(w, t)| (w.as_ref().to_lowercase(), t))
            .collect();
        self
    }

    pub fn build(self) -> Lexicon {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn bundled_sizes() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.stopword_count(), 179);
        assert!(lex.easy_word_count() > 2900);
        assert!(lex.is_easy("able"));
    }

    #[test]
    fn stopword_checksum() {
        let digest = Sha256::digest(BUNDLED_STOPWORDS.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, STOPWORDS_SHA256);
    }

    #[test]
    fn missing_asset_names_path() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(STOPWORDS_FILE), "the\n").unwrap();
        fs::write(dir.path().join(POS_LEXICON_FILE), "the\tDETERMINER\n").unwrap();
        match Lexicon::from_dir(dir.path()) {
            Err(Error::MissingAsset(p)) => assert!(p.ends_with(EASY_WORDS_FILE)),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(dir.path().join(EASY_WORDS_FILE), "cat\n").unwrap();
        let lex = Lexicon::from_dir(dir.path()).unwrap();
        assert!(lex.is_easy("cat"));
        assert_eq!(lex.pos_lookup("the"), Some(PosTag::Determiner));
    }

    #[test]
    fn bad_lexicon_line() {
        let err = parse_pos_lexicon("word\tNOPE\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
