//! Tokenization, token classes, sentence and syllable counts, stopwords and
//! a rule-based part-of-speech tagger.

use std::fmt;

use crate::assets::Lexicon;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenClass {
    Punctuation,
    Word,
    Digit,
    Special,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased surface form, never empty.
    pub text: String,
    pub class: TokenClass,
    /// Byte offset into the lowercased input.
    pub offset: usize,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.class == TokenClass::Word
    }
}

/// Splits `text` into tokens. The input is lowercased first; whitespace
/// separates chunks, alphabetic runs form one token and every other
/// character is a token by itself.
pub fn tokenize(text: &str) -> Vec<Token> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;

    let flush = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        let piece = &lower[start..end];
        tokens.push(Token {
            text: piece.to_owned(),
            class: classify_nonempty(piece),
            offset: start,
        });
    };

    for (i, ch) in lower.char_indices() {
        if ch.is_alphabetic() {
            if run_start.is_none() {
                run_start = Some(i);
            }
            continue;
        }
        if let Some(start) = run_start.take() {
            flush(&mut tokens, start, i);
        }
        if !ch.is_whitespace() {
            flush(&mut tokens, i, i + ch.len_utf8());
        }
    }
    if let Some(start) = run_start {
        flush(&mut tokens, start, lower.len());
    }
    tokens
}

fn classify_nonempty(token: &str) -> TokenClass {
    let first = token.chars().next().expect("token is non-empty");
    if first.is_ascii_punctuation() {
        TokenClass::Punctuation
    } else if first.is_ascii_alphabetic() {
        TokenClass::Word
    } else if first.is_ascii_digit() {
        TokenClass::Digit
    } else {
        TokenClass::Special
    }
}

/// Classifies a token by its first character: ASCII punctuation, then ASCII
/// letter, then ASCII digit, otherwise special.
pub fn classify_token(token: &str) -> Result<TokenClass> {
    if token.is_empty() {
        return Err(Error::invalid("cannot classify an empty token"));
    }
    Ok(classify_nonempty(token))
}

/// Number of `.`, `?` and `!` characters, at least one.
pub fn count_sentences(text: &str) -> usize {
    text.chars()
        .filter(|c| matches!(c, '.' | '?' | '!'))
        .count()
        .max(1)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate for a word token.
pub fn count_syllables(word: &str) -> Result<usize> {
    if classify_token(word)? != TokenClass::Word {
        return Err(Error::invalid(format!("`{word}` is not a word token")));
    }
    Ok(syllables_unchecked(word))
}

pub(crate) fn syllables_unchecked(word: &str) -> usize {
    let mut groups = 0usize;
    let mut in_group = false;
    let mut prev: Option<char> = None;
    let mut last: Option<char> = None;
    for c in word.chars() {
        let v = is_vowel(c.to_ascii_lowercase());
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
        prev = last;
        last = Some(c);
    }
    if last == Some('e') && prev.is_some() && prev != Some('l') && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Coarse part-of-speech inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Noun,
    PluralNoun,
    Verb,
    Modal,
    Adjective,
    Adverb,
    Pronoun,
    Determiner,
    Preposition,
    Conjunction,
    Cardinal,
    Interjection,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 13] = [
        PosTag::Noun,
        PosTag::PluralNoun,
        PosTag::Verb,
        PosTag::Modal,
        PosTag::Adjective,
        PosTag::Adverb,
        PosTag::Pronoun,
        PosTag::Determiner,
        PosTag::Preposition,
        PosTag::Conjunction,
        PosTag::Cardinal,
        PosTag::Interjection,
        PosTag::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::PluralNoun => "PLURAL_NOUN",
            PosTag::Verb => "VERB",
            PosTag::Modal => "MODAL",
            PosTag::Adjective => "ADJECTIVE",
            PosTag::Adverb => "ADVERB",
            PosTag::Pronoun => "PRONOUN",
            PosTag::Determiner => "DETERMINER",
            PosTag::Preposition => "PREPOSITION",
            PosTag::Conjunction => "CONJUNCTION",
            PosTag::Cardinal => "CARDINAL",
            PosTag::Interjection => "INTERJECTION",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        PosTag::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const SUFFIX_RULES: [(&str, PosTag); 6] = [
    ("ly", PosTag::Adverb),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("ous", PosTag::Adjective),
    ("ful", PosTag::Adjective),
    ("able", PosTag::Adjective),
];

/// Tags a single word: lexicon lookup, then suffix rules, then noun.
pub(crate) fn tag_word(lexicon: &Lexicon, word: &str) -> PosTag {
    if let Some(tag) = lexicon.pos_lookup(word) {
        return tag;
    }
    for (suffix, tag) in SUFFIX_RULES {
        if word.len() > suffix.len() && word.ends_with(suffix) {
            return tag;
        }
    }
    if word.len() > 1 && word.ends_with('s') {
        return PosTag::PluralNoun;
    }
    PosTag::Noun
}

/// Tags each word token; non-word tokens are rejected.
pub fn pos_tag(lexicon: &Lexicon, words: &[Token]) -> Result<Vec<PosTag>> {
    words
        .iter()
        .map(|t| {
            if t.is_word() {
                Ok(tag_word(lexicon, &t.text))
            } else {
                Err(Error::invalid(format!(
                    "cannot tag non-word token `{}`",
                    t.text
                )))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(texts("Don't stop!!"), ["don", "'", "t", "stop", "!", "!"]);
        assert_eq!(texts("abc"), ["abc"]);
        assert_eq!(texts("2020!"), ["2", "0", "2", "0", "!"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n").is_empty());
    }

    #[test]
    fn tokenize_unicode() {
        assert_eq!(texts("Café 🙂ok"), ["café", "🙂", "ok"]);
        let t = tokenize("élan");
        assert_eq!(t[0].class, TokenClass::Special);
    }

    #[test]
    fn classification() {
        assert_eq!(classify_token("!").unwrap(), TokenClass::Punctuation);
        assert_eq!(classify_token("stop").unwrap(), TokenClass::Word);
        assert_eq!(classify_token("7").unwrap(), TokenClass::Digit);
        assert_eq!(classify_token("🙂").unwrap(), TokenClass::Special);
        assert_eq!(classify_token("#").unwrap(), TokenClass::Punctuation);
        assert!(classify_token("").is_err());
    }

    #[test]
    fn sentences() {
        assert_eq!(count_sentences("no terminator"), 1);
        assert_eq!(count_sentences("a. b? c!"), 3);
        assert_eq!(count_sentences("wow!!!"), 3);
        assert_eq!(count_sentences(""), 1);
    }

    #[test]
    fn syllables() {
        assert_eq!(count_syllables("cat").unwrap(), 1);
        assert_eq!(count_syllables("reading").unwrap(), 2);
        assert_eq!(count_syllables("able").unwrap(), 2);
        assert_eq!(count_syllables("make").unwrap(), 1);
        assert_eq!(count_syllables("the").unwrap(), 1);
        assert_eq!(count_syllables("t").unwrap(), 1);
        assert_eq!(count_syllables("incredible").unwrap(), 4);
        assert_eq!(count_syllables("elephants").unwrap(), 3);
        assert!(count_syllables("42").is_err());
        assert!(count_syllables("!").is_err());
    }

    #[test]
    fn stopwords() {
        let lex = Lexicon::bundled();
        assert!(lex.is_stopword("the"));
        assert!(lex.is_stopword("don"));
        assert!(lex.is_stopword("THE"));
        assert!(!lex.is_stopword("stop"));
        let custom = Lexicon::builder().stopwords(["zz"]).build();
        assert!(custom.is_stopword("zz"));
        assert!(!custom.is_stopword("the"));
    }

    #[test]
    fn tagging() {
        let lex = Lexicon::bundled();
        let tag = |s: &str| pos_tag(&lex, &tokenize(s)).unwrap();
        assert_eq!(tag("quickly"), [PosTag::Adverb]);
        assert_eq!(tag("the"), [PosTag::Determiner]);
        assert_eq!(
            tag("running jumped famous cats window"),
            [
                PosTag::Verb,
                PosTag::Verb,
                PosTag::Adjective,
                PosTag::PluralNoun,
                PosTag::Noun,
            ]
        );
        assert_eq!(tag("should they"), [PosTag::Modal, PosTag::Pronoun]);
        assert!(pos_tag(&lex, &[]).unwrap().is_empty());
        assert!(pos_tag(&lex, &tokenize("!")).is_err());
    }

    #[test]
    fn tag_names_round_trip() {
        for t in PosTag::ALL {
            assert_eq!(PosTag::parse(t.name()), Some(t));
        }
        assert_eq!(PosTag::ALL.len(), 13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn reconstruct(input: &str) -> String {
            let lower = input.to_lowercase();
            let mut out = String::new();
            let mut cursor = 0;
            for t in tokenize(input) {
                let gap = &lower[cursor..t.offset];
                assert!(gap.chars().all(char::is_whitespace));
                out.push_str(gap);
                out.push_str(&t.text);
                cursor = t.offset + t.text.len();
            }
            let tail = &lower[cursor..];
            assert!(tail.chars().all(char::is_whitespace));
            out.push_str(tail);
            out
        }

        proptest! {
            #[test]
            fn round_trip(s in any::<String>()) {
                prop_assert_eq!(reconstruct(&s), s.to_lowercase());
            }

            #[test]
            fn classes_partition_tokens(s in any::<String>()) {
                let toks = tokenize(&s);
                let mut counts = [0usize; 4];
                for t in &toks {
                    prop_assert!(!t.text.is_empty());
                    prop_assert_eq!(classify_token(&t.text).unwrap(), t.class);
                    counts[t.class as usize] += 1;
                }
                prop_assert_eq!(counts.iter().sum::<usize>(), toks.len());
            }

            #[test]
            fn counts_are_positive(s in "[a-z]{1,20}", t in any::<String>()) {
                prop_assert!(count_syllables(&s).unwrap() >= 1);
                prop_assert!(count_sentences(&t) >= 1);
            }

            #[test]
            fn tags_cover_every_word(s in "[a-z ]{0,60}") {
                let lex = Lexicon::bundled();
                let words: Vec<Token> = tokenize(&s).into_iter().filter(Token::is_word).collect();
                let tags = pos_tag(&lex, &words).unwrap();
                prop_assert_eq!(tags.len(), words.len());
                prop_assert!(tags.iter().all(|t| PosTag::ALL.contains(t)));
            }
        }
    }
}
