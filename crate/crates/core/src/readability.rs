//! Grade-level readability formulas computed from per-post counts.
//!
//! Every formula needs at least one word; with `words == 0` the functions
//! return `None`, which downstream aggregation treats as a missing value.

use std::collections::BTreeMap;

use crate::assets::Lexicon;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tokenizer::{self, Token};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TextStats {
    /// Non-whitespace characters.
    pub characters: usize,
    /// Alphabetic characters.
    pub letters: usize,
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Words with three or more syllables.
    pub polysyllables: usize,
    /// Words with one or two syllables.
    pub brachysyllables: usize,
    /// Words missing from the easy-word list.
    pub difficult_words: usize,
    /// Words that are both polysyllabic and difficult.
    pub complex_words: usize,
}

impl TextStats {
    pub fn from_text(text: &str, lexicon: &Lexicon) -> Self {
        Self::from_tokens(text, &tokenizer::tokenize(text), lexicon)
    }

    /// Builds stats from an already tokenized post.
    pub fn from_tokens(text: &str, tokens: &[Token], lexicon: &Lexicon) -> Self {
        let mut s = TextStats {
            sentences: tokenizer::count_sentences(text),
            ..Default::default()
        };
        for c in text.chars() {
            if !c.is_whitespace() {
                s.characters += 1;
            }
            if c.is_alphabetic() {
                s.letters += 1;
            }
        }
        for t in tokens.iter().filter(|t| t.is_word()) {
            let syl = tokenizer::syllables_unchecked(&t.text);
            let poly = syl >= 3;
            let difficult = !lexicon.is_easy(&t.text);
            s.words += 1;
            s.syllables += syl;
            if poly {
                s.polysyllables += 1;
            } else {
                s.brachysyllables += 1;
            }
            if difficult {
                s.difficult_words += 1;
                if poly {
                    s.complex_words += 1;
                }
            }
        }
        s
    }
}

/// Convenience wrapper over [`TextStats::from_text`].
pub fn text_stats(text: &str, lexicon: &Lexicon) -> TextStats {
    TextStats::from_text(text, lexicon)
}

struct Ratios<T> {
    words: T,
    sentences: T,
}

fn ratios<T: Real>(s: &TextStats) -> Option<Ratios<T>> {
    (s.words > 0).then(|| Ratios {
        words: T::from_count(s.words),
        sentences: T::from_count(s.sentences.max(1)),
    })
}

pub fn dale_chall<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    let difficult_share = T::from_count(s.difficult_words) / r.words;
    let penalty = if difficult_share > T::lit(0.05) {
        T::lit(3.6365)
    } else {
        T::zero()
    };
    Some(
        T::lit(0.1579) * (difficult_share * T::lit(100.0))
            + T::lit(0.0497) * (r.words / r.sentences)
            + penalty,
    )
}

pub fn ari<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    Some(
        T::lit(4.71) * (T::from_count(s.characters) / r.words)
            + T::lit(0.5) * (r.words / r.sentences)
            - T::lit(21.43),
    )
}

pub fn smog<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    let radicand = T::from_count(s.polysyllables) * (T::lit(30.0) / r.sentences);
    Some(T::lit(1.043) * radicand.sqrt() + T::lit(3.1291))
}

pub fn gunning_fog<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    Some(
        T::lit(0.4)
            * (r.words / r.sentences + T::lit(100.0) * (T::from_count(s.complex_words) / r.words)),
    )
}

/// Per-word letter and sentence ratios, without the usual per-100-word
/// scaling.
pub fn coleman_liau<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    Some(
        T::lit(0.0588) * (T::from_count(s.letters) / r.words)
            - T::lit(0.2996) * (r.sentences / r.words)
            - T::lit(15.8),
    )
}

pub fn flesch_kincaid<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    Some(
        T::lit(0.39) * (r.words / r.sentences)
            + T::lit(11.8) * (T::from_count(s.syllables) / r.words)
            - T::lit(15.59),
    )
}

pub fn linsear_write<T: Real>(s: &TextStats) -> Option<T> {
    let r = ratios::<T>(s)?;
    let provisional = (T::lit(2.0) * T::from_count(s.brachysyllables)
        + T::lit(3.0) * T::from_count(s.polysyllables))
        / r.sentences;
    let half = provisional / T::lit(2.0);
    Some(if provisional > T::lit(20.0) {
        half - T::one()
    } else {
        half
    })
}

/// Mode of the rounded scores (half away from zero); ties go to the
/// smallest value.
pub fn text_standard<T: Real>(scores: &[T; 7]) -> Result<i64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for s in scores {
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("readability score {s}")));
        }
        let rounded = s.round().to_i64().ok_or_else(|| {
            Error::NonFinite(format!("readability score {s} out of integer range"))
        })?;
        *counts.entry(rounded).or_default() += 1;
    }
    let mut best = (i64::MIN, 0usize);
    for (value, count) in counts {
        if count > best.1 {
            best = (value, count);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadabilityScores<T> {
    pub dcrf: T,
    pub ari: T,
    pub smog: T,
    pub gfi: T,
    pub cli: T,
    pub fkgl: T,
    pub lw: T,
    pub text_standard: i64,
}

impl<T: Real> ReadabilityScores<T> {
    pub const NAMES: [&'static str; 8] = [
        "dcrf",
        "ari",
        "smog",
        "gfi",
        "cli",
        "fkgl",
        "lw",
        "text_standard",
    ];

    /// All eight metrics, or `None` for a post without words.
    pub fn compute(s: &TextStats) -> Option<Self> {
        let seven = [
            dale_chall(s)?,
            ari(s)?,
            smog(s)?,
            gunning_fog(s)?,
            coleman_liau(s)?,
            flesch_kincaid(s)?,
            linsear_write(s)?,
        ];
        let standard = text_standard(&seven).ok()?;
        Some(ReadabilityScores {
            dcrf: seven[0],
            ari: seven[1],
            smog: seven[2],
            gfi: seven[3],
            cli: seven[4],
            fkgl: seven[5],
            lw: seven[6],
            text_standard: standard,
        })
    }

    /// Values in [`Self::NAMES`] order.
    pub fn to_array(&self) -> [T; 8] {
        [
            self.dcrf,
            self.ari,
            self.smog,
            self.gfi,
            self.cli,
            self.fkgl,
            self.lw,
            T::lit(self.text_standard as f64),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> TextStats {
        TextStats {
            sentences: 1,
            ..Default::default()
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn counts_from_text() {
        let lex = Lexicon::bundled();
        let s = text_stats("Cats purr.", &lex);
        assert_eq!(s.words, 2);
        assert_eq!(s.sentences, 1);
        assert_eq!(s.letters, 8);
        assert_eq!(s.syllables, 2);
        assert_eq!(s.polysyllables, 0);
        assert_eq!(s.characters, 9);
        let e = text_stats("", &lex);
        assert_eq!((e.words, e.sentences), (0, 1));
        let p = text_stats("Incredible complicated elephants.", &lex);
        assert_eq!(p.polysyllables, 3);
        assert!(p.complex_words <= p.polysyllables.min(p.difficult_words));
    }

    #[test]
    fn dale_chall_examples() {
        let s = TextStats {
            words: 100,
            sentences: 5,
            difficult_words: 10,
            ..stats()
        };
        assert!(close(dale_chall::<f64>(&s).unwrap(), 6.2095));
        let s = TextStats {
            words: 100,
            sentences: 10,
            difficult_words: 0,
            ..stats()
        };
        assert!(close(dale_chall::<f64>(&s).unwrap(), 0.497));
        let s = TextStats {
            words: 100,
            sentences: 10,
            difficult_words: 5,
            ..stats()
        };
        assert!(close(dale_chall::<f64>(&s).unwrap(), 0.1579 * 5.0 + 0.497));
        assert!(dale_chall::<f64>(&stats()).is_none());
    }

    #[test]
    fn ari_examples() {
        let s = TextStats {
            characters: 50,
            words: 10,
            sentences: 2,
            ..stats()
        };
        assert!(close(ari::<f64>(&s).unwrap(), 4.62));
        let s = TextStats {
            characters: 7,
            words: 7,
            sentences: 7,
            ..stats()
        };
        assert!(close(ari::<f64>(&s).unwrap(), -16.22));
    }

    #[test]
    fn smog_examples() {
        let s = TextStats {
            words: 50,
            polysyllables: 6,
            sentences: 30,
            ..stats()
        };
        assert!((smog::<f64>(&s).unwrap() - 5.6839).abs() < 1e-4);
        let s = TextStats {
            words: 50,
            polysyllables: 0,
            sentences: 30,
            ..stats()
        };
        assert!(close(smog::<f64>(&s).unwrap(), 3.1291));
        let s = TextStats {
            words: 50,
            polysyllables: 30,
            sentences: 30,
            ..stats()
        };
        assert!((smog::<f64>(&s).unwrap() - 8.8418).abs() < 1e-4);
    }

    #[test]
    fn fog_examples() {
        let s = TextStats {
            words: 100,
            sentences: 5,
            complex_words: 10,
            ..stats()
        };
        assert!(close(gunning_fog::<f64>(&s).unwrap(), 12.0));
        let s = TextStats {
            words: 4,
            sentences: 4,
            ..stats()
        };
        assert!(close(gunning_fog::<f64>(&s).unwrap(), 0.4));
    }

    #[test]
    fn coleman_liau_examples() {
        let s = TextStats {
            letters: 500,
            words: 100,
            sentences: 4,
            ..stats()
        };
        assert!(close(coleman_liau::<f64>(&s).unwrap(), -15.517984));
        let s = TextStats {
            letters: 0,
            words: 3,
            sentences: 2,
            ..stats()
        };
        assert!(close(
            coleman_liau::<f64>(&s).unwrap(),
            -0.2996 * 2.0 / 3.0 - 15.8
        ));
    }

    #[test]
    fn flesch_kincaid_examples() {
        let s = TextStats {
            words: 10,
            sentences: 2,
            syllables: 13,
            ..stats()
        };
        assert!(close(flesch_kincaid::<f64>(&s).unwrap(), 1.70));
        let s = TextStats {
            words: 1,
            sentences: 1,
            syllables: 1,
            ..stats()
        };
        assert!(close(flesch_kincaid::<f64>(&s).unwrap(), -3.40));
    }

    #[test]
    fn linsear_examples() {
        let s = TextStats {
            words: 20,
            brachysyllables: 18,
            polysyllables: 2,
            sentences: 2,
            ..stats()
        };
        assert!(close(linsear_write::<f64>(&s).unwrap(), 9.5));
        let s = TextStats {
            words: 20,
            brachysyllables: 20,
            sentences: 2,
            ..stats()
        };
        assert!(close(linsear_write::<f64>(&s).unwrap(), 10.0));
        let s = TextStats {
            words: 3,
            ..stats()
        };
        assert!(close(linsear_write::<f64>(&s).unwrap(), 0.0));
    }

    #[test]
    fn text_standard_examples() {
        let f = |v: [f64; 7]| text_standard(&v).unwrap();
        assert_eq!(f([5.0, 5.0, 7.0, 3.0, 5.0, 8.0, 5.0]), 5);
        assert_eq!(f([4.0, 4.0, 6.0, 6.0, 2.0, 9.0, 1.0]), 4);
        assert_eq!(f([3.0; 7]), 3);
        assert_eq!(f([2.5, 2.6, -2.5, -3.0, 0.0, 1.0, 9.0]), -3);
        assert!(text_standard(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let s = TextStats {
            words: 10,
            sentences: 2,
            syllables: 13,
            ..stats()
        };
        assert!((flesch_kincaid::<f32>(&s).unwrap() - 1.70).abs() < 1e-4);
    }

    #[test]
    fn zero_word_post_has_no_scores() {
        assert!(ReadabilityScores::<f64>::compute(&stats()).is_none());
    }
}
