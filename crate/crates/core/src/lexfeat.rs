//! Per-document scalar features: lexicon sentiment, sentence-pinned
//! readability, and surface counts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{count_syllables, Token, TokenKind};

#[derive(Debug, Error)]
pub enum LexError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("readability needs at least one word")]
    NoWords,
}

/// Sentiment adjustment constants.
pub const NEGATION_SCALAR: f64 = -0.74;
pub const BOOSTER_INCREMENT: f64 = 0.293;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 4;
pub const NORMALIZATION_ALPHA: f64 = 15.0;
/// How many preceding words a negator can reach back over.
pub const NEGATION_WINDOW: usize = 3;

const NEGATORS: &[&str] = &["not", "never", "no", "cannot"];
const BOOSTERS: &[&str] = &["very", "really", "extremely", "so"];

/// Token → valence in `[-4, 4]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    entries: HashMap<String, f64>,
}

impl SentimentLexicon {
    /// Parses `token TAB valence` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, LexError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexError::Lexicon {
                line: i + 1,
                message,
            };
            let (tok, val) = line
                .split_once('\t')
                .ok_or_else(|| err("expected token<TAB>valence".into()))?;
            let tok = tok.trim();
            if tok.is_empty() || tok.chars().any(char::is_uppercase) {
                return Err(err(format!(
                    "token {tok:?} must be non-empty and lowercase"
                )));
            }
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| err(format!("bad valence {val:?}")))?;
            if !v.is_finite() || !(-4.0..=4.0).contains(&v) {
                return Err(err(format!("valence {v} outside [-4, 4]")));
            }
            entries.insert(tok.to_string(), v);
        }
        if entries.is_empty() {
            return Err(LexError::EmptyLexicon);
        }
        Ok(SentimentLexicon { entries })
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self, LexError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut text = String::new();
        for (k, v) in entries {
            text.push_str(&format!("{}\t{v:?}\n", k.into()));
        }
        Self::parse(&text)
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by token, for stable serialization.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub fn to_array(self) -> [f64; 4] {
        [self.pos, self.neg, self.neu, self.compound]
    }
}

fn is_negator(word: &str) -> bool {
    NEGATORS.contains(&word) || word.ends_with("n't")
}

fn has_letters(s: &str) -> bool {
    s.chars().any(char::is_alphabetic)
}

fn is_all_caps(s: &str) -> bool {
    has_letters(s) && !s.chars().any(char::is_lowercase)
}

/// Scores a raw (unstemmed) token stream against the lexicon.
pub fn sentiment_scores(tokens: &[Token], lexicon: &SentimentLexicon) -> SentimentScores {
    let words: Vec<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.surface.as_str())
        .collect();
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let exclamations: usize = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Punct)
        .map(|t| t.surface.matches('!').count())
        .sum();
    let lettered: Vec<&&str> = words.iter().filter(|w| has_letters(w)).collect();
    let shouting = !lettered.is_empty() && lettered.iter().all(|w| is_all_caps(w));

    let mut sum = 0.0;
    let mut pos_mass = 0.0;
    let mut neg_mass = 0.0;
    let mut unmatched = 0usize;
    for (i, word) in lower.iter().enumerate() {
        let Some(mut v) = lexicon.get(word) else {
            unmatched += 1;
            continue;
        };
        if v != 0.0 {
            let sign = v.signum();
            if !shouting && is_all_caps(words[i]) {
                v += sign * CAPS_INCREMENT;
            }
            if i > 0 && BOOSTERS.contains(&lower[i - 1].as_str()) {
                v += sign * BOOSTER_INCREMENT;
            }
            let lo = i.saturating_sub(NEGATION_WINDOW);
            if lower[lo..i].iter().any(|w| is_negator(w)) {
                v *= NEGATION_SCALAR;
            }
        }
        sum += v;
        if v > 0.0 {
            pos_mass += v;
        } else if v < 0.0 {
            neg_mass += -v;
        } else {
            unmatched += 1;
        }
    }

    let amplified = if sum != 0.0 {
        sum + sum.signum() * EXCLAMATION_INCREMENT * exclamations.min(MAX_EXCLAMATIONS) as f64
    } else {
        0.0
    };
    let compound = amplified / (amplified * amplified + NORMALIZATION_ALPHA).sqrt();
    let total = pos_mass + neg_mass + unmatched as f64;
    let (pos, neg, neu) = if total > 0.0 {
        (pos_mass / total, neg_mass / total, unmatched as f64 / total)
    } else {
        (0.0, 0.0, 1.0)
    };
    SentimentScores {
        pos,
        neg,
        neu,
        compound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityScores {
    pub fk_grade: f64,
    pub reading_ease: f64,
}

/// Flesch-Kincaid grade and Flesch reading ease with the sentence count
/// fixed at one.
pub fn readability(num_words: usize, num_syllables: usize) -> Result<ReadabilityScores, LexError> {
    if num_words == 0 {
        return Err(LexError::NoWords);
    }
    let words = num_words as f64;
    let per_word = num_syllables as f64 / words;
    Ok(ReadabilityScores {
        fk_grade: 0.39 * words + 11.8 * per_word - 15.59,
        reading_ease: 206.835 - 1.015 * words - 84.6 * per_word,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceFeatures {
    pub hashtags: usize,
    pub mentions: usize,
    pub retweets: usize,
    pub urls: usize,
    pub num_chars: usize,
    pub num_words: usize,
    pub num_syllables: usize,
}

impl SurfaceFeatures {
    /// `[4 counts, 4 binaries, chars, words, syllables]`.
    pub fn to_array(self) -> [f64; 11] {
        let flag = |n: usize| if n > 0 { 1.0 } else { 0.0 };
        [
            self.hashtags as f64,
            self.mentions as f64,
            self.retweets as f64,
            self.urls as f64,
            flag(self.hashtags),
            flag(self.mentions),
            flag(self.retweets),
            flag(self.urls),
            self.num_chars as f64,
            self.num_words as f64,
            self.num_syllables as f64,
        ]
    }

    pub fn binaries(self) -> [bool; 4] {
        [
            self.hashtags > 0,
            self.mentions > 0,
            self.retweets > 0,
            self.urls > 0,
        ]
    }
}

pub fn surface_features(text: &str, tokens: &[Token]) -> SurfaceFeatures {
    let mut f = SurfaceFeatures {
        num_chars: text.chars().count(),
        ..Default::default()
    };
    for t in tokens {
        match t.kind {
            TokenKind::Hashtag => {
                f.hashtags += 1;
                f.num_words += 1;
                f.num_syllables += count_syllables(&t.surface[1..]);
            }
            TokenKind::Word => {
                f.num_words += 1;
                f.num_syllables += count_syllables(&t.surface);
            }
            TokenKind::Mention => f.mentions += 1,
            TokenKind::RetweetMarker => f.retweets += 1,
            TokenKind::Url => f.urls += 1,
            TokenKind::Punct | TokenKind::Other => {}
        }
    }
    f
}

/// All seventeen scalar features for one document:
/// `[sentiment (pos, neg, neu, compound) | readability (fk, ease) | surface (11)]`.
pub fn scalar_features(text: &str, tokens: &[Token], lexicon: &SentimentLexicon) -> [f64; 17] {
    let s = sentiment_scores(tokens, lexicon).to_array();
    let surface = surface_features(text, tokens);
    // Empty tweets have no words; score them as a one-word, one-syllable text.
    let r = readability(surface.num_words.max(1), surface.num_syllables.max(1))
        .expect("word count clamped to >= 1");
    let mut out = [0.0; 17];
    out[..4].copy_from_slice(&s);
    out[4] = r.fk_grade;
    out[5] = r.reading_ease;
    out[6..].copy_from_slice(&surface.to_array());
    out
}

/// Column names for [`scalar_features`], in order.
pub const SCALAR_NAMES: [&str; 17] = [
    "sentiment_pos",
    "sentiment_neg",
    "sentiment_neu",
    "sentiment_compound",
    "fk_grade",
    "reading_ease",
    "hashtag_count",
    "mention_count",
    "retweet_count",
    "url_count",
    "has_hashtag",
    "has_mention",
    "has_retweet",
    "has_url",
    "num_chars",
    "num_words",
    "num_syllables",
];
