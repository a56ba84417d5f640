//! Lexical substrate shared by every feature family: tokenization, Porter
//! stemming, syllable counts and the normalized token streams fed to the
//! n-gram vectorizers and the POS tagger.

mod porter;
mod syllables;
mod tokenize;

pub use porter::porter_stem;
pub use syllables::count_syllables;
pub use tokenize::{tokenize, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("cannot stem an empty word")]
    EmptyWord,
}

/// Placeholder substituted for every URL.
pub const URL_PLACEHOLDER: &str = "URLHERE";
/// Placeholder substituted for every `@mention`.
pub const MENTION_PLACEHOLDER: &str = "MENTIONHERE";

/// Lowercased, unstemmed token stream: the input to POS tagging.
///
/// URLs and mentions become placeholders, retweet markers and punctuation are
/// dropped, hashtags lose their `#`.
pub fn normalize_tokens(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .filter_map(|t| match t.kind {
            TokenKind::Url => Some(URL_PLACEHOLDER.to_string()),
            TokenKind::Mention => Some(MENTION_PLACEHOLDER.to_string()),
            TokenKind::RetweetMarker | TokenKind::Punct => None,
            TokenKind::Hashtag => Some(t.surface[1..].to_lowercase()),
            TokenKind::Word | TokenKind::Other => Some(t.surface.to_lowercase()),
        })
        .collect()
}

/// Stems a normalized stream; placeholders and symbol-only tokens pass through.
pub fn stem_tokens(normalized: &[String]) -> Vec<String> {
    normalized
        .iter()
        .map(|w| {
            if w == URL_PLACEHOLDER
                || w == MENTION_PLACEHOLDER
                || !w.chars().any(char::is_alphanumeric)
            {
                w.clone()
            } else {
                porter_stem(w).unwrap_or_else(|_| w.clone())
            }
        })
        .collect()
}

/// Lowercase, tokenize, substitute placeholders, strip markers and
/// punctuation, and stem: the word stream behind the word n-gram features.
pub fn preprocess(text: &str) -> Vec<String> {
    stem_tokens(&normalize_tokens(&tokenize(text)))
}
