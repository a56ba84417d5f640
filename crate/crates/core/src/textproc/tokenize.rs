//! Tweet-aware tokenizer.
//!
//! URLs, `@mentions`, `#hashtags` and a retweet `RT` marker survive as single
//! tokens. Everything else is split on whitespace, with leading and trailing
//! punctuation broken off one character at a time. Apostrophes inside a word
//! stay in the word. No input character is ever dropped.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Url,
    Mention,
    Hashtag,
    RetweetMarker,
    Punct,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    fn new(surface: &str, kind: TokenKind) -> Token {
        Token {
            surface: surface.to_string(),
            kind,
        }
    }
}

pub(crate) fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '“' | '”' | '‘' | '’' | '«' | '»' | '—' | '–' | '¡' | '¿' | '·'
        )
}

fn is_handle_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Length in bytes of a URL starting at `s`, or `None`.
fn url_len(s: &str) -> Option<usize> {
    let lower_prefix: String = s.chars().take(12).flat_map(char::to_lowercase).collect();
    let has_scheme = {
        let scheme_end = s.find("://");
        match scheme_end {
            Some(end) if end > 0 => s[..end].chars().all(|c| c.is_ascii_alphabetic()),
            _ => false,
        }
    };
    if !has_scheme && !lower_prefix.starts_with("www.") {
        return None;
    }
    // Trailing punctuation belongs to the sentence, not the link.
    let trimmed = s.trim_end_matches(|c: char| is_punct(c) && c != '/');
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.len())
    }
}

/// `@name` / `#tag` prefix length, if present. Hashtags need at least one letter.
fn handle_len(s: &str, sigil: char) -> Option<usize> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, c)) if c == sigil => {}
        _ => return None,
    }
    let body_end = s[1..]
        .char_indices()
        .find(|&(_, c)| !is_handle_char(c))
        .map(|(i, _)| i + 1)
        .unwrap_or(s.len());
    if body_end == 1 {
        return None;
    }
    if sigil == '#' && !s[1..body_end].chars().any(char::is_alphabetic) {
        return None;
    }
    Some(body_end)
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<Token>) {
    let mut rest = chunk;
    while !rest.is_empty() {
        if let Some(n) = url_len(rest) {
            out.push(Token::new(&rest[..n], TokenKind::Url));
            rest = &rest[n..];
            continue;
        }
        if let Some(n) = handle_len(rest, '@') {
            out.push(Token::new(&rest[..n], TokenKind::Mention));
            rest = &rest[n..];
            continue;
        }
        if let Some(n) = handle_len(rest, '#') {
            out.push(Token::new(&rest[..n], TokenKind::Hashtag));
            rest = &rest[n..];
            continue;
        }
        let first = rest.chars().next().unwrap_or_default();
        if is_punct(first) {
            let n = first.len_utf8();
            out.push(Token::new(&rest[..n], TokenKind::Punct));
            rest = &rest[n..];
            continue;
        }
        // Core of the chunk up to trailing punctuation.
        let core = rest.trim_end_matches(is_punct);
        let kind = if core.chars().any(char::is_alphanumeric) {
            TokenKind::Word
        } else {
            TokenKind::Other
        };
        out.push(Token::new(core, kind));
        for (i, c) in rest[core.len()..].char_indices() {
            let start = core.len() + i;
            out.push(Token::new(
                &rest[start..start + c.len_utf8()],
                TokenKind::Punct,
            ));
        }
        rest = "";
    }
}

/// Splits a tweet into typed tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut out);
    }
    mark_retweets(&mut out);
    out
}

/// An `RT` word becomes a retweet marker when nothing but punctuation precedes
/// it, or when it directly introduces a mention (`... RT @user`).
fn mark_retweets(tokens: &mut [Token]) {
    let mut seen_content = false;
    for i in 0..tokens.len() {
        let tok = &tokens[i];
        if tok.kind == TokenKind::Word && tok.surface.eq_ignore_ascii_case("rt") {
            let next_is_mention = tokens[i + 1..]
                .iter()
                .find(|t| t.kind != TokenKind::Punct)
                .is_some_and(|t| t.kind == TokenKind::Mention);
            if !seen_content || next_is_mention {
                tokens[i].kind = TokenKind::RetweetMarker;
                continue;
            }
        }
        if tokens[i].kind != TokenKind::Punct {
            seen_content = true;
        }
    }
}
