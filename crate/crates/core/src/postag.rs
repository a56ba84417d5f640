//! Greedy averaged-perceptron Penn POS tagger.
//!
//! Left-to-right decoding with the two previous predicted tags as context.
//! Frequent unambiguous words skip the model through a tag dictionary.
//! Models serialize to a flat, sorted text layout:
//!
//! ```text
//! hsol-postagger
//! version 1
//! tagset <n>
//! <tag>                        (n lines, sorted)
//! tagdict <n>
//! <word>\t<tag>                (n lines, sorted by word)
//! weights <n>
//! <feature>\t<tag>\t<weight>   (n lines, sorted by feature then tag; zero weights omitted)
//! end
//! ```
//!
//! Weights are written with Rust's shortest round-trip float formatting, so
//! saving and loading is exact.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &str = "hsol-postagger";

/// A word enters the tag dictionary when seen at least this many times...
pub const TAGDICT_MIN_COUNT: usize = 20;
/// ...with at least this share of its occurrences under one tag.
pub const TAGDICT_MIN_PURITY: f64 = 0.97;

const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

/// Penn Treebank tag inventory.
pub const PENN_TAGS: &[&str] = &[
    "#", "$", "''", "(", ")", ",", ".", ":", "``", "-LRB-", "-RRB-", "CC", "CD", "DT", "EX", "FW",
    "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNP", "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$",
    "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
    "WP", "WP$", "WRB",
];

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("training corpus has no tagged tokens")]
    EmptyCorpus,
    #[error("unknown tag `{0}` (not a Penn Treebank tag)")]
    UnknownTag(String),
    #[error("epochs must be positive")]
    NoEpochs,
    #[error("model format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model file truncated: {0}")]
    Truncated(String),
    #[error("malformed model file at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot serialize `{0}`: tabs and newlines are not allowed in model keys")]
    BadKey(String),
    #[error("line {line}: expected `word<TAB>tag`")]
    Conll { line: usize },
}

/// Dense-per-feature averaged perceptron over `n_classes` classes.
///
/// Averages are taken over the weight table after every call to
/// [`AveragedPerceptron::update`], maintained lazily with per-entry timestamps.
#[derive(Clone, Debug)]
pub struct AveragedPerceptron {
    n_classes: usize,
    weights: HashMap<String, Vec<f64>>,
    totals: HashMap<String, Vec<f64>>,
    stamps: HashMap<String, Vec<u64>>,
    instances: u64,
}

impl AveragedPerceptron {
    pub fn new(n_classes: usize) -> Self {
        AveragedPerceptron {
            n_classes,
            weights: HashMap::new(),
            totals: HashMap::new(),
            stamps: HashMap::new(),
            instances: 0,
        }
    }

    pub fn instances(&self) -> u64 {
        self.instances
    }

    pub fn weight(&self, feature: &str, class: usize) -> f64 {
        self.weights.get(feature).map_or(0.0, |w| w[class])
    }

    pub fn scores<S: AsRef<str>>(&self, features: &[S]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        for f in features {
            if let Some(w) = self.weights.get(f.as_ref()) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        scores
    }

    /// Highest-scoring class; ties go to the lowest class index.
    pub fn predict<S: AsRef<str>>(&self, features: &[S]) -> usize {
        argmax_first(&self.scores(features))
    }

    /// Records one training instance; moves weights only on a mistake.
    pub fn update<S: AsRef<str>>(&mut self, truth: usize, guess: usize, features: &[S]) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        for f in features {
            self.bump(f.as_ref(), truth, 1.0);
            self.bump(f.as_ref(), guess, -1.0);
        }
    }

    fn bump(&mut self, feature: &str, class: usize, delta: f64) {
        let k = self.n_classes;
        let now = self.instances;
        let w = self
            .weights
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; k]);
        let t = self
            .totals
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; k]);
        let s = self
            .stamps
            .entry(feature.to_string())
            .or_insert_with(|| vec![0; k]);
        let old = w[class];
        // totals covers instances 1..=stamp; fill stamp+1..now-1 with the old
        // value, then count instance `now` at the new value.
        t[class] += (now as f64 - s[class] as f64 - 1.0) * old;
        w[class] = old + delta;
        t[class] += w[class];
        s[class] = now;
    }

    /// Consumes the learner and returns the averaged weight table.
    pub fn averaged(self) -> HashMap<String, Vec<f64>> {
        let n = self.instances.max(1) as f64;
        let mut out = HashMap::with_capacity(self.weights.len());
        for (feat, w) in self.weights {
            let t = &self.totals[&feat];
            let s = &self.stamps[&feat];
            let avg: Vec<f64> = (0..self.n_classes)
                .map(|c| (t[c] + (self.instances - s[c]) as f64 * w[c]) / n)
                .collect();
            out.insert(feat, avg);
        }
        out
    }
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// A frozen tagger.
#[derive(Clone, Debug, PartialEq)]
pub struct TagModel {
    tagset: Vec<String>,
    tagdict: BTreeMap<String, usize>,
    weights: HashMap<String, Vec<f64>>,
}

fn suffix(word: &str, n: usize) -> &str {
    let start = word.char_indices().rev().nth(n - 1).map_or(0, |(i, _)| i);
    &word[start..]
}

fn prefix(word: &str, n: usize) -> &str {
    let end = word.char_indices().nth(n).map_or(word.len(), |(i, _)| i);
    &word[..end]
}

fn shape(word: &str) -> String {
    let mut s = String::new();
    if word.chars().any(|c| c.is_ascii_digit()) {
        s.push('d');
    }
    if word.chars().skip(1).any(|c| c == '-') {
        s.push('h');
    }
    if word.contains('\'') {
        s.push('q');
    }
    if word.chars().all(char::is_alphabetic) {
        s.push('a');
    }
    if s.is_empty() {
        s.push('o');
    }
    s
}

/// Feature strings for position `i` of `words` given the two previous tags.
pub fn features(words: &[String], i: usize, prev: &str, prev2: &str) -> Vec<String> {
    let at = |j: isize| -> &str {
        let idx = i as isize + j;
        if idx < 0 {
            START[(-idx - 1) as usize]
        } else if idx as usize >= words.len() {
            END[(idx as usize - words.len()).min(1)]
        } else {
            &words[idx as usize]
        }
    };
    let w = at(0);
    vec![
        "bias".to_string(),
        format!("i suffix {}", suffix(w, 3)),
        format!("i pref1 {}", prefix(w, 1)),
        format!("i pref3 {}", prefix(w, 3)),
        format!("i shape {}", shape(w)),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {w}"),
        format!("i-1 tag+i word {prev} {w}"),
        format!("i-1 word {}", at(-1)),
        format!("i-1 suffix {}", suffix(at(-1), 3)),
        format!("i-2 word {}", at(-2)),
        format!("i+1 word {}", at(1)),
        format!("i+1 suffix {}", suffix(at(1), 3)),
        format!("i+2 word {}", at(2)),
    ]
}

/// A tagged sentence: `(word, tag)` pairs.
pub type TaggedSentence = Vec<(String, String)>;

/// Trains a tagger with per-epoch seeded shuffling.
pub fn train_tagger(
    sentences: &[TaggedSentence],
    epochs: usize,
    seed: u64,
) -> Result<TagModel, TaggerError> {
    if epochs == 0 {
        return Err(TaggerError::NoEpochs);
    }
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(TaggerError::EmptyCorpus);
    }
    let mut tags: Vec<String> = Vec::new();
    for (_, t) in sentences.iter().flatten() {
        if !PENN_TAGS.contains(&t.as_str()) {
            return Err(TaggerError::UnknownTag(t.clone()));
        }
        tags.push(t.clone());
    }
    tags.sort();
    tags.dedup();
    let tag_index: HashMap<&str, usize> = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for (w, t) in sentences.iter().flatten() {
        *counts
            .entry(w.as_str())
            .or_default()
            .entry(t.as_str())
            .or_default() += 1;
    }
    let mut tagdict = BTreeMap::new();
    for (word, by_tag) in &counts {
        let n: usize = by_tag.values().sum();
        // Ties on the mode resolve to the lexicographically smallest tag.
        let (tag, mode) =
            by_tag.iter().fold(
                ("", 0usize),
                |best, (t, c)| if *c > best.1 { (*t, *c) } else { best },
            );
        if n >= TAGDICT_MIN_COUNT && mode as f64 / n as f64 >= TAGDICT_MIN_PURITY {
            tagdict.insert(word.to_string(), tag_index[tag]);
        }
    }

    let mut model = AveragedPerceptron::new(tags.len());
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let sent = &sentences[si];
            let words: Vec<String> = sent.iter().map(|(w, _)| w.clone()).collect();
            let mut prev = START[0].to_string();
            let mut prev2 = START[1].to_string();
            for (i, (word, truth)) in sent.iter().enumerate() {
                let guess = match tagdict.get(word.as_str()) {
                    Some(&g) => g,
                    None => {
                        let feats = features(&words, i, &prev, &prev2);
                        let guess = model.predict(&feats);
                        model.update(tag_index[truth.as_str()], guess, &feats);
                        guess
                    }
                };
                prev2 = std::mem::replace(&mut prev, tags[guess].clone());
            }
        }
    }
    let weights = model
        .averaged()
        .into_iter()
        .filter(|(_, w)| w.iter().any(|&x| x != 0.0))
        .collect();
    Ok(TagModel {
        tagset: tags,
        tagdict,
        weights,
    })
}

impl TagModel {
    pub fn tagset(&self) -> &[String] {
        &self.tagset
    }

    pub fn tagdict_entry(&self, word: &str) -> Option<&str> {
        self.tagdict.get(word).map(|&i| self.tagset[i].as_str())
    }

    pub fn tagdict_len(&self) -> usize {
        self.tagdict.len()
    }

    pub fn weight(&self, feature: &str, tag: &str) -> f64 {
        match (self.weights.get(feature), self.tag_id(tag)) {
            (Some(w), Some(t)) => w[t],
            _ => 0.0,
        }
    }

    /// Overrides one weight. Returns `false` if `tag` is not in the tagset.
    pub fn set_weight(&mut self, feature: &str, tag: &str, value: f64) -> bool {
        let Some(t) = self.tag_id(tag) else {
            return false;
        };
        let k = self.tagset.len();
        self.weights
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; k])[t] = value;
        true
    }

    fn tag_id(&self, tag: &str) -> Option<usize> {
        self.tagset.binary_search_by(|t| t.as_str().cmp(tag)).ok()
    }

    fn predict_id(&self, feats: &[String]) -> usize {
        let mut scores = vec![0.0; self.tagset.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        argmax_first(&scores)
    }

    /// Tags a token sequence. One tag per token.
    pub fn tag(&self, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut prev = START[0];
        let mut prev2 = START[1];
        for i in 0..tokens.len() {
            let id = match self.tagdict.get(&tokens[i]) {
                Some(&t) => t,
                None => self.predict_id(&features(tokens, i, prev, prev2)),
            };
            prev2 = prev;
            prev = &self.tagset[id];
            out.push(self.tagset[id].clone());
        }
        out
    }

    pub fn save(&self) -> Result<Vec<u8>, TaggerError> {
        let check = |s: &str| {
            if s.contains(['\t', '\n', '\r']) || s.is_empty() {
                Err(TaggerError::BadKey(s.to_string()))
            } else {
                Ok(())
            }
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{MAGIC}\nversion {MODEL_VERSION}\ntagset {}\n",
            self.tagset.len()
        ));
        for t in &self.tagset {
            check(t)?;
            out.push_str(t);
            out.push('\n');
        }
        out.push_str(&format!("tagdict {}\n", self.tagdict.len()));
        for (w, &t) in &self.tagdict {
            check(w)?;
            out.push_str(&format!("{w}\t{}\n", self.tagset[t]));
        }
        let mut entries: Vec<(&str, &str, f64)> = Vec::new();
        for (f, w) in &self.weights {
            check(f)?;
            for (t, &x) in w.iter().enumerate() {
                if x != 0.0 {
                    entries.push((f.as_str(), self.tagset[t].as_str(), x));
                }
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out.push_str(&format!("weights {}\n", entries.len()));
        for (f, t, x) in entries {
            out.push_str(&format!("{f}\t{t}\t{x:?}\n"));
        }
        out.push_str("end\n");
        Ok(out.into_bytes())
    }

    pub fn load(bytes: &[u8]) -> Result<TagModel, TaggerError> {
        let text = std::str::from_utf8(bytes).map_err(|_| TaggerError::Malformed {
            line: 0,
            message: "not UTF-8".into(),
        })?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| TaggerError::Truncated(format!("expected {what}")))
        };
        let malformed = |line: usize, message: String| TaggerError::Malformed { line, message };

        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(malformed(n, format!("bad magic {magic:?}")));
        }
        let (n, v) = next("version")?;
        let version: u32 = v
            .strip_prefix("version ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(n, format!("bad version line {v:?}")))?;
        if version != MODEL_VERSION {
            return Err(TaggerError::Version {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let section = |(n, l): (usize, &str), name: &str| -> Result<usize, TaggerError> {
            l.strip_prefix(name)
                .and_then(|s| s.strip_prefix(' '))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(n, format!("expected `{name} <count>`, got {l:?}")))
        };

        let n_tags = section(next("tagset")?, "tagset")?;
        let mut tagset = Vec::with_capacity(n_tags.min(1024));
        for _ in 0..n_tags {
            tagset.push(next("tag")?.1.to_string());
        }
        if tagset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed(3, "tagset not sorted".into()));
        }
        let tag_id = |(n, t): (usize, &str)| {
            tagset
                .binary_search_by(|x| x.as_str().cmp(t))
                .map_err(|_| malformed(n, format!("tag {t:?} not in tagset")))
        };

        let n_dict = section(next("tagdict")?, "tagdict")?;
        let mut tagdict = BTreeMap::new();
        for _ in 0..n_dict {
            let (n, l) = next("tagdict entry")?;
            let (w, t) = l
                .split_once('\t')
                .ok_or_else(|| malformed(n, "expected word<TAB>tag".into()))?;
            tagdict.insert(w.to_string(), tag_id((n, t))?);
        }

        let n_weights = section(next("weights")?, "weights")?;
        let mut weights: HashMap<String, Vec<f64>> = HashMap::new();
        for _ in 0..n_weights {
            let (n, l) = next("weight entry")?;
            let mut parts = l.split('\t');
            let (Some(f), Some(t), Some(x), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(malformed(n, "expected feature<TAB>tag<TAB>weight".into()));
            };
            let t = tag_id((n, t))?;
            let x: f64 = x
                .parse()
                .map_err(|_| malformed(n, format!("bad weight {x:?}")))?;
            weights
                .entry(f.to_string())
                .or_insert_with(|| vec![0.0; tagset.len()])[t] = x;
        }
        let (n, end) = next("end marker")?;
        if end != "end" {
            return Err(malformed(n, format!("expected `end`, got {end:?}")));
        }
        Ok(TagModel {
            tagset,
            tagdict,
            weights,
        })
    }
}

/// Reads CoNLL-style `word TAB tag` lines; blank lines separate sentences.
/// Words are lowercased to match the tagging stream.
pub fn parse_conll(text: &str) -> Result<Vec<TaggedSentence>, TaggerError> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (w, t) = line
            .split_once('\t')
            .ok_or(TaggerError::Conll { line: i + 1 })?;
        if w.is_empty() || t.trim().is_empty() {
            return Err(TaggerError::Conll { line: i + 1 });
        }
        cur.push((w.to_lowercase(), t.trim().to_string()));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}
