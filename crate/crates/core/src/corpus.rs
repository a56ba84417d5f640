//! Labeled corpus ingestion: crowd vote counts, majority labels, prevalence
//! statistics, and stratified train/holdout splits.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three annotation classes. Integer codes are part of every file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Hate = 0,
    Offensive = 1,
    Neither = 2,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Hate, Label::Offensive, Label::Neither];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Hate),
            1 => Some(Label::Offensive),
            2 => Some(Label::Neither),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Hate => "hate",
            Label::Offensive => "offensive",
            Label::Neither => "neither",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "hate" => Ok(Label::Hate),
            "1" | "offensive" => Ok(Label::Offensive),
            "2" | "neither" => Ok(Label::Neither),
            other => Err(CorpusError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: counts {hate}+{offensive}+{neither} do not sum to count={total}")]
    CountMismatch {
        line: u64,
        total: u32,
        hate: u32,
        offensive: u32,
        neither: u32,
    },
    #[error("missing required column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: invalid UTF-8 in field `{column}`")]
    Utf8 { line: u64, column: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("all vote counts are zero")]
    NoVotes,
    #[error("corpus is empty")]
    Empty,
    #[error("record `{0}` has no label")]
    Unlabeled(String),
    #[error("holdout fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("holdout fraction {fraction} leaves the {side} split empty (class {class} present)")]
    EmptySplit {
        fraction: f64,
        side: &'static str,
        class: Label,
    },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

/// One annotated tweet as released by the crowd-labeling task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTweet {
    pub id: String,
    pub text: String,
    pub count_total: u32,
    pub count_hate: u32,
    pub count_offensive: u32,
    pub count_neither: u32,
    /// Derived from the counts, never read from the file.
    pub label: Option<Label>,
    /// The file's own `class` column when present; kept only for cross-checking.
    pub source_class: Option<Label>,
}

impl LabeledTweet {
    pub fn counts(&self) -> [u32; 3] {
        [self.count_hate, self.count_offensive, self.count_neither]
    }

    /// Builds a record from counts and derives the label.
    pub fn from_counts(id: impl Into<String>, text: impl Into<String>, counts: [u32; 3]) -> Self {
        let total = counts.iter().sum();
        LabeledTweet {
            id: id.into(),
            text: text.into(),
            count_total: total,
            count_hate: counts[0],
            count_offensive: counts[1],
            count_neither: counts[2],
            label: label_for_counts(counts, total),
            source_class: None,
        }
    }
}

/// Minimum number of coders for a record to carry a label.
pub const MIN_CODERS: u32 = 3;

fn label_for_counts(counts: [u32; 3], total: u32) -> Option<Label> {
    if total < MIN_CODERS {
        return None;
    }
    derive_label(counts[0], counts[1], counts[2]).ok().flatten()
}

/// Majority vote: the unique class with the strictly largest count, or `None`
/// when the maximum is shared.
pub fn derive_label(hate: u32, offensive: u32, neither: u32) -> Result<Option<Label>, CorpusError> {
    let counts = [hate, offensive, neither];
    let max = *counts.iter().max().unwrap_or(&0);
    if max == 0 {
        return Err(CorpusError::NoVotes);
    }
    let mut winners = Label::ALL.iter().zip(counts).filter(|(_, c)| *c == max);
    let first = winners.next().map(|(l, _)| *l);
    if winners.next().is_some() {
        Ok(None)
    } else {
        Ok(first)
    }
}

struct Columns {
    id: Option<usize>,
    count: usize,
    hate: usize,
    offensive: usize,
    neither: usize,
    class: Option<usize>,
    tweet: usize,
}

impl Columns {
    fn from_header(header: &csv::ByteRecord) -> Result<Self, CorpusError> {
        let names: Vec<String> = header
            .iter()
            .map(|f| String::from_utf8_lossy(f).trim().to_ascii_lowercase())
            .collect();
        let find = |name: &str| names.iter().position(|n| n == name);
        let need = |name: &'static str| find(name).ok_or(CorpusError::MissingColumn(name));
        // The public release names its index column with an empty string.
        let id = find("id").or_else(|| find(""));
        Ok(Columns {
            id,
            count: need("count")?,
            hate: need("hate_speech")?,
            offensive: need("offensive_language")?,
            neither: need("neither")?,
            class: find("class"),
            tweet: need("tweet")?,
        })
    }
}

fn field<'r>(
    record: &'r csv::ByteRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<&'r str, CorpusError> {
    let raw = record.get(idx).ok_or_else(|| CorpusError::Row {
        line,
        message: format!("missing field `{name}`"),
    })?;
    std::str::from_utf8(raw).map_err(|_| CorpusError::Utf8 {
        line,
        column: name.to_string(),
    })
}

fn count_field(
    record: &csv::ByteRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<u32, CorpusError> {
    let s = field(record, idx, name, line)?;
    s.trim().parse::<u32>().map_err(|_| CorpusError::Row {
        line,
        message: format!("field `{name}` is not a non-negative integer: {s:?}"),
    })
}

/// Parses a labeled CSV export. Columns are located by header name; labels are
/// recomputed from the vote counts.
pub fn parse_corpus(bytes: &[u8]) -> Result<Vec<LabeledTweet>, CorpusError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header = reader.byte_headers()?.clone();
    let cols = Columns::from_header(&header)?;

    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    let mut ordinal = 0usize;
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(CorpusError::Row {
                    line,
                    message: e.to_string(),
                });
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let total = count_field(&record, cols.count, "count", line)?;
        let hate = count_field(&record, cols.hate, "hate_speech", line)?;
        let offensive = count_field(&record, cols.offensive, "offensive_language", line)?;
        let neither = count_field(&record, cols.neither, "neither", line)?;
        if hate + offensive + neither != total {
            return Err(CorpusError::CountMismatch {
                line,
                total,
                hate,
                offensive,
                neither,
            });
        }
        let id = match cols.id {
            Some(i) => field(&record, i, "id", line)?.trim().to_string(),
            None => ordinal.to_string(),
        };
        let source_class = match cols.class {
            Some(i) => {
                let raw = field(&record, i, "class", line)?;
                if raw.trim().is_empty() {
                    None
                } else {
                    Some(raw.parse::<Label>().map_err(|_| CorpusError::Row {
                        line,
                        message: format!("unknown class value {raw:?}"),
                    })?)
                }
            }
            None => None,
        };
        let text = field(&record, cols.tweet, "tweet", line)?.to_string();
        let counts = [hate, offensive, neither];
        out.push(LabeledTweet {
            id,
            text,
            count_total: total,
            count_hate: hate,
            count_offensive: offensive,
            count_neither: neither,
            label: if total == 0 {
                None
            } else {
                label_for_counts(counts, total)
            },
            source_class,
        });
        ordinal += 1;
    }
    Ok(out)
}

/// Per-class prevalence figures, as fractions of all records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub majority_share: f64,
    pub unanimous_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_total: usize,
    pub n_labeled: usize,
    pub classes: [ClassShare; 3],
    /// Mean over tweets of the fraction of coders voting with the plurality.
    pub agreement: f64,
}

impl CorpusStats {
    pub fn class(&self, label: Label) -> ClassShare {
        self.classes[label.index()]
    }

    /// Flat `key=value` report, one pair per line.
    pub fn to_key_value(&self) -> String {
        let mut s = format!("n_total={}\nn_labeled={}\n", self.n_total, self.n_labeled);
        for label in Label::ALL {
            let c = self.class(label);
            s.push_str(&format!("{label}.majority_share={:.6}\n", c.majority_share));
            s.push_str(&format!(
                "{label}.unanimous_share={:.6}\n",
                c.unanimous_share
            ));
        }
        s.push_str(&format!("agreement={:.6}\n", self.agreement));
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,majority_share,unanimous_share\n");
        for label in Label::ALL {
            let c = self.class(label);
            s.push_str(&format!(
                "{label},{:.6},{:.6}\n",
                c.majority_share, c.unanimous_share
            ));
        }
        s.push_str(&format!(
            "# n_total={},n_labeled={},agreement={:.6}\n",
            self.n_total, self.n_labeled, self.agreement
        ));
        s
    }
}

pub fn corpus_stats(corpus: &[LabeledTweet]) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut majority = [0usize; 3];
    let mut unanimous = [0usize; 3];
    let mut agreement_sum = 0.0;
    let mut agreement_n = 0usize;
    for t in corpus {
        if let Some(l) = t.label {
            majority[l.index()] += 1;
        }
        let counts = t.counts();
        if t.count_total > 0 {
            for l in Label::ALL {
                if counts[l.index()] == t.count_total {
                    unanimous[l.index()] += 1;
                }
            }
            let max = *counts.iter().max().unwrap_or(&0);
            agreement_sum += f64::from(max) / f64::from(t.count_total);
            agreement_n += 1;
        }
    }
    let n = corpus.len() as f64;
    let mut classes = [ClassShare::default(); 3];
    for l in Label::ALL {
        classes[l.index()] = ClassShare {
            majority_share: majority[l.index()] as f64 / n,
            unanimous_share: unanimous[l.index()] as f64 / n,
        };
    }
    Ok(CorpusStats {
        n_total: corpus.len(),
        n_labeled: majority.iter().sum(),
        classes,
        agreement: if agreement_n == 0 {
            0.0
        } else {
            agreement_sum / agreement_n as f64
        },
    })
}

/// Holdout sizes per class by largest-remainder apportionment, so each class
/// is within one record of its exact quota and the total is `round(n * f)`.
fn holdout_quotas(class_sizes: [usize; 3], fraction: f64) -> [usize; 3] {
    let n: usize = class_sizes.iter().sum();
    let target = (n as f64 * fraction).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * fraction).collect();
    let mut quotas = [0usize; 3];
    for i in 0..3 {
        quotas[i] = exact[i].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).filter(|&i| class_sizes[i] > 0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = quotas.iter().sum();
    for &i in &order {
        if assigned >= target {
            break;
        }
        if quotas[i] < class_sizes[i] && (quotas[i] as f64) < exact[i] {
            quotas[i] += 1;
            assigned += 1;
        }
    }
    quotas
}

/// Splits labeled records into (train, holdout), stratified by class.
pub fn stratified_split(
    corpus: &[LabeledTweet],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledTweet>, Vec<LabeledTweet>), CorpusError> {
    let labels = corpus
        .iter()
        .map(|t| t.label.ok_or_else(|| CorpusError::Unlabeled(t.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let (train_idx, holdout_idx) = stratified_split_indices(&labels, holdout_fraction, seed)?;
    Ok((
        train_idx.iter().map(|&i| corpus[i].clone()).collect(),
        holdout_idx.iter().map(|&i| corpus[i].clone()).collect(),
    ))
}

/// Index form of [`stratified_split`]. Both index lists come back sorted.
pub fn stratified_split_indices(
    labels: &[Label],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(CorpusError::BadFraction(holdout_fraction));
    }
    let mut by_class: [Vec<usize>; 3] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let sizes = [by_class[0].len(), by_class[1].len(), by_class[2].len()];
    let quotas = holdout_quotas(sizes, holdout_fraction);
    let holdout_total: usize = quotas.iter().sum();
    let present = Label::ALL.into_iter().find(|l| sizes[l.index()] > 0);
    if let Some(class) = present {
        let side = if holdout_total == 0 {
            Some("holdout")
        } else if holdout_total == labels.len() {
            Some("train")
        } else {
            None
        };
        if let Some(side) = side {
            let class = Label::ALL
                .into_iter()
                .max_by_key(|l| (sizes[l.index()], std::cmp::Reverse(l.code())))
                .unwrap_or(class);
            return Err(CorpusError::EmptySplit {
                fraction: holdout_fraction,
                side,
                class,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (class_idx, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let q = quotas[class_idx];
        holdout.extend_from_slice(&members[..q]);
        train.extend_from_slice(&members[q..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,count,hate_speech,offensive_language,neither,class,tweet\n";

    #[test]
    fn parses_single_row() {
        let csv = format!("{HEADER}t1,3,0,3,0,1,some text\n");
        let rows = parse_corpus(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].id, "t1");
        assert_eq!(rows[0].counts(), [0, 3, 0]);
        assert_eq!(rows[0].label, Some(Label::Offensive));
        assert_eq!(rows[0].text, "some text");
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_corpus(b"").unwrap().is_empty());
    }

    #[test]
    fn count_mismatch_is_validation_error() {
        let csv = format!("{HEADER}t1,3,1,1,0,0,x\n");
        match parse_corpus(csv.as_bytes()) {
            Err(CorpusError::CountMismatch { line, total: 3, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_count_reports_line() {
        let csv = format!("{HEADER}a,3,0,3,0,1,ok\nb,three,0,3,0,1,bad\n");
        match parse_corpus(csv.as_bytes()) {
            Err(CorpusError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_arity_reports_line() {
        let csv = format!("{HEADER}a,3,0,3,0,1\n");
        assert!(matches!(
            parse_corpus(csv.as_bytes()),
            Err(CorpusError::Row { line: 2, .. })
        ));
    }

    #[test]
    fn invalid_utf8_is_hard_error() {
        let mut bytes = HEADER.as_bytes().to_vec();
        bytes.extend_from_slice(b"a,3,0,3,0,1,bad \xff byte\n");
        assert!(matches!(
            parse_corpus(&bytes),
            Err(CorpusError::Utf8 { line: 2, .. })
        ));
    }

    #[test]
    fn columns_found_by_name_and_id_defaults_to_ordinal() {
        let csv = "tweet,neither,offensive_language,hate_speech,count\n\"hi, there\",3,0,0,3\nyo,0,0,3,3\n";
        let rows = parse_corpus(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].id, "0");
        assert_eq!(rows[1].id, "1");
        assert_eq!(rows[0].text, "hi, there");
        assert_eq!(rows[0].label, Some(Label::Neither));
        assert_eq!(rows[1].label, Some(Label::Hate));
        assert_eq!(rows[0].source_class, None);
    }

    #[test]
    fn public_layout_with_blank_index_header() {
        let csv = ",count,hate_speech,offensive_language,neither,class,tweet\n0,3,0,0,3,2,\"!!! RT @mayasolovely: As a woman...\"\n";
        let rows = parse_corpus(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].id, "0");
        assert_eq!(rows[0].source_class, Some(Label::Neither));
    }

    #[test]
    fn ties_keep_record_without_label() {
        let csv = format!("{HEADER}a,3,1,1,1,1,tie\n");
        let rows = parse_corpus(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].label, None);
    }

    #[test]
    fn missing_column() {
        let csv = "id,count,hate_speech,neither,tweet\n";
        assert!(matches!(
            parse_corpus(csv.as_bytes()),
            Err(CorpusError::MissingColumn("offensive_language"))
        ));
    }

    #[test]
    fn derive_label_examples() {
        assert_eq!(derive_label(2, 1, 0).unwrap(), Some(Label::Hate));
        assert_eq!(derive_label(1, 1, 1).unwrap(), None);
        assert_eq!(derive_label(0, 0, 5).unwrap(), Some(Label::Neither));
        assert_eq!(derive_label(2, 2, 1).unwrap(), None);
        assert_eq!(derive_label(1, 2, 2).unwrap(), None);
        assert!(matches!(derive_label(0, 0, 0), Err(CorpusError::NoVotes)));
    }

    #[test]
    fn unique_argmax_not_fifty_percent() {
        // 2 of 5 votes is a plurality below one half.
        assert_eq!(derive_label(2, 1, 1).unwrap(), Some(Label::Hate));
        assert_eq!(derive_label(1, 2, 1).unwrap(), Some(Label::Offensive));
    }

    #[test]
    fn stats_single_unanimous() {
        let c = vec![LabeledTweet::from_counts("a", "x", [3, 0, 0])];
        let s = corpus_stats(&c).unwrap();
        assert_eq!(s.class(Label::Hate).majority_share, 1.0);
        assert_eq!(s.class(Label::Hate).unanimous_share, 1.0);
        assert_eq!(s.agreement, 1.0);
        assert!(s.to_key_value().contains("hate.majority_share=1.000000"));
    }

    #[test]
    fn stats_empty_is_error() {
        assert!(matches!(corpus_stats(&[]), Err(CorpusError::Empty)));
    }

    #[test]
    fn stats_shares_sum_to_labeled_fraction() {
        let c = vec![
            LabeledTweet::from_counts("a", "", [2, 1, 0]),
            LabeledTweet::from_counts("b", "", [1, 1, 1]),
            LabeledTweet::from_counts("c", "", [0, 3, 0]),
            LabeledTweet::from_counts("d", "", [0, 1, 2]),
        ];
        let s = corpus_stats(&c).unwrap();
        let sum: f64 = s.classes.iter().map(|c| c.majority_share).sum();
        assert!((sum - 0.75).abs() < 1e-12);
        assert_eq!(s.n_labeled, 3);
        let expected_agreement = (2.0 / 3.0 + 1.0 / 3.0 + 1.0 + 2.0 / 3.0) / 4.0;
        assert!((s.agreement - expected_agreement).abs() < 1e-12);
    }

    fn corpus_with(sizes: [usize; 3]) -> Vec<LabeledTweet> {
        let mut out = Vec::new();
        for (ci, &n) in sizes.iter().enumerate() {
            for j in 0..n {
                let mut counts = [0; 3];
                counts[ci] = 3;
                out.push(LabeledTweet::from_counts(format!("{ci}-{j}"), "", counts));
            }
        }
        out
    }

    #[test]
    fn split_sizes_follow_counting_argument() {
        let corpus = corpus_with([5, 76, 19]);
        let (train, holdout) = stratified_split(&corpus, 0.10, 7).unwrap();
        assert_eq!(train.len() + holdout.len(), 100);
        let count = |v: &[LabeledTweet], l| v.iter().filter(|t| t.label == Some(l)).count();
        assert!(count(&holdout, Label::Hate) <= 1);
        assert!((7..=8).contains(&count(&holdout, Label::Offensive)));
        assert!((1..=2).contains(&count(&holdout, Label::Neither)));
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = corpus_with([13, 40, 22]);
        let a = stratified_split(&corpus, 0.2, 99).unwrap();
        let b = stratified_split(&corpus, 0.2, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_split_of_two_records() {
        let corpus = corpus_with([1, 1, 0]);
        let (train, holdout) = stratified_split(&corpus, 0.5, 1).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(holdout.len(), 1);
        assert_ne!(train[0].label, holdout[0].label);
    }

    #[test]
    fn split_rejects_unlabeled_and_empty_sides() {
        let mut corpus = corpus_with([3, 0, 0]);
        assert!(matches!(
            stratified_split(&corpus, 0.1, 1),
            Err(CorpusError::EmptySplit {
                side: "holdout",
                class: Label::Hate,
                ..
            })
        ));
        corpus.push(LabeledTweet::from_counts("tie", "", [1, 1, 1]));
        assert!(matches!(
            stratified_split(&corpus, 0.5, 1),
            Err(CorpusError::Unlabeled(_))
        ));
        assert!(matches!(
            stratified_split(&corpus_with([2, 2, 2]), 1.0, 1),
            Err(CorpusError::BadFraction(_))
        ));
    }
}
