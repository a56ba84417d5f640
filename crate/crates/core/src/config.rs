//! Pipeline configuration in a flat `key = value` format.
//!
//! One setting per line; `#` starts a comment line; blank lines are ignored.
//! Lists are comma separated. Unknown or repeated keys are errors, as are
//! values that fail validation. Missing keys take their defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linmodel::{ClassWeight, Penalty, SolverOptions};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Svm,
    Nb,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Nb => "nb",
        }
    }

    /// Tie-break rank in grid search; lower wins.
    pub fn priority(self) -> u8 {
        match self {
            ModelKind::Logreg => 0,
            ModelKind::Svm => 1,
            ModelKind::Nb => 2,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "svm" => Ok(ModelKind::Svm),
            "nb" => Ok(ModelKind::Nb),
            _ => Err(format!("expected logreg, svm or nb, got `{s}`")),
        }
    }
}

fn parse_penalty(s: &str) -> Result<Penalty, String> {
    match s {
        "l1" => Ok(Penalty::L1),
        "l2" => Ok(Penalty::L2),
        _ => Err(format!("expected l1 or l2, got `{s}`")),
    }
}

fn parse_class_weight(s: &str) -> Result<ClassWeight, String> {
    match s {
        "uniform" => Ok(ClassWeight::Uniform),
        "balanced" => Ok(ClassWeight::Balanced),
        _ => Err(format!("expected uniform or balanced, got `{s}`")),
    }
}

/// Which records the final `train` model is fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainOn {
    /// Every labeled record.
    All,
    /// Only the training side of the holdout split.
    Split,
}

impl std::fmt::Display for TrainOn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainOn::All => "all",
            TrainOn::Split => "split",
        })
    }
}

/// One model setting: kind, penalty, strength and class weighting. For naive
/// Bayes `c` is the smoothing alpha and the penalty is ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub penalty: Penalty,
    pub c: f64,
    pub class_weight: ClassWeight,
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ModelKind::Nb => write!(f, "nb alpha={}", self.c),
            _ => write!(
                f,
                "{} {} C={} {}",
                self.kind, self.penalty, self.c, self.class_weight
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub tagger: PathBuf,
    pub output_dir: PathBuf,

    pub word_ngram_min: usize,
    pub word_ngram_max: usize,
    pub pos_ngram_min: usize,
    pub pos_ngram_max: usize,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub standardize: bool,

    pub selection_c: f64,
    pub selection_tol: f64,

    pub model: ModelKind,
    pub penalty: Penalty,
    pub c: f64,
    pub class_weight: ClassWeight,

    pub grid_models: Vec<ModelKind>,
    pub grid_penalties: Vec<Penalty>,
    pub grid_c: Vec<f64>,
    pub grid_class_weights: Vec<ClassWeight>,

    pub folds: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub train_on: TrainOn,
    pub top_n: usize,
    pub tagger_epochs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: PathBuf::new(),
            lexicon: PathBuf::new(),
            tagger: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            word_ngram_min: 1,
            word_ngram_max: 3,
            pos_ngram_min: 1,
            pos_ngram_max: 3,
            min_df: 5,
            max_df_ratio: 0.75,
            standardize: true,
            selection_c: 1.0,
            selection_tol: 1e-4,
            model: ModelKind::Logreg,
            penalty: Penalty::L2,
            c: 1.0,
            class_weight: ClassWeight::Uniform,
            grid_models: vec![ModelKind::Logreg, ModelKind::Svm, ModelKind::Nb],
            grid_penalties: vec![Penalty::L1, Penalty::L2],
            grid_c: vec![0.01, 0.1, 1.0, 10.0],
            grid_class_weights: vec![ClassWeight::Uniform],
            folds: 5,
            holdout_fraction: 0.10,
            seed: 42,
            tol: 1e-4,
            max_iter: 1000,
            train_on: TrainOn::All,
            top_n: 10,
            tagger_epochs: 5,
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "corpus",
    "lexicon",
    "tagger",
    "output_dir",
    "word_ngram_min",
    "word_ngram_max",
    "pos_ngram_min",
    "pos_ngram_max",
    "min_df",
    "max_df_ratio",
    "standardize",
    "selection_c",
    "selection_tol",
    "model",
    "penalty",
    "c",
    "class_weight",
    "grid_models",
    "grid_penalties",
    "grid_c",
    "grid_class_weights",
    "folds",
    "holdout_fraction",
    "seed",
    "tol",
    "max_iter",
    "train_on",
    "top_n",
    "tagger_epochs",
];

fn parse_num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| f(s.trim()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            };
            if seen.contains(&known) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(known);
            cfg.set(known, value)
                .map_err(|message| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    message,
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "corpus" => self.corpus = PathBuf::from(v),
            "lexicon" => self.lexicon = PathBuf::from(v),
            "tagger" => self.tagger = PathBuf::from(v),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "word_ngram_min" => self.word_ngram_min = parse_num(v)?,
            "word_ngram_max" => self.word_ngram_max = parse_num(v)?,
            "pos_ngram_min" => self.pos_ngram_min = parse_num(v)?,
            "pos_ngram_max" => self.pos_ngram_max = parse_num(v)?,
            "min_df" => self.min_df = parse_num(v)?,
            "max_df_ratio" => self.max_df_ratio = parse_num(v)?,
            "standardize" => self.standardize = parse_bool(v)?,
            "selection_c" => self.selection_c = parse_num(v)?,
            "selection_tol" => self.selection_tol = parse_num(v)?,
            "model" => self.model = v.parse()?,
            "penalty" => self.penalty = parse_penalty(v)?,
            "c" => self.c = parse_num(v)?,
            "class_weight" => self.class_weight = parse_class_weight(v)?,
            "grid_models" => self.grid_models = parse_list(v, str::parse)?,
            "grid_penalties" => self.grid_penalties = parse_list(v, parse_penalty)?,
            "grid_c" => self.grid_c = parse_list(v, parse_num)?,
            "grid_class_weights" => self.grid_class_weights = parse_list(v, parse_class_weight)?,
            "folds" => self.folds = parse_num(v)?,
            "holdout_fraction" => self.holdout_fraction = parse_num(v)?,
            "seed" => self.seed = parse_num(v)?,
            "tol" => self.tol = parse_num(v)?,
            "max_iter" => self.max_iter = parse_num(v)?,
            "train_on" => {
                self.train_on = match v {
                    "all" => TrainOn::All,
                    "split" => TrainOn::Split,
                    _ => return Err(format!("expected all or split, got `{v}`")),
                }
            }
            "top_n" => self.top_n = parse_num(v)?,
            "tagger_epochs" => self.tagger_epochs = parse_num(v)?,
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    /// Range and consistency checks on every numeric key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, lo, hi) in [
            ("word", self.word_ngram_min, self.word_ngram_max),
            ("pos", self.pos_ngram_min, self.pos_ngram_max),
        ] {
            if lo < 1 || lo > hi {
                return bad(format!(
                    "{name} n-gram range {lo}..{hi} needs 1 <= min <= max"
                ));
            }
        }
        if self.min_df < 1 {
            return bad("min_df must be at least 1".into());
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return bad(format!("max_df_ratio {} outside (0, 1]", self.max_df_ratio));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.selection_c) || !positive(self.selection_tol) || !positive(self.tol) {
            return bad("selection_c, selection_tol and tol must be positive".into());
        }
        if !positive(self.c) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if self.model == ModelKind::Svm && self.penalty == Penalty::L1 {
            return bad("the svm supports only the l2 penalty".into());
        }
        if let Some(c) = self.grid_c.iter().find(|&&c| !positive(c)) {
            return bad(format!("grid_c values must be positive, got {c}"));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!(
                "holdout_fraction {} outside (0, 1)",
                self.holdout_fraction
            ));
        }
        if self.max_iter < 1 || self.tagger_epochs < 1 {
            return bad("max_iter and tagger_epochs must be at least 1".into());
        }
        Ok(())
    }

    /// Serializes every key in [`KEYS`] order; `parse` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            writeln!(s, "{k} = {v}").expect("write to string");
        };
        put("corpus", self.corpus.display().to_string());
        put("lexicon", self.lexicon.display().to_string());
        put("tagger", self.tagger.display().to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("word_ngram_min", self.word_ngram_min.to_string());
        put("word_ngram_max", self.word_ngram_max.to_string());
        put("pos_ngram_min", self.pos_ngram_min.to_string());
        put("pos_ngram_max", self.pos_ngram_max.to_string());
        put("min_df", self.min_df.to_string());
        put("max_df_ratio", self.max_df_ratio.to_string());
        put("standardize", self.standardize.to_string());
        put("selection_c", self.selection_c.to_string());
        put("selection_tol", self.selection_tol.to_string());
        put("model", self.model.to_string());
        put("penalty", self.penalty.to_string());
        put("c", self.c.to_string());
        put("class_weight", self.class_weight.to_string());
        put("grid_models", join(&self.grid_models));
        put("grid_penalties", join(&self.grid_penalties));
        put("grid_c", join(&self.grid_c));
        put("grid_class_weights", join(&self.grid_class_weights));
        put("folds", self.folds.to_string());
        put("holdout_fraction", self.holdout_fraction.to_string());
        put("seed", self.seed.to_string());
        put("tol", self.tol.to_string());
        put("max_iter", self.max_iter.to_string());
        put("train_on", self.train_on.to_string());
        put("top_n", self.top_n.to_string());
        put("tagger_epochs", self.tagger_epochs.to_string());
        s
    }

    /// Makes relative paths relative to `base` (usually the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.lexicon,
            &mut self.tagger,
            &mut self.output_dir,
        ] {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    /// The single model used by `train`.
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.model,
            penalty: if self.model == ModelKind::Nb {
                Penalty::None
            } else {
                self.penalty
            },
            c: self.c,
            class_weight: if self.model == ModelKind::Nb {
                ClassWeight::Uniform
            } else {
                self.class_weight
            },
        }
    }

    /// Grid cells in a fixed order: model, then penalty, then C, then class
    /// weight. The SVM uses only the L2 penalty; naive Bayes ignores penalty
    /// and class weight.
    pub fn grid(&self) -> Vec<ModelSpec> {
        let mut cells = Vec::new();
        for &kind in &self.grid_models {
            let penalties: Vec<Penalty> = match kind {
                ModelKind::Logreg => self.grid_penalties.clone(),
                ModelKind::Svm => vec![Penalty::L2],
                ModelKind::Nb => vec![Penalty::None],
            };
            let weights: Vec<ClassWeight> = match kind {
                ModelKind::Nb => vec![ClassWeight::Uniform],
                _ => self.grid_class_weights.clone(),
            };
            for &penalty in &penalties {
                for &c in &self.grid_c {
                    for &class_weight in &weights {
                        let cell = ModelSpec {
                            kind,
                            penalty,
                            c,
                            class_weight,
                        };
                        if !cells.contains(&cell) {
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let c = PipelineConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.folds, 5);
        assert_eq!(c.holdout_fraction, 0.10);
        assert_eq!(c.seed, 42);
        assert_eq!(c.grid().len(), 8 + 4 + 4);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_errors() {
        assert_eq!(
            PipelineConfig::parse("min_dff = 3"),
            Err(ConfigError::UnknownKey {
                line: 1,
                key: "min_dff".into()
            })
        );
        assert!(matches!(
            PipelineConfig::parse("seed = 1\nseed = 2"),
            Err(ConfigError::DuplicateKey { line: 2, .. })
        ));
        assert_eq!(
            PipelineConfig::parse("just words"),
            Err(ConfigError::Syntax { line: 1 })
        );
    }

    #[test]
    fn values_are_validated() {
        assert!(matches!(
            PipelineConfig::parse("folds = x"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("folds = 1"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("max_df_ratio = 1.5"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("holdout_fraction = 1"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("grid_c = 1,0"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("word_ngram_min = 3\nword_ngram_max = 2"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("model = svm\npenalty = l1"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("model = tree"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn grid_order_and_shape() {
        let c = PipelineConfig::parse(
            "grid_models = nb,svm\ngrid_c = 1,10\ngrid_class_weights = uniform,balanced",
        )
        .unwrap();
        let g = c.grid();
        assert_eq!(g.len(), 2 + 4);
        assert_eq!(g[0].kind, ModelKind::Nb);
        assert_eq!(g[2].kind, ModelKind::Svm);
        assert_eq!(g[2].class_weight, ClassWeight::Uniform);
        assert_eq!(g[3].class_weight, ClassWeight::Balanced);
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let mut c = PipelineConfig::parse("corpus = a.csv\nlexicon = /abs/l.tsv").unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(c.corpus, PathBuf::from("/cfg/a.csv"));
        assert_eq!(c.lexicon, PathBuf::from("/abs/l.tsv"));
        assert_eq!(c.tagger, PathBuf::new());
    }

    proptest! {
        #[test]
        fn round_trip(
            min_df in 1usize..50,
            ratio in 0.01f64..1.0,
            c in 1e-4f64..1e4,
            seed in any::<u64>(),
            folds in 2usize..10,
            frac in 0.01f64..0.99,
            grid in prop::collection::vec(1e-3f64..1e3, 1..5),
            standardize in any::<bool>(),
        ) {
            let mut cfg = PipelineConfig {
                corpus: "data/x y.csv".into(),
                min_df,
                max_df_ratio: ratio,
                c,
                seed,
                folds,
                holdout_fraction: frac,
                grid_c: grid,
                standardize,
                ..PipelineConfig::default()
            };
            cfg.class_weight = ClassWeight::Balanced;
            let text = cfg.to_text();
            let back = PipelineConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
