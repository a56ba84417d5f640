//! End-to-end glue: raw text to prepared documents, feature fitting,
//! model fitting, and the self-contained model bundle used for prediction.

use std::borrow::Borrow;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ModelKind, ModelSpec, PipelineConfig};
use crate::corpus::Label;
use crate::lexfeat::{scalar_features, LexError, SentimentLexicon};
use crate::linmodel::{self, LinError, LinearModel, SolverOptions};
use crate::postag::{TagModel, TaggerError};
use crate::sparse::CsrMatrix;
use crate::textproc::{normalize_tokens, stem_tokens, tokenize};
use crate::vectorize::{
    assemble_features, fit_vocab, select_l1, Block, FeatureMatrix, FeatureName, Standardizer,
    VectorizeError, Vocabulary, N_SCALARS,
};

/// Version of the bundle container.
pub const BUNDLE_FORMAT_VERSION: u32 = 1;
/// Bumped whenever preprocessing or feature extraction changes meaning, so old
/// bundles are rejected instead of silently producing different features.
pub const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Model(#[from] LinError),
    #[error("embedded tagger: {0}")]
    Tagger(#[from] TaggerError),
    #[error("embedded lexicon: {0}")]
    Lexicon(#[from] LexError),
    #[error("model bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model bundle version {found} is not supported (expected {expected})")]
    BundleVersion { expected: u32, found: u32 },
    #[error("model bundle was built with feature version {found}; this build uses {expected}")]
    FeatureVersion { expected: u32, found: u32 },
    #[error("model bundle is inconsistent: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Shared read-only inputs to document preparation.
#[derive(Clone, Debug)]
pub struct Resources {
    pub tagger: TagModel,
    pub lexicon: SentimentLexicon,
}

/// Everything feature extraction needs from one text.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDoc {
    /// Stemmed word stream.
    pub words: Vec<String>,
    /// POS tags of the unstemmed normalized stream.
    pub tags: Vec<String>,
    pub scalars: [f64; N_SCALARS],
}

pub fn prepare(text: &str, res: &Resources) -> PreparedDoc {
    let tokens = tokenize(text);
    let normalized = normalize_tokens(&tokens);
    PreparedDoc {
        tags: res.tagger.tag(&normalized),
        words: stem_tokens(&normalized),
        scalars: scalar_features(text, &tokens, &res.lexicon),
    }
}

pub fn prepare_all<S: AsRef<str> + Sync>(texts: &[S], res: &Resources) -> Vec<PreparedDoc> {
    texts.par_iter().map(|t| prepare(t.as_ref(), res)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSettings {
    pub word_ngrams: (usize, usize),
    pub pos_ngrams: (usize, usize),
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub standardize: bool,
}

impl FeatureSettings {
    pub fn from_config(c: &PipelineConfig) -> Self {
        FeatureSettings {
            word_ngrams: (c.word_ngram_min, c.word_ngram_max),
            pos_ngrams: (c.pos_ngram_min, c.pos_ngram_max),
            min_df: c.min_df,
            max_df_ratio: c.max_df_ratio,
            standardize: c.standardize,
        }
    }
}

/// Fitted vocabularies and scalar standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub word: Vocabulary,
    pub pos: Vocabulary,
    pub standardizer: Option<Standardizer>,
}

fn words_of<D: Borrow<PreparedDoc>>(docs: &[D]) -> Vec<&[String]> {
    docs.iter().map(|d| d.borrow().words.as_slice()).collect()
}

fn tags_of<D: Borrow<PreparedDoc>>(docs: &[D]) -> Vec<&[String]> {
    docs.iter().map(|d| d.borrow().tags.as_slice()).collect()
}

impl Featurizer {
    pub fn fit<D: Borrow<PreparedDoc>>(
        docs: &[D],
        s: &FeatureSettings,
    ) -> Result<Self, VectorizeError> {
        let word = fit_vocab(
            &words_of(docs),
            s.word_ngrams.0,
            s.word_ngrams.1,
            s.min_df,
            s.max_df_ratio,
        )?;
        let pos = fit_vocab(
            &tags_of(docs),
            s.pos_ngrams.0,
            s.pos_ngrams.1,
            s.min_df,
            s.max_df_ratio,
        )?;
        let standardizer = s.standardize.then(|| {
            let rows: Vec<[f64; N_SCALARS]> = docs.iter().map(|d| d.borrow().scalars).collect();
            Standardizer::fit(&rows)
        });
        Ok(Featurizer {
            word,
            pos,
            standardizer,
        })
    }

    /// Assembled `[word | pos | scalars]` TF-IDF features.
    pub fn transform<D: Borrow<PreparedDoc> + Sync>(&self, docs: &[D]) -> FeatureMatrix {
        let word = self.word.transform_block(&words_of(docs), Block::WordNgram);
        let pos = self.pos.transform_block(&tags_of(docs), Block::PosNgram);
        let scalars: Vec<[f64; N_SCALARS]> = docs.iter().map(|d| d.borrow().scalars).collect();
        assemble_features(&word, &pos, &scalars, self.standardizer.as_ref())
            .expect("blocks built from the same documents")
    }

    /// Raw `[word | pos]` n-gram counts, the naive Bayes input.
    pub fn transform_counts<D: Borrow<PreparedDoc> + Sync>(&self, docs: &[D]) -> CsrMatrix {
        let word = self.word.transform_counts(&words_of(docs));
        let pos = self.pos.transform_counts(&tags_of(docs));
        CsrMatrix::hstack(&[&word, &pos])
    }

    /// Names of the assembled columns.
    pub fn registry(&self) -> Vec<FeatureName> {
        let empty: [PreparedDoc; 0] = [];
        self.transform(&empty).registry
    }

    /// Names of the count columns.
    pub fn count_registry(&self) -> Vec<FeatureName> {
        let mut r = self.word.registry(Block::WordNgram);
        r.extend(self.pos.registry(Block::PosNgram));
        r
    }

    /// Model input for `kind`: counts for naive Bayes, TF-IDF otherwise.
    pub fn inputs<D: Borrow<PreparedDoc> + Sync>(&self, kind: ModelKind, docs: &[D]) -> CsrMatrix {
        match kind {
            ModelKind::Nb => self.transform_counts(docs),
            _ => self.transform(docs).matrix,
        }
    }

    pub fn input_registry(&self, kind: ModelKind) -> Vec<FeatureName> {
        match kind {
            ModelKind::Nb => self.count_registry(),
            _ => self.registry(),
        }
    }

    fn rebuild_indexes(&mut self) {
        self.word.rebuild_index();
        self.pos.rebuild_index();
    }
}

/// Fits the model named by `spec` on an already built input matrix.
pub fn fit_spec(
    spec: &ModelSpec,
    x: &CsrMatrix,
    y: &[Label],
    opts: SolverOptions,
) -> Result<LinearModel, LinError> {
    match spec.kind {
        ModelKind::Logreg => {
            linmodel::fit_logreg(x, y, spec.penalty, spec.c, spec.class_weight, opts)
        }
        ModelKind::Svm => linmodel::fit_linear_svm(x, y, spec.c, spec.class_weight, opts),
        ModelKind::Nb => linmodel::fit_multinomial_nb(x, y, spec.c),
    }
}

/// L1 selection settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub c: f64,
    pub tol: f64,
}

impl Selection {
    pub fn from_config(c: &PipelineConfig) -> Self {
        Selection {
            c: c.selection_c,
            tol: c.selection_tol,
        }
    }
}

/// Fits a model for `spec` on an input matrix. Linear models first reduce
/// the columns by L1 selection and record the projection in the model;
/// naive Bayes uses every count column.
pub fn fit_with_selection(
    spec: &ModelSpec,
    x: &CsrMatrix,
    y: &[Label],
    selection: Selection,
    opts: SolverOptions,
) -> Result<LinearModel, PipelineError> {
    if spec.kind == ModelKind::Nb {
        return Ok(fit_spec(spec, x, y, opts)?);
    }
    let cols = select_l1(x, y, selection.c, selection.tol)?;
    fit_projected(spec, x, y, cols, opts)
}

/// Fits on the given columns only and records the projection.
pub fn fit_projected(
    spec: &ModelSpec,
    x: &CsrMatrix,
    y: &[Label],
    cols: Vec<usize>,
    opts: SolverOptions,
) -> Result<LinearModel, PipelineError> {
    let mut model = fit_spec(spec, &x.select_columns(&cols), y, opts)?;
    model.set_projection(cols, x.n_cols())?;
    Ok(model)
}

/// A fitted featurizer and model plus the resources needed to prepare new
/// text.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub spec: ModelSpec,
    pub featurizer: Featurizer,
    pub model: LinearModel,
    pub resources: Resources,
}

/// Per-document outcome of [`Classifier::classify`].
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Indexed by class code; NaN for a class the model never saw.
    pub scores: [f64; 3],
}

impl Classifier {
    /// Prepares `docs`, fits the featurizer and the model in one go.
    pub fn fit<D: Borrow<PreparedDoc> + Sync>(
        docs: &[D],
        y: &[Label],
        spec: ModelSpec,
        settings: &FeatureSettings,
        selection: Selection,
        opts: SolverOptions,
        resources: Resources,
    ) -> Result<Self, PipelineError> {
        let featurizer = Featurizer::fit(docs, settings)?;
        let x = featurizer.inputs(spec.kind, docs);
        let model = fit_with_selection(&spec, &x, y, selection, opts)?;
        Ok(Classifier {
            spec,
            featurizer,
            model,
            resources,
        })
    }

    pub fn inputs<D: Borrow<PreparedDoc> + Sync>(&self, docs: &[D]) -> CsrMatrix {
        self.featurizer.inputs(self.spec.kind, docs)
    }

    /// Registry names of the model's columns, after projection.
    pub fn model_registry(&self) -> Vec<FeatureName> {
        let full = self.featurizer.input_registry(self.spec.kind);
        match &self.model.selected_columns {
            Some(cols) => cols.iter().map(|&c| full[c].clone()).collect(),
            None => full,
        }
    }

    pub fn classify_prepared<D: Borrow<PreparedDoc> + Sync>(
        &self,
        docs: &[D],
    ) -> Result<Vec<Prediction>, PipelineError> {
        let scores = self.model.predict_scores(&self.inputs(docs))?;
        Ok(scores
            .iter()
            .map(|row| {
                let mut full = [f64::NAN; 3];
                for (class, &s) in self.model.classes.iter().zip(row) {
                    full[class.index()] = s;
                }
                Prediction {
                    label: self.model.classes[linmodel::argmax(row)],
                    scores: full,
                }
            })
            .collect())
    }

    pub fn classify<S: AsRef<str> + Sync>(
        &self,
        texts: &[S],
    ) -> Result<Vec<Prediction>, PipelineError> {
        self.classify_prepared(&prepare_all(texts, &self.resources))
    }

    pub fn to_bundle(&self) -> Result<ModelBundle, PipelineError> {
        let tagger = String::from_utf8(self.resources.tagger.save()?)
            .map_err(|_| PipelineError::Inconsistent("tagger text is not UTF-8".into()))?;
        Ok(ModelBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            feature_version: FEATURE_VERSION,
            spec: self.spec,
            featurizer: self.featurizer.clone(),
            model: self.model.clone(),
            tagger,
            lexicon: self
                .resources
                .lexicon
                .sorted_entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        })
    }

    /// Serialized bundle; identical inputs give identical bytes.
    pub fn to_json(&self) -> Result<String, PipelineError> {
        self.model.validate()?;
        Ok(serde_json::to_string(&self.to_bundle()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let bundle: ModelBundle = serde_json::from_str(text)?;
        bundle.into_classifier()
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let text = self.to_json()?;
        std::fs::write(path, text).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// On-disk form of a [`Classifier`]: JSON with the featurizer, the linear
/// model, the tagger in its own text format, and the lexicon entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub feature_version: u32,
    pub spec: ModelSpec,
    pub featurizer: Featurizer,
    pub model: LinearModel,
    pub tagger: String,
    pub lexicon: Vec<(String, f64)>,
}

impl ModelBundle {
    pub fn into_classifier(self) -> Result<Classifier, PipelineError> {
        if self.format_version != BUNDLE_FORMAT_VERSION {
            return Err(PipelineError::BundleVersion {
                expected: BUNDLE_FORMAT_VERSION,
                found: self.format_version,
            });
        }
        if self.feature_version != FEATURE_VERSION {
            return Err(PipelineError::FeatureVersion {
                expected: FEATURE_VERSION,
                found: self.feature_version,
            });
        }
        self.model.validate()?;
        let mut featurizer = self.featurizer;
        featurizer.rebuild_indexes();
        let width = featurizer.input_registry(self.spec.kind).len();
        if width != self.model.input_dim {
            return Err(PipelineError::Inconsistent(format!(
                "featurizer produces {width} columns but the model expects {}",
                self.model.input_dim
            )));
        }
        let tagger = TagModel::load(self.tagger.as_bytes())?;
        let lexicon = SentimentLexicon::from_entries(self.lexicon)?;
        Ok(Classifier {
            spec: self.spec,
            featurizer,
            model: self.model,
            resources: Resources { tagger, lexicon },
        })
    }
}
