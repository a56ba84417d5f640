//! Three-way tweet classification (hate speech, offensive, neither): corpus
//! ingestion, tweet preprocessing, POS tagging, lexical features, TF-IDF
//! vectorization, linear models and the evaluation harness.

pub mod config;
pub mod corpus;
pub mod evalharness;
pub mod lexfeat;
pub mod linmodel;
pub mod pipeline;
pub mod postag;
pub mod sparse;
pub mod textproc;
pub mod vectorize;

pub use config::{ModelKind, ModelSpec, PipelineConfig};
pub use corpus::{Label, LabeledTweet};
pub use evalharness::{ConfusionMatrix, MetricsReport};
pub use linmodel::LinearModel;
pub use pipeline::{Classifier, Prediction};
pub use sparse::CsrMatrix;
