//! The bundled synthetic corpus run through the full pipeline.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hsol_core::config::{ModelKind, PipelineConfig};
use hsol_core::corpus::{parse_corpus, stratified_split_indices, Label, LabeledTweet};
use hsol_core::evalharness::{grid_search, metrics, GridSearchResult, MetricsReport};
use hsol_core::lexfeat::SentimentLexicon;
use hsol_core::pipeline::{
    prepare_all, Classifier, FeatureSettings, PreparedDoc, Resources, Selection,
};
use hsol_core::postag::TagModel;

/// Construction keywords of the synthetic hate class.
pub const HATE_KEYWORDS: [&str; 8] = [
    "vorpak", "skrell", "grommish", "zubbler", "threx", "kazzik", "morvul", "drenth",
];

pub fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

pub fn toy_config() -> PipelineConfig {
    let path = repo_path("data/toy/toy.conf");
    let mut cfg = PipelineConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    cfg.resolve_paths(path.parent().unwrap());
    cfg
}

pub fn load_resources(tagger: &Path, lexicon: &Path) -> Resources {
    Resources {
        tagger: TagModel::load(&std::fs::read(tagger).unwrap()).unwrap(),
        lexicon: SentimentLexicon::parse(&std::fs::read_to_string(lexicon).unwrap()).unwrap(),
    }
}

pub struct Prepared {
    pub cfg: PipelineConfig,
    pub records: Vec<LabeledTweet>,
    pub y: Vec<Label>,
    pub docs: Vec<PreparedDoc>,
    pub resources: Resources,
}

pub fn prepare_corpus(cfg: PipelineConfig) -> Prepared {
    let records: Vec<LabeledTweet> = parse_corpus(&std::fs::read(&cfg.corpus).unwrap())
        .unwrap()
        .into_iter()
        .filter(|t| t.label.is_some())
        .collect();
    let y = records.iter().map(|t| t.label.unwrap()).collect();
    let resources = load_resources(&cfg.tagger, &cfg.lexicon);
    let texts: Vec<&str> = records.iter().map(|t| t.text.as_str()).collect();
    let docs = prepare_all(&texts, &resources);
    Prepared {
        cfg,
        records,
        y,
        docs,
        resources,
    }
}

pub fn prepare_toy() -> Prepared {
    prepare_corpus(toy_config())
}

impl Prepared {
    pub fn fit(&self, rows: &[usize], spec: hsol_core::config::ModelSpec) -> Classifier {
        let docs: Vec<&PreparedDoc> = rows.iter().map(|&i| &self.docs[i]).collect();
        let y: Vec<Label> = rows.iter().map(|&i| self.y[i]).collect();
        Classifier::fit(
            &docs,
            &y,
            spec,
            &FeatureSettings::from_config(&self.cfg),
            Selection::from_config(&self.cfg),
            self.cfg.solver_options(),
            self.resources.clone(),
        )
        .unwrap()
    }

    pub fn assess(&self, clf: &Classifier, rows: &[usize]) -> MetricsReport {
        let docs: Vec<&PreparedDoc> = rows.iter().map(|&i| &self.docs[i]).collect();
        let truth: Vec<Label> = rows.iter().map(|&i| self.y[i]).collect();
        let pred: Vec<Label> = clf
            .classify_prepared(&docs)
            .unwrap()
            .iter()
            .map(|p| p.label)
            .collect();
        metrics(&truth, &pred).unwrap()
    }
}

/// Outcome of the evaluate flow: holdout split, grid search on the rest,
/// refit of the best setting, holdout scoring.
pub struct Evaluation {
    pub grid: GridSearchResult,
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
    pub holdout_metrics: MetricsReport,
    pub best: Classifier,
    pub elapsed: Duration,
}

pub fn evaluate(p: &Prepared) -> Evaluation {
    let started = Instant::now();
    let (train, holdout) =
        stratified_split_indices(&p.y, p.cfg.holdout_fraction, p.cfg.seed).unwrap();
    let docs: Vec<PreparedDoc> = train.iter().map(|&i| p.docs[i].clone()).collect();
    let y: Vec<Label> = train.iter().map(|&i| p.y[i]).collect();
    let grid = grid_search(
        &docs,
        &y,
        &p.cfg.grid(),
        &FeatureSettings::from_config(&p.cfg),
        Selection::from_config(&p.cfg),
        p.cfg.solver_options(),
        p.cfg.folds,
        p.cfg.seed,
    )
    .unwrap();
    let best = p.fit(&train, grid.best_row().spec);
    let holdout_metrics = p.assess(&best, &holdout);
    Evaluation {
        grid,
        train,
        holdout,
        holdout_metrics,
        best,
        elapsed: started.elapsed(),
    }
}

/// Best mean CV F1 among linear rows and among naive Bayes rows.
pub fn best_by_family(grid: &GridSearchResult) -> (f64, f64) {
    let best = |nb: bool| {
        grid.rows
            .iter()
            .filter(|r| r.error.is_none() && (r.spec.kind == ModelKind::Nb) == nb)
            .map(|r| r.mean_f1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    (best(false), best(true))
}

/// Mean CV weighted F1 ≥ 0.95 and holdout F1 ≥ 0.90 within 60 s.
pub fn toy_end_to_end() -> Result<String, String> {
    let started = Instant::now();
    let p = prepare_toy();
    let e = evaluate(&p);
    let elapsed = started.elapsed();
    let cv = e.grid.best_row().mean_f1;
    let ho = e.holdout_metrics.weighted_f1;
    let msg = format!(
        "best {} cv F1 {cv:.4}, holdout F1 {ho:.4}, {:.1}s",
        e.grid.best_row().spec,
        elapsed.as_secs_f64()
    );
    if cv >= 0.95 && ho >= 0.90 && elapsed < Duration::from_secs(60) {
        Ok(msg)
    } else {
        Err(msg)
    }
}
