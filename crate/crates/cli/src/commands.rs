use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use hsol_core::config::{PipelineConfig, TrainOn};
use hsol_core::corpus::{
    corpus_stats, parse_corpus, stratified_split_indices, Label, LabeledTweet,
};
use hsol_core::evalharness::{
    confusion, confusion_csv, error_report, grid_csv, grid_search, metrics, metrics_csv,
    render_confusion, render_metrics, ConfusionMatrix, ErrorReport, MetricsReport,
};
use hsol_core::lexfeat::SentimentLexicon;
use hsol_core::pipeline::{
    prepare_all, Classifier, FeatureSettings, PreparedDoc, Resources, Selection,
};
use hsol_core::postag::{parse_conll, train_tagger, TagModel};
use serde_json::json;

use crate::artifacts::Artifacts;

/// Files written by `train`.
pub const TRAIN_ARTIFACTS: [&str; 4] = [
    "model.json",
    "train_report.txt",
    "train_metrics.csv",
    "train_confusion.csv",
];

/// Files written by `evaluate`.
pub const EVALUATE_ARTIFACTS: [&str; 7] = [
    "grid.csv",
    "holdout_metrics.csv",
    "holdout_confusion.csv",
    "insample_metrics.csv",
    "insample_confusion.csv",
    "evaluate_summary.txt",
    "evaluate.json",
];

/// Files written by `report`.
pub const REPORT_ARTIFACTS: [&str; 2] = ["error_report.json", "error_report.txt"];

/// Lines classified per batch by `predict`.
const PREDICT_BATCH: usize = 512;

/// A problem with the invocation itself rather than the data: exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn require_file(what: &str, path: &Path) -> anyhow::Result<()> {
    if path.as_os_str().is_empty() {
        return Err(UsageError(format!("no {what} path configured")).into());
    }
    if !path.is_file() {
        return Err(UsageError(format!("{what} not found: {}", path.display())).into());
    }
    Ok(())
}

fn read_bytes(what: &str, path: &Path) -> anyhow::Result<Vec<u8>> {
    require_file(what, path)?;
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_config(path: &Path, out: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    let text = String::from_utf8(read_bytes("config file", path)?)
        .map_err(|_| UsageError(format!("{} is not UTF-8", path.display())))?;
    let mut cfg =
        PipelineConfig::parse(&text).with_context(|| format!("config {}", path.display()))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    if let Some(out) = out {
        cfg.output_dir = out.to_path_buf();
    }
    Ok(cfg)
}

fn load_corpus(path: &Path) -> anyhow::Result<Vec<LabeledTweet>> {
    let bytes = read_bytes("corpus", path)?;
    parse_corpus(&bytes).context("ingest")
}

/// Labeled records only; the rest (ties, too few coders) are reported and dropped.
fn labeled(corpus: Vec<LabeledTweet>) -> anyhow::Result<(Vec<LabeledTweet>, Vec<Label>)> {
    let total = corpus.len();
    let kept: Vec<LabeledTweet> = corpus.into_iter().filter(|t| t.label.is_some()).collect();
    if kept.len() < total {
        log::info!(
            "dropped {} records without a majority label",
            total - kept.len()
        );
    }
    if kept.is_empty() {
        bail!("ingest: corpus has no labeled records");
    }
    let y = kept.iter().filter_map(|t| t.label).collect();
    Ok((kept, y))
}

fn load_resources(cfg: &PipelineConfig) -> anyhow::Result<Resources> {
    let tagger = TagModel::load(&read_bytes("tagger model", &cfg.tagger)?).context("tagger")?;
    let lex_bytes = read_bytes("lexicon", &cfg.lexicon)?;
    let lex_text =
        String::from_utf8(lex_bytes).map_err(|_| anyhow::anyhow!("lexicon: not UTF-8"))?;
    let lexicon = SentimentLexicon::parse(&lex_text).context("lexicon")?;
    Ok(Resources { tagger, lexicon })
}

fn prepare(texts: &[&str], res: &Resources) -> Vec<PreparedDoc> {
    let t = Instant::now();
    let docs = prepare_all(texts, res);
    log::info!("prepared {} documents in {:.2?}", docs.len(), t.elapsed());
    docs
}

fn fit(
    docs: &[&PreparedDoc],
    y: &[Label],
    spec: hsol_core::config::ModelSpec,
    cfg: &PipelineConfig,
    res: &Resources,
) -> anyhow::Result<Classifier> {
    let t = Instant::now();
    let clf = Classifier::fit(
        docs,
        y,
        spec,
        &FeatureSettings::from_config(cfg),
        Selection::from_config(cfg),
        cfg.solver_options(),
        res.clone(),
    )
    .with_context(|| format!("fit {spec}"))?;
    log::info!(
        "fitted {spec} on {} documents in {:.2?}",
        docs.len(),
        t.elapsed()
    );
    Ok(clf)
}

fn assess(
    clf: &Classifier,
    docs: &[&PreparedDoc],
    y: &[Label],
) -> anyhow::Result<(MetricsReport, ConfusionMatrix)> {
    let predicted: Vec<Label> = clf
        .classify_prepared(docs)
        .context("predict")?
        .iter()
        .map(|p| p.label)
        .collect();
    Ok((metrics(y, &predicted)?, confusion(y, &predicted)?))
}

pub fn ingest(corpus: &Path, csv: Option<&Path>) -> anyhow::Result<()> {
    let records = load_corpus(corpus)?;
    let stats = corpus_stats(&records).context("ingest")?;
    let mismatched = records
        .iter()
        .filter(|t| t.source_class.is_some() && t.label.is_some() && t.source_class != t.label)
        .count();
    let mut out = stats.to_key_value();
    writeln!(out, "class_column_mismatches={mismatched}")?;
    if let Some(path) = csv {
        std::fs::write(path, stats.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{out}");
    Ok(())
}

pub fn tagger_train(
    treebank: &Path,
    output: &Path,
    epochs: usize,
    seed: u64,
) -> anyhow::Result<()> {
    let bytes = read_bytes("treebank", treebank)?;
    let text = String::from_utf8(bytes).map_err(|_| anyhow::anyhow!("treebank: not UTF-8"))?;
    let sentences = parse_conll(&text).context("treebank")?;
    let t = Instant::now();
    let model = train_tagger(&sentences, epochs, seed).context("tagger training")?;
    log::info!(
        "trained tagger on {} sentences in {:.2?}",
        sentences.len(),
        t.elapsed()
    );
    let saved = model.save().context("tagger training")?;
    std::fs::write(output, saved).with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}

pub fn train(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let (records, y) = labeled(load_corpus(&cfg.corpus)?)?;
    let res = load_resources(cfg)?;
    let texts: Vec<&str> = records.iter().map(|t| t.text.as_str()).collect();
    let docs = prepare(&texts, &res);

    let rows: Vec<usize> = match cfg.train_on {
        TrainOn::All => (0..docs.len()).collect(),
        TrainOn::Split => {
            stratified_split_indices(&y, cfg.holdout_fraction, cfg.seed)
                .context("split")?
                .0
        }
    };
    let train_docs: Vec<&PreparedDoc> = rows.iter().map(|&i| &docs[i]).collect();
    let train_y: Vec<Label> = rows.iter().map(|&i| y[i]).collect();
    let spec = cfg.model_spec();
    let clf = fit(&train_docs, &train_y, spec, cfg, &res)?;
    let (m, c) = assess(&clf, &train_docs, &train_y)?;

    let model = &clf.model;
    if !model.converged() {
        log::warn!(
            "solver did not converge for every class within {} iterations",
            cfg.max_iter
        );
    }
    let mut report = String::new();
    writeln!(report, "model={spec}")?;
    writeln!(report, "train_on={}", cfg.train_on)?;
    writeln!(report, "n_train={}", train_y.len())?;
    writeln!(report, "word_vocabulary={}", clf.featurizer.word.len())?;
    writeln!(report, "pos_vocabulary={}", clf.featurizer.pos.len())?;
    writeln!(report, "input_columns={}", model.input_dim)?;
    writeln!(report, "selected_columns={}", model.dim())?;
    writeln!(report, "converged={}", model.converged())?;
    for (class, meta) in model.classes.iter().zip(&model.train_meta) {
        writeln!(
            report,
            "{class}.iterations={} {class}.objective={} {class}.converged={}",
            meta.iterations, meta.objective, meta.converged
        )?;
    }
    writeln!(report, "\nin-sample metrics\n{}", render_metrics(&m))?;
    writeln!(report, "in-sample confusion\n{}", render_confusion(&c))?;

    let mut files = Artifacts::default();
    files.add(TRAIN_ARTIFACTS[0], clf.to_json().context("model")?);
    files.add(TRAIN_ARTIFACTS[1], report);
    files.add(TRAIN_ARTIFACTS[2], metrics_csv(&m));
    files.add(TRAIN_ARTIFACTS[3], confusion_csv(&c));
    files.commit(&cfg.output_dir)?;
    log::info!("train finished in {:.2?}", started.elapsed());
    Ok(())
}

pub fn evaluate(cfg: &PipelineConfig) -> anyhow::Result<()> {
    let started = Instant::now();
    let (records, y) = labeled(load_corpus(&cfg.corpus)?)?;
    let res = load_resources(cfg)?;
    let texts: Vec<&str> = records.iter().map(|t| t.text.as_str()).collect();
    let docs = prepare(&texts, &res);

    let (train_idx, holdout_idx) =
        stratified_split_indices(&y, cfg.holdout_fraction, cfg.seed).context("split")?;
    let train_docs: Vec<PreparedDoc> = train_idx.iter().map(|&i| docs[i].clone()).collect();
    let train_y: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
    let holdout_docs: Vec<&PreparedDoc> = holdout_idx.iter().map(|&i| &docs[i]).collect();
    let holdout_y: Vec<Label> = holdout_idx.iter().map(|&i| y[i]).collect();

    let t = Instant::now();
    let grid = grid_search(
        &train_docs,
        &train_y,
        &cfg.grid(),
        &FeatureSettings::from_config(cfg),
        Selection::from_config(cfg),
        cfg.solver_options(),
        cfg.folds,
        cfg.seed,
    )
    .context("grid search")?;
    log::info!(
        "grid search over {} settings in {:.2?}",
        grid.rows.len(),
        t.elapsed()
    );
    let best = grid.best_row().clone();

    let train_refs: Vec<&PreparedDoc> = train_docs.iter().collect();
    let clf = fit(&train_refs, &train_y, best.spec, cfg, &res)?;
    let (hm, hc) = assess(&clf, &holdout_docs, &holdout_y)?;

    let all_refs: Vec<&PreparedDoc> = docs.iter().collect();
    let full = fit(&all_refs, &y, best.spec, cfg, &res)?;
    let (im, ic) = assess(&full, &all_refs, &y)?;

    let mut summary = String::new();
    writeln!(summary, "best={}", best.spec)?;
    writeln!(
        summary,
        "cv_weighted_f1={:.4} +/- {:.4} over {} folds",
        best.mean_f1, best.std_f1, cfg.folds
    )?;
    writeln!(
        summary,
        "n_train={} n_holdout={}",
        train_y.len(),
        holdout_y.len()
    )?;
    writeln!(summary, "\nholdout metrics\n{}", render_metrics(&hm))?;
    writeln!(summary, "holdout confusion\n{}", render_confusion(&hc))?;
    writeln!(
        summary,
        "in-sample metrics (best setting refitted on all records)\n{}",
        render_metrics(&im)
    )?;
    writeln!(summary, "in-sample confusion\n{}", render_confusion(&ic))?;

    let doc = json!({
        "best": best,
        "grid": grid.rows,
        "n_train": train_y.len(),
        "n_holdout": holdout_y.len(),
        "holdout": { "metrics": hm, "confusion": hc },
        "in_sample": { "metrics": im, "confusion": ic },
    });

    let mut files = Artifacts::default();
    files.add(EVALUATE_ARTIFACTS[0], grid_csv(&grid));
    files.add(EVALUATE_ARTIFACTS[1], metrics_csv(&hm));
    files.add(EVALUATE_ARTIFACTS[2], confusion_csv(&hc));
    files.add(EVALUATE_ARTIFACTS[3], metrics_csv(&im));
    files.add(EVALUATE_ARTIFACTS[4], confusion_csv(&ic));
    files.add(EVALUATE_ARTIFACTS[5], summary);
    files.add(
        EVALUATE_ARTIFACTS[6],
        serde_json::to_string_pretty(&doc)? + "\n",
    );
    files.commit(&cfg.output_dir)?;
    log::info!("evaluate finished in {:.2?}", started.elapsed());
    Ok(())
}

fn write_predictions(
    out: &mut impl Write,
    clf: &Classifier,
    batch: &[String],
) -> anyhow::Result<()> {
    for p in clf.classify(batch).context("predict")? {
        let [h, o, n] = p.scores;
        writeln!(out, "{}\t{h}\t{o}\t{n}", p.label)?;
    }
    Ok(())
}

pub fn predict(model: &Path, input: Option<&Path>) -> anyhow::Result<()> {
    require_file("model file", model)?;
    let clf = Classifier::load(model).context("model")?;
    let reader: Box<dyn Read> = match input {
        Some(p) => {
            require_file("input", p)?;
            Box::new(std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)
        }
        None => Box::new(std::io::stdin().lock()),
    };
    let mut reader = BufReader::new(reader);
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());

    let mut batch: Vec<String> = Vec::with_capacity(PREDICT_BATCH);
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader
            .read_until(b'\n', &mut buf)
            .context("reading input")?
            == 0
        {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        let line = String::from_utf8(std::mem::take(&mut buf))
            .map_err(|_| anyhow::anyhow!("input line {line_no} is not valid UTF-8"))?;
        batch.push(line);
        if batch.len() == PREDICT_BATCH {
            write_predictions(&mut out, &clf, &batch)?;
            batch.clear();
        }
    }
    write_predictions(&mut out, &clf, &batch)?;
    out.flush()?;
    Ok(())
}

fn render_error_report(r: &ErrorReport) -> anyhow::Result<String> {
    let mut s = String::new();
    writeln!(s, "top weights")?;
    for (class, entries) in &r.top_weights {
        writeln!(s, "  {class}")?;
        for e in entries {
            writeln!(s, "    {:+.4}  {:<12} {}", e.value, e.block.name(), e.name)?;
        }
    }
    for b in &r.buckets {
        writeln!(
            s,
            "\ntrue={} predicted={} total={}",
            b.truth, b.predicted, b.total
        )?;
        for e in &b.entries {
            writeln!(
                s,
                "  {:.4}  [{}]  {}",
                e.score,
                e.id,
                e.text.replace('\n', " ")
            )?;
        }
    }
    Ok(s)
}

pub fn report(cfg: &PipelineConfig, model: Option<&Path>) -> anyhow::Result<()> {
    let model_path: PathBuf =
        model.map_or_else(|| cfg.output_dir.join("model.json"), Path::to_path_buf);
    require_file("model file", &model_path)?;
    let clf = Classifier::load(&model_path).context("model")?;
    let (records, _) = labeled(load_corpus(&cfg.corpus)?)?;
    let texts: Vec<&str> = records.iter().map(|t| t.text.as_str()).collect();
    let docs = prepare(&texts, &clf.resources);
    let x = clf.inputs(&docs);
    let r = error_report(&clf, &x, &records, cfg.top_n).context("report")?;

    let mut files = Artifacts::default();
    files.add(
        REPORT_ARTIFACTS[0],
        serde_json::to_string_pretty(&r)? + "\n",
    );
    files.add(REPORT_ARTIFACTS[1], render_error_report(&r)?);
    files.commit(&cfg.output_dir)
}
