//! Evaluation-harness checks: hand-computed metrics, fold sizes, and a
//! leakage audit of per-fold vocabularies.

use std::collections::BTreeSet;

use hsol_core::corpus::Label::{self, *};
use hsol_core::evalharness::{confusion, kfold_indices, metrics, prepare_folds};
use hsol_core::pipeline::{FeatureSettings, PreparedDoc};
use hsol_core::vectorize::N_SCALARS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn six_point_example() -> Result<String, String> {
    let t = [Hate, Hate, Offensive, Offensive, Neither, Neither];
    let p = [Hate, Offensive, Offensive, Offensive, Neither, Hate];
    let m = metrics(&t, &p).map_err(|e| e.to_string())?;
    let c = confusion(&t, &p).map_err(|e| e.to_string())?;
    let want = [
        (Hate, 0.5, 0.5),
        (Offensive, 2.0 / 3.0, 1.0),
        (Neither, 1.0, 0.5),
    ];
    for (l, prec, rec) in want {
        let got = m.class(l);
        if got.precision != prec || got.recall != rec {
            return Err(format!(
                "{l}: P={} R={}, want {prec} {rec}",
                got.precision, got.recall
            ));
        }
    }
    if c.counts != [[1, 1, 0], [0, 2, 0], [1, 0, 1]] {
        return Err(format!("confusion {:?}", c.counts));
    }
    Ok("per-class P/R and counts exact".into())
}

/// Random label vectors: within each class the k fold shares differ by at
/// most one, and the folds partition the indices.
pub fn fold_size_bounds() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..50 {
        let n = rng.gen_range(10..200);
        let k = rng.gen_range(2..8);
        let labels: Vec<Label> = (0..n).map(|_| Label::ALL[rng.gen_range(0..3)]).collect();
        let folds = kfold_indices(&labels, k, rng.gen()).map_err(|e| e.to_string())?;
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        if all != (0..n).collect::<Vec<_>>() {
            return Err(format!("n={n} k={k}: folds do not partition the indices"));
        }
        for class in Label::ALL {
            let sizes: Vec<usize> = folds
                .iter()
                .map(|f| f.iter().filter(|&&i| labels[i] == class).count())
                .collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            if hi - lo > 1 {
                return Err(format!("n={n} k={k} {class}: fold sizes {sizes:?}"));
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} random label vectors"))
}

fn grams(seq: &[String], lo: usize, hi: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for n in lo..=hi {
        for w in seq.windows(n) {
            out.insert(w.join(" "));
        }
    }
    out
}

fn random_doc(rng: &mut ChaCha8Rng) -> PreparedDoc {
    let len = rng.gen_range(0..10);
    let words = (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..40)))
        .collect();
    let tags = (0..len)
        .map(|_| format!("T{}", rng.gen_range(0..6)))
        .collect();
    let mut scalars = [0.0; N_SCALARS];
    scalars
        .iter_mut()
        .for_each(|s| *s = rng.gen_range(-1.0..1.0));
    PreparedDoc {
        words,
        tags,
        scalars,
    }
}

/// On 10 random corpora, every n-gram in a fold's vocabulary occurs in that
/// fold's training documents, with a document frequency counted there.
pub fn no_fold_leakage() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let settings = FeatureSettings {
        word_ngrams: (1, 3),
        pos_ngrams: (1, 3),
        min_df: 1,
        max_df_ratio: 1.0,
        standardize: true,
    };
    let mut terms_checked = 0;
    for corpus in 0..10 {
        let n = rng.gen_range(30..80);
        let docs: Vec<PreparedDoc> = (0..n).map(|_| random_doc(&mut rng)).collect();
        let y: Vec<Label> = (0..n).map(|i| Label::ALL[i % 3]).collect();
        let folds = kfold_indices(&y, 5, corpus).map_err(|e| e.to_string())?;
        let prepared =
            prepare_folds(&docs, &y, &folds, &settings, None).map_err(|e| e.to_string())?;
        for (f, fold) in prepared.iter().enumerate() {
            let train_words: Vec<BTreeSet<String>> = fold
                .train
                .iter()
                .map(|&i| grams(&docs[i].words, 1, 3))
                .collect();
            let train_tags: Vec<BTreeSet<String>> = fold
                .train
                .iter()
                .map(|&i| grams(&docs[i].tags, 1, 3))
                .collect();
            for (vocab, sets) in [
                (&fold.featurizer.word, &train_words),
                (&fold.featurizer.pos, &train_tags),
            ] {
                if vocab.n_docs() != fold.train.len() {
                    return Err(format!(
                        "corpus {corpus} fold {f}: vocabulary fitted on {} docs",
                        vocab.n_docs()
                    ));
                }
                for term in vocab.terms() {
                    let df = sets.iter().filter(|s| s.contains(term)).count();
                    if df == 0 || vocab.df(term) != Some(df) {
                        return Err(format!(
                            "corpus {corpus} fold {f}: `{term}` df {:?} vs training {df}",
                            vocab.df(term)
                        ));
                    }
                    terms_checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "10 corpora, {terms_checked} fold terms traced to training docs"
    ))
}
