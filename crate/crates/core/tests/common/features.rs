//! Feature-extraction checks against values worked out by hand.

use hsol_core::lexfeat::{readability, sentiment_scores, SentimentLexicon};
use hsol_core::textproc::{count_syllables, porter_stem, tokenize};
use hsol_core::vectorize::fit_vocab;

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want}"))
    }
}

/// Two documents `[a b]` and `[a]` with unigrams: `a` is in both (idf 1),
/// `b` in one (idf ln 1.5 + 1); rows are then scaled to unit length.
pub fn tfidf_two_documents() -> Result<String, String> {
    let docs = vec![vec!["a", "b"], vec!["a"]];
    let vocab = fit_vocab(&docs, 1, 1, 1, 1.0).map_err(|e| e.to_string())?;
    if vocab.terms() != ["a", "b"] {
        return Err(format!("vocabulary {:?}", vocab.terms()));
    }
    let idf_b = (3.0f64 / 2.0).ln() + 1.0;
    close("idf(a)", vocab.idf(0), 1.0, 1e-12)?;
    close("idf(b)", vocab.idf(1), idf_b, 1e-12)?;
    let x = vocab.transform_tfidf(&docs);
    let norm = (1.0 + idf_b * idf_b).sqrt();
    close("x[0][a]", x.get(0, 0), 1.0 / norm, 1e-9)?;
    close("x[0][b]", x.get(0, 1), idf_b / norm, 1e-9)?;
    close("x[1][a]", x.get(1, 0), 1.0, 1e-9)?;
    close("x[1][b]", x.get(1, 1), 0.0, 1e-9)?;
    Ok(format!("idf(b)={idf_b:.6}, rows unit length"))
}

/// Flesch formulas with one sentence per tweet.
pub fn readability_cases() -> Result<String, String> {
    for (w, s, ease, grade) in [(10usize, 14usize, 78.245, 4.83), (1, 1, 121.22, -3.40)] {
        let r = readability(w, s).map_err(|e| e.to_string())?;
        close(
            &format!("reading_ease({w},{s})"),
            r.reading_ease,
            ease,
            1e-9,
        )?;
        close(&format!("fk_grade({w},{s})"), r.fk_grade, grade, 1e-9)?;
    }
    Ok("(10,14) and (1,1) exact".into())
}

/// No hit, a single hit of valence 2, and the same hit negated.
pub fn sentiment_cases() -> Result<String, String> {
    let lex = SentimentLexicon::from_entries([("good", 2.0)]).map_err(|e| e.to_string())?;
    let compound = |text: &str| sentiment_scores(&tokenize(text), &lex).compound;
    close("no hit", compound("nothing to see"), 0.0, 1e-6)?;
    close("good", compound("good"), 2.0 / 19.0f64.sqrt(), 1e-6)?;
    let negated = -0.74 * 2.0;
    close(
        "not good",
        compound("not good"),
        negated / (negated * negated + 15.0f64).sqrt(),
        1e-6,
    )?;
    Ok(format!(
        "compounds 0, {:.4}, {:.4}",
        compound("good"),
        compound("not good")
    ))
}

fn golden(name: &str) -> Vec<(String, String)> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{path}: {e}"))
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split_once('\t'))
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

pub fn porter_golden() -> Result<String, String> {
    let rows = golden("stems.golden");
    let misses: Vec<String> = rows
        .iter()
        .filter_map(|(w, want)| match porter_stem(w) {
            Ok(got) if got == *want => None,
            Ok(got) => Some(format!("{w}->{got} (want {want})")),
            Err(e) => Some(format!("{w}: {e}")),
        })
        .collect();
    if misses.is_empty() {
        Ok(format!("{}/{} stems match", rows.len(), rows.len()))
    } else {
        Err(misses.join(", "))
    }
}

pub fn syllable_agreement() -> Result<String, String> {
    let rows = golden("syllables.golden");
    let agree = rows
        .iter()
        .filter(|(w, n)| n.parse::<usize>().ok() == Some(count_syllables(w)))
        .count();
    let share = agree as f64 / rows.len() as f64;
    let msg = format!("{agree}/{} agree", rows.len());
    if share >= 0.90 {
        Ok(msg)
    } else {
        Err(msg)
    }
}
