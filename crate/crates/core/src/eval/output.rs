//! Result tables and per-cell artifacts on disk.
//!
//! Layout under the output directory:
//! `results.tsv` (one row per fold), `summary.tsv` (fold means),
//! `grid_{model}.tsv` (train rows × test columns),
//! `confusion/{model}_{regime}_{train}_{test}_fold{k}.tsv` (+ `.png`),
//! `errors/{model}_{regime}_{train}_{test}.tsv` and
//! `histories/dnn_{regime}_{train}[_fold{k}].json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentResults, ModelKind, Regime};
use super::metrics::BREAKDOWN_MARKS;
use super::EvalError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EvalError> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

fn file_label(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "+-".contains(c) { c } else { '-' })
        .collect()
}

pub fn results_tsv(results: &ExperimentResults) -> String {
    let mut out = String::from("model\tregime\ttrain\ttest\tfold\tcer_error_rate\twer_error_rate\ttokens\tchars\n");
    for c in &results.cells {
        for f in &c.folds {
            let r = &f.report;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}",
                c.model, c.regime, c.train, c.test, f.fold, r.cer, r.wer, r.token_count, r.char_count
            )
            .unwrap();
        }
    }
    out
}

pub fn summary_tsv(results: &ExperimentResults) -> String {
    let mut out = String::from("model\tregime\ttrain\ttest\tfolds\tcer_error_rate\twer_error_rate\n");
    for c in &results.cells {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
            c.model,
            c.regime,
            c.train,
            c.test,
            c.folds.len(),
            c.summary.mean_cer,
            c.summary.mean_wer
        )
        .unwrap();
    }
    out
}

/// One row per (regime, train set), a CER and WER column per test set.
pub fn grid_tsv(results: &ExperimentResults, model: ModelKind) -> String {
    let mut tests: Vec<&str> = Vec::new();
    let mut rows: Vec<(Regime, &str)> = Vec::new();
    for c in results.cells.iter().filter(|c| c.model == model) {
        if !tests.contains(&c.test.as_str()) {
            tests.push(&c.test);
        }
        if !rows.contains(&(c.regime, c.train.as_str())) {
            rows.push((c.regime, &c.train));
        }
    }
    let mut out = String::from("regime\ttrain");
    for t in &tests {
        write!(out, "\t{t}_cer_error_rate\t{t}_wer_error_rate").unwrap();
    }
    out.push('\n');
    for (regime, train) in rows {
        write!(out, "{regime}\t{train}").unwrap();
        for t in &tests {
            match results.cell(model, regime, train, t) {
                Some(c) => write!(out, "\t{:.4}\t{:.4}", c.summary.mean_cer, c.summary.mean_wer),
                None => write!(out, "\t-\t-"),
            }
            .unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes every table and artifact; returns the paths written, in order.
pub fn write_results(
    results: &ExperimentResults,
    dir: &Path,
    heatmaps: bool,
) -> Result<Vec<PathBuf>, EvalError> {
    for sub in ["confusion", "errors", "histories"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let mut written = Vec::new();
    let mut put = |path: PathBuf, bytes: &[u8]| -> Result<(), EvalError> {
        write_atomic(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put(dir.join("results.tsv"), results_tsv(results).as_bytes())?;
    put(dir.join("summary.tsv"), summary_tsv(results).as_bytes())?;
    let mut models: Vec<ModelKind> = results.cells.iter().map(|c| c.model).collect();
    models.dedup();
    models.sort();
    models.dedup();
    for m in models {
        put(dir.join(format!("grid_{m}.tsv")), grid_tsv(results, m).as_bytes())?;
    }

    for c in &results.cells {
        let stem = format!("{}_{}_{}_{}", c.model, c.regime, file_label(&c.train), file_label(&c.test));
        for f in &c.folds {
            let base = dir.join("confusion").join(format!("{stem}_fold{}", f.fold));
            put(base.with_extension("tsv"), f.confusion.to_tsv().as_bytes())?;
            if heatmaps {
                let path = base.with_extension("png");
                let mut png = Vec::new();
                f.confusion
                    .heatmap(24)
                    .write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
                    .map_err(|e| EvalError::Image {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                put(path, &png)?;
            }
        }
        let mut t = String::from("gold\tpredicted\tcount\tshare\texamples\n");
        for e in &c.top_errors {
            let ex: Vec<String> = e.examples.iter().map(|(g, p)| format!("{g}>{p}")).collect();
            writeln!(t, "{}\t{}\t{}\t{:.2}\t{}", e.gold, e.predicted, e.count, e.share, ex.join(" ")).unwrap();
        }
        t.push_str("\ndiacritic\tshare_of_errors\n");
        for d in BREAKDOWN_MARKS {
            writeln!(t, "{d}\t{:.2}", c.breakdown.shares[&d]).unwrap();
        }
        put(dir.join("errors").join(format!("{stem}.tsv")), t.as_bytes())?;
    }
    for (name, h) in &results.histories {
        let json = serde_json::to_string_pretty(h).expect("history serializes");
        put(dir.join("histories").join(format!("dnn_{}.json", file_label(name))), json.as_bytes())?;
    }
    Ok(written)
}
