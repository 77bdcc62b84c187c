use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rand::seq::SliceRandom;
use tashkil::corpus::{
    compute_stats, cross_dialect_overlap, load_corpus, make_folds, overlap_stats, split_train_validation,
    synth_generate, Corpus, Encoding,
};
use tashkil::crf::{brown_cluster, crf_train, CrfModel};
use tashkil::eval::{run_experiment, write_results, Diacritizer, ExperimentSpec, Hybrid, ModelKind};
use tashkil::lookup::{build_lookup, LookupTable};
use tashkil::neural::{self, NeuralConfig, NeuralModel};
use tashkil::script::{induce_tagset, transliterate, Direction, TaggedWord};
use tashkil::seed;

use crate::config::{stem, RunConfig};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn stats(paths: &[PathBuf], encoding: Encoding, k: usize, seed: u64, out: Option<&Path>) -> anyhow::Result<()> {
    let corpora: Vec<Corpus> = paths
        .iter()
        .map(|p| load_corpus(p, encoding, &stem(p)).with_context(|| format!("parsing {}", p.display())))
        .collect::<Result<_, _>>()?;
    let mut reports: Vec<(String, String)> = Vec::new();
    for c in &corpora {
        let mut r = compute_stats(c.words())?.report();
        if c.len() >= k {
            let folds = make_folds(c, k, seed::derive(seed, &format!("split:{}", c.label())))?;
            let (mut seen, mut cov) = (0.0, 0.0);
            for f in &folds {
                let o = overlap_stats(&c.words_of(&f.train), &c.words_of(&f.test))?;
                seen += o.seen_fraction;
                cov += o.lookup_coverage;
            }
            writeln!(r, "test_seen_pct\t{:.4}", seen / k as f64)?;
            writeln!(r, "test_lookup_coverage_pct\t{:.4}", cov / k as f64)?;
        }
        reports.push((format!("stats_{}.tsv", c.label()), r));
    }
    for (i, a) in corpora.iter().enumerate() {
        for b in corpora.iter().skip(i + 1) {
            let mut r = String::new();
            for (x, y) in [(a, b), (b, a)] {
                let o = cross_dialect_overlap(x, y)?;
                writeln!(r, "{}\t{}\tvocab_overlap_pct\t{:.4}", x.label(), y.label(), o.vocab_overlap)?;
                writeln!(r, "{}\t{}\tform_agreement_pct\t{:.4}", x.label(), y.label(), o.form_agreement)?;
            }
            reports.push((format!("overlap_{}_{}.tsv", a.label(), b.label()), r));
        }
    }
    match out {
        Some(dir) => {
            create_dir(dir)?;
            for (name, text) in &reports {
                write(&dir.join(name), text)?;
            }
        }
        None => {
            for (name, text) in &reports {
                println!("# {name}\n{text}");
            }
        }
    }
    Ok(())
}

pub fn train(config: &RunConfig) -> anyhow::Result<()> {
    let out = config.out_dir()?;
    let corpus = config.load_corpora()?.swap_remove(0);
    create_dir(out)?;
    write(&out.join("config.toml"), config.to_toml())?;

    let all: Vec<&TaggedWord> = corpus.words().collect();
    let table = build_lookup(all.iter().copied())?;
    write(&out.join("lookup.tsv"), table.to_text())?;
    match config.model {
        ModelKind::Lookup => {}
        ModelKind::Crf => {
            let tagset = induce_tagset(all.iter().copied())?;
            let clusters = if config.brown_clusters > 0 {
                let all_idx: Vec<usize> = (0..corpus.len()).collect();
                Some(brown_cluster(&corpus.base_sequences(&all_idx), config.brown_clusters)?)
            } else {
                None
            };
            let (model, report) = crf_train(all.iter().copied(), &tagset, clusters, &config.crf)?;
            write(&out.join("model.json"), model.to_json())?;
            let mut r = String::new();
            writeln!(r, "instances\t{}", report.instances)?;
            writeln!(r, "iterations\t{}", report.iterations)?;
            writeln!(r, "grad_norm\t{:e}", report.grad_norm)?;
            writeln!(r, "stop_reason\t{:?}", report.reason)?;
            r.push_str("\niteration\tpenalized_log_likelihood\n");
            for (i, v) in report.objective_trace.iter().enumerate() {
                writeln!(r, "{i}\t{v:.10}")?;
            }
            write(&out.join("crf_report.tsv"), r)?;
        }
        ModelKind::Dnn => {
            let mut order: Vec<usize> = (0..corpus.len()).collect();
            order.shuffle(&mut seed::rng(seed::derive(config.seed, "train-split")));
            let (tr, va) = split_train_validation(&corpus, &order);
            let verses = |idx: &[usize]| -> Vec<Vec<TaggedWord>> {
                idx.iter().map(|&i| corpus.verses()[i].tokens.clone()).collect()
            };
            let (tr, va) = (verses(&tr), verses(&va));
            let tagset = induce_tagset(all.iter().copied())?;
            let neural = NeuralConfig {
                seed: seed::derive(config.seed, "dnn"),
                ..config.neural.clone()
            };
            let (model, history) = neural::train(&neural, &tr, &va, &tagset)?;
            write(&out.join("model.json"), model.to_json())?;
            write(&out.join("history.json"), serde_json::to_string_pretty(&history)?)?;
            eprintln!(
                "best epoch {} of {}, validation WER {:.2}% (error rate)",
                history.best_epoch,
                history.epochs.len(),
                history.epochs[history.best_epoch].val_wer
            );
        }
        ModelKind::Hybrid => bail!("train a crf or dnn model; the hybrid combines it with lookup.tsv at predict time"),
    }
    Ok(())
}

enum Loaded {
    Lookup(LookupTable),
    Crf(Box<CrfModel>),
    Dnn(Box<NeuralModel>),
}

impl Loaded {
    fn as_diacritizer(&self) -> &dyn Diacritizer {
        match self {
            Loaded::Lookup(t) => t,
            Loaded::Crf(m) => m.as_ref(),
            Loaded::Dnn(m) => m.as_ref(),
        }
    }
}

fn load_model(path: &Path) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if !text.trim_start().starts_with('{') {
        return Ok(Loaded::Lookup(LookupTable::from_text(&text)?));
    }
    let header: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match header.get("format").and_then(|f| f.as_str()) {
        Some("tashkil-crf") => Ok(Loaded::Crf(Box::new(CrfModel::from_json(&text)?))),
        Some("tashkil-bilstm-crf") => Ok(Loaded::Dnn(Box::new(NeuralModel::from_json(&text)?))),
        other => bail!("{}: unrecognized model format {other:?}", path.display()),
    }
}

/// Diacritizes every whitespace-separated token of `input`. A leading
/// `id<TAB>` on a line is copied through.
pub fn predict(
    model: &Path,
    input: &Path,
    hybrid: Option<&Path>,
    encoding: Encoding,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let model = load_model(model)?;
    let table = match hybrid {
        Some(p) => Some(LookupTable::from_text(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?),
        None => None,
    };
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;

    let mut lines: Vec<(Option<&str>, Vec<String>)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let (id, body) = match raw.split_once('\t') {
            Some((id, body)) => (Some(id), body),
            None => (None, raw),
        };
        let mut tokens = Vec::new();
        for t in body.split_whitespace() {
            tokens.push(match encoding {
                Encoding::Buckwalter => t.to_string(),
                Encoding::Arabic => transliterate(t, Direction::ToBuckwalter)
                    .with_context(|| format!("{}: line {}", input.display(), n + 1))?,
            });
        }
        lines.push((id, tokens));
    }
    if let Loaded::Dnn(m) = &model {
        for (n, (_, tokens)) in lines.iter().enumerate() {
            let mut unknown: Vec<char> = tokens.iter().flat_map(|t| m.unknown_chars(t)).collect();
            unknown.sort_unstable();
            unknown.dedup();
            if !unknown.is_empty() {
                eprintln!(
                    "warning: line {}: characters outside the model vocabulary mapped to UNK: {unknown:?}",
                    n + 1
                );
            }
        }
    }

    let bases: Vec<&str> = lines.iter().flat_map(|(_, t)| t.iter().map(String::as_str)).collect();
    let predicted = match &table {
        Some(table) => Hybrid {
            table,
            fallback: model.as_diacritizer(),
        }
        .diacritize_many(&bases)?,
        None => model.as_diacritizer().diacritize_many(&bases)?,
    };
    let mut words = predicted.iter();
    let mut result = String::new();
    for (id, tokens) in &lines {
        if let Some(id) = id {
            result.push_str(id);
            result.push('\t');
        }
        for i in 0..tokens.len() {
            if i > 0 {
                result.push(' ');
            }
            let w = words.next().expect("one prediction per token").diacritized();
            match encoding {
                Encoding::Buckwalter => result.push_str(&w),
                Encoding::Arabic => result.push_str(&transliterate(&w, Direction::ToArabic)?),
            }
        }
        result.push('\n');
    }
    match out {
        Some(p) => write(p, result),
        None => {
            print!("{result}");
            Ok(())
        }
    }
}

pub fn experiment(config: &RunConfig) -> anyhow::Result<()> {
    let out = config.out_dir()?;
    let corpora = config.load_corpora()?;
    create_dir(out)?;
    write(&out.join("config.toml"), config.to_toml())?;
    let spec = ExperimentSpec {
        corpora,
        models: config.models.clone(),
        regimes: config.regimes.clone(),
        k: config.k,
        seed: config.seed,
        crf: config.crf,
        brown_clusters: (config.brown_clusters > 0).then_some(config.brown_clusters),
        neural: config.neural.clone(),
        hybrid_fallback: config.hybrid_fallback,
        jobs: config.jobs,
    };
    let results = run_experiment(&spec)?;
    write_results(&results, out, config.heatmaps)?;
    print!("{}", fs::read_to_string(out.join("summary.tsv"))?);
    Ok(())
}

pub fn synth(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let generated = synth_generate(&config.synth.clone().unwrap_or_default(), config.seed)?;
    create_dir(out)?;
    write(&out.join("config.toml"), config.to_toml())?;
    for c in [&generated.a, &generated.b] {
        write(&out.join(format!("{}.txt", c.label())), c.to_text())?;
    }
    Ok(())
}
