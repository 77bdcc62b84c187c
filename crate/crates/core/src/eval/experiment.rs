use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    confusion, diacritic_breakdown, score, top_errors, ConfusionMatrix, ErrorBreakdown, ErrorEntry,
    EvalReport, FoldedReport,
};
use super::{Diacritizer, EvalError, Hybrid};
use crate::corpus::{make_folds, split_train_validation, Corpus, FoldSplit};
use crate::crf::{brown_cluster, crf_train, CrfConfig, CrfModel};
use crate::lookup::{build_lookup, LookupTable};
use crate::neural::{self, NeuralConfig, NeuralModel, TrainHistory};
use crate::script::{induce_tagset, TagSet, TaggedWord};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lookup,
    Crf,
    Dnn,
    Hybrid,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lookup => "lookup",
            ModelKind::Crf => "crf",
            ModelKind::Dnn => "dnn",
            ModelKind::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Uni,
    Cross,
    Joint,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Uni => "uni",
            Regime::Cross => "cross",
            Regime::Joint => "joint",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub corpora: Vec<Corpus>,
    pub models: Vec<ModelKind>,
    pub regimes: Vec<Regime>,
    pub k: usize,
    pub seed: u64,
    pub crf: CrfConfig,
    /// Brown cluster count for CRF features; `None` disables them.
    pub brown_clusters: Option<usize>,
    pub neural: NeuralConfig,
    /// Model behind the hybrid's lookup: `Crf` or `Dnn`.
    pub hybrid_fallback: ModelKind,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(corpora: Vec<Corpus>, models: Vec<ModelKind>, regimes: Vec<Regime>) -> ExperimentSpec {
        ExperimentSpec {
            corpora,
            models,
            regimes,
            k: 5,
            seed: 1,
            crf: CrfConfig::default(),
            brown_clusters: Some(50),
            neural: NeuralConfig::default(),
            hybrid_fallback: ModelKind::Dnn,
            jobs: 0,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.corpora.is_empty() || self.corpora.len() > 2 {
            return bad(format!("expected 1 or 2 corpora, got {}", self.corpora.len()));
        }
        if self.corpora.len() == 2 && self.corpora[0].label() == self.corpora[1].label() {
            return bad(format!("corpus labels must differ, both are {:?}", self.corpora[0].label()));
        }
        if self.models.is_empty() || self.regimes.is_empty() {
            return bad("no models or regimes requested".into());
        }
        if !matches!(self.hybrid_fallback, ModelKind::Crf | ModelKind::Dnn) {
            return bad(format!("hybrid fallback must be crf or dnn, got {}", self.hybrid_fallback));
        }
        if self.corpora.len() < 2 {
            if let Some(r) = self.regimes.iter().find(|r| **r != Regime::Uni) {
                return bad(format!("the {r} regime needs two corpora"));
            }
        }
        Ok(())
    }

    fn needs(&self, kind: ModelKind) -> bool {
        self.models.contains(&kind)
            || (self.models.contains(&ModelKind::Hybrid)
                && (kind == self.hybrid_fallback || kind == ModelKind::Lookup))
    }
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub model: ModelKind,
    pub regime: Regime,
    pub train: String,
    pub test: String,
    pub folds: Vec<FoldResult>,
    pub summary: FoldedReport,
    /// Over all folds pooled.
    pub top_errors: Vec<ErrorEntry>,
    pub breakdown: ErrorBreakdown,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    /// Ordered by regime, train set, test set, then model as requested.
    pub cells: Vec<CellResult>,
    /// DNN training histories keyed `regime_train_fold`.
    pub histories: Vec<(String, TrainHistory)>,
}

impl ExperimentResults {
    pub fn cell(&self, model: ModelKind, regime: Regime, train: &str, test: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.regime == regime && c.train == train && c.test == test)
    }

    /// Mean WER over every cell of `model` in `regime`.
    pub fn mean_wer(&self, model: ModelKind, regime: Regime) -> Option<f64> {
        let w: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.model == model && c.regime == regime)
            .map(|c| c.summary.mean_wer)
            .collect();
        (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64)
    }
}

struct TestSet {
    label: String,
    fold: usize,
    words: Vec<TaggedWord>,
}

struct Job {
    regime: Regime,
    train_label: String,
    /// Fold of the training split; `None` for cross, which trains once.
    fold: Option<usize>,
    train: Vec<Vec<TaggedWord>>,
    validation: Vec<Vec<TaggedWord>>,
    tests: Vec<TestSet>,
}

impl Job {
    fn name(&self) -> String {
        match self.fold {
            Some(f) => format!("{}_{}_fold{f}", self.regime, self.train_label),
            None => format!("{}_{}", self.regime, self.train_label),
        }
    }
}

struct Prediction {
    model: ModelKind,
    test: String,
    fold: usize,
    gold: Vec<TaggedWord>,
    predicted: Vec<TaggedWord>,
    tagset: TagSet,
}

fn verses_of(corpus: &Corpus, idx: &[usize]) -> Vec<Vec<TaggedWord>> {
    idx.iter().map(|&i| corpus.verses()[i].tokens.clone()).collect()
}

fn build_jobs(spec: &ExperimentSpec) -> Result<Vec<Job>, EvalError> {
    let folds: Vec<Vec<FoldSplit>> = spec
        .corpora
        .iter()
        .map(|c| make_folds(c, spec.k, seed::derive(spec.seed, &format!("split:{}", c.label()))))
        .collect::<Result<_, _>>()?;
    let test_set = |c: usize, f: &FoldSplit| TestSet {
        label: spec.corpora[c].label().to_string(),
        fold: f.fold_index,
        words: spec.corpora[c].words_of(&f.test),
    };
    let mut jobs = Vec::new();
    for regime in &spec.regimes {
        match regime {
            Regime::Uni => {
                for (ci, c) in spec.corpora.iter().enumerate() {
                    for f in &folds[ci] {
                        jobs.push(Job {
                            regime: Regime::Uni,
                            train_label: c.label().to_string(),
                            fold: Some(f.fold_index),
                            train: verses_of(c, &f.train),
                            validation: verses_of(c, &f.validation),
                            tests: vec![test_set(ci, f)],
                        });
                    }
                }
            }
            Regime::Cross => {
                for (a, b) in [(0, 1), (1, 0)] {
                    let c = &spec.corpora[a];
                    let mut order: Vec<usize> = (0..c.len()).collect();
                    order.shuffle(&mut seed::rng(seed::derive(
                        spec.seed,
                        &format!("cross-split:{}", c.label()),
                    )));
                    let (train, validation) = split_train_validation(c, &order);
                    jobs.push(Job {
                        regime: Regime::Cross,
                        train_label: c.label().to_string(),
                        fold: None,
                        train: verses_of(c, &train),
                        validation: verses_of(c, &validation),
                        tests: folds[b].iter().map(|f| test_set(b, f)).collect(),
                    });
                }
            }
            Regime::Joint => {
                let (a, b) = (&spec.corpora[0], &spec.corpora[1]);
                for (fa, fb) in folds[0].iter().zip(&folds[1]) {
                    let mut train = verses_of(a, &fa.train);
                    train.extend(verses_of(b, &fb.train));
                    let mut validation = verses_of(a, &fa.validation);
                    validation.extend(verses_of(b, &fb.validation));
                    jobs.push(Job {
                        regime: Regime::Joint,
                        train_label: format!("{}+{}", a.label(), b.label()),
                        fold: Some(fa.fold_index),
                        train,
                        validation,
                        tests: vec![test_set(0, fa), test_set(1, fb)],
                    });
                }
            }
        }
    }
    Ok(jobs)
}

fn run_job(spec: &ExperimentSpec, job: &Job) -> Result<(Vec<Prediction>, Option<TrainHistory>), EvalError> {
    let train_words: Vec<&TaggedWord> = job.train.iter().flatten().collect();
    let tagset = induce_tagset(train_words.iter().copied().chain(job.validation.iter().flatten()))?;
    let name = job.name();

    let lookup: Option<LookupTable> = if spec.needs(ModelKind::Lookup) {
        Some(build_lookup(train_words.iter().copied())?)
    } else {
        None
    };
    let crf: Option<CrfModel> = if spec.needs(ModelKind::Crf) {
        let clusters = match spec.brown_clusters {
            Some(k) => {
                let seqs: Vec<Vec<String>> = job
                    .train
                    .iter()
                    .map(|v| v.iter().map(|w| w.base().to_string()).collect())
                    .collect();
                Some(brown_cluster(&seqs, k)?)
            }
            None => None,
        };
        Some(crf_train(train_words.iter().copied(), &tagset, clusters, &spec.crf)?.0)
    } else {
        None
    };
    let mut history = None;
    let dnn: Option<NeuralModel> = if spec.needs(ModelKind::Dnn) {
        let config = NeuralConfig {
            seed: seed::derive_indexed(
                spec.seed,
                &format!("dnn:{}:{}", job.regime, job.train_label),
                job.fold.unwrap_or(0) as u64,
            ),
            ..spec.neural.clone()
        };
        let (model, h) = neural::train(&config, &job.train, &job.validation, &tagset)?;
        history = Some(h);
        Some(model)
    } else {
        None
    };

    let fallback: Option<&dyn Diacritizer> = match spec.hybrid_fallback {
        ModelKind::Crf => crf.as_ref().map(|m| m as &dyn Diacritizer),
        _ => dnn.as_ref().map(|m| m as &dyn Diacritizer),
    };
    let hybrid = match (&lookup, fallback) {
        (Some(table), Some(fallback)) => Some(Hybrid { table, fallback }),
        _ => None,
    };

    let mut out = Vec::new();
    for test in &job.tests {
        let bases: Vec<&str> = test.words.iter().map(TaggedWord::base).collect();
        for &model in &spec.models {
            let d: &dyn Diacritizer = match model {
                ModelKind::Lookup => lookup.as_ref().unwrap(),
                ModelKind::Crf => crf.as_ref().unwrap(),
                ModelKind::Dnn => dnn.as_ref().unwrap(),
                ModelKind::Hybrid => hybrid.as_ref().unwrap(),
            };
            let predicted = d.diacritize_many(&bases).map_err(|e| EvalError::Cell {
                cell: format!("{model}_{name}"),
                source: Box::new(e),
            })?;
            out.push(Prediction {
                model,
                test: test.label.clone(),
                fold: test.fold,
                gold: test.words.clone(),
                predicted,
                tagset: tagset.clone(),
            });
        }
    }
    Ok((out, history))
}

/// Trains and evaluates every requested (model, regime) combination. Jobs
/// run in parallel; results are assembled in a fixed order, so identical
/// specs give identical results.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults, EvalError> {
    spec.validate()?;
    let jobs = build_jobs(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
    let outputs: Vec<Result<_, EvalError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                run_job(spec, job).map_err(|e| match e {
                    e @ EvalError::Cell { .. } => e,
                    e => EvalError::Cell {
                        cell: job.name(),
                        source: Box::new(e),
                    },
                })
            })
            .collect()
    });

    let mut cells: Vec<CellResult> = Vec::new();
    let mut histories = Vec::new();
    let mut pooled: Vec<(Vec<TaggedWord>, Vec<TaggedWord>)> = Vec::new();
    for (job, output) in jobs.iter().zip(outputs) {
        let (predictions, history) = output?;
        if let Some(h) = history {
            histories.push((job.name(), h));
        }
        for p in predictions {
            let report = score(&p.gold, &p.predicted)?;
            let fold = FoldResult {
                fold: p.fold,
                report,
                confusion: confusion(&p.gold, &p.predicted, Some(&p.tagset))?,
            };
            let pos = cells.iter().position(|c| {
                c.model == p.model && c.regime == job.regime && c.train == job.train_label && c.test == p.test
            });
            let i = match pos {
                Some(i) => i,
                None => {
                    cells.push(CellResult {
                        model: p.model,
                        regime: job.regime,
                        train: job.train_label.clone(),
                        test: p.test.clone(),
                        folds: Vec::new(),
                        summary: FoldedReport::default(),
                        top_errors: Vec::new(),
                        breakdown: diacritic_breakdown(&[], &[])?,
                    });
                    pooled.push((Vec::new(), Vec::new()));
                    cells.len() - 1
                }
            };
            cells[i].folds.push(fold);
            pooled[i].0.extend(p.gold);
            pooled[i].1.extend(p.predicted);
        }
    }
    for (cell, (gold, pred)) in cells.iter_mut().zip(&pooled) {
        cell.folds.sort_by_key(|f| f.fold);
        cell.summary = FoldedReport::new(cell.folds.iter().map(|f| f.report).collect());
        cell.top_errors = top_errors(gold, pred, usize::MAX)?;
        cell.breakdown = diacritic_breakdown(gold, pred)?;
    }
    Ok(ExperimentResults { cells, histories })
}
