use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{init_model, NeuralModel};
use super::params::CharVocab;
use super::{NeuralConfig, NeuralError};
use crate::script::{TagSet, TaggedWord};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sequence NLL over the epoch's batches (dropout active).
    pub train_loss: f64,
    /// Mean per-sequence NLL on validation (eval mode).
    pub val_loss: f64,
    pub val_wer: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// A training or validation sequence: a word, or a verse joined by spaces.
pub(crate) struct Unit {
    pub chars: Vec<char>,
    /// `None` when a tag falls outside the tag set.
    pub gold: Option<Vec<usize>>,
    pub words: Vec<Range<usize>>,
}

pub(crate) fn make_units(
    verses: &[Vec<TaggedWord>],
    tagset: &TagSet,
    verse_level: bool,
) -> Vec<Unit> {
    let unit = |words: &[TaggedWord]| {
        let mut chars = Vec::new();
        let mut gold = Some(Vec::new());
        let mut spans = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                chars.push(' ');
                if let Some(g) = gold.as_mut() {
                    g.push(0);
                }
            }
            let start = chars.len();
            chars.extend(w.base().chars());
            spans.push(start..chars.len());
            gold = match (gold, tagset.encode(w)) {
                (Some(mut g), Some(e)) => {
                    g.extend(e);
                    Some(g)
                }
                _ => None,
            };
        }
        Unit {
            chars,
            gold,
            words: spans,
        }
    };
    if verse_level {
        verses.iter().filter(|v| !v.is_empty()).map(|v| unit(v)).collect()
    } else {
        verses
            .iter()
            .flatten()
            .filter(|w| !w.is_empty())
            .map(|w| unit(std::slice::from_ref(w)))
            .collect()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Validation loss and WER in eval mode. Each distinct character sequence
/// is run through the network once.
pub(crate) fn evaluate(model: &NeuralModel, units: &[Unit]) -> (f64, f64) {
    let mut distinct: BTreeMap<&[char], usize> = BTreeMap::new();
    for u in units {
        let next = distinct.len();
        distinct.entry(&u.chars).or_insert(next);
    }
    let mut keys: Vec<(&[char], usize)> = distinct.iter().map(|(k, v)| (*k, *v)).collect();
    keys.sort_unstable_by_key(|(_, v)| *v);
    let seqs: Vec<Vec<usize>> = keys.iter().map(|(k, _)| model.encode_chars(k)).collect();
    let ems = model.emissions_many(&seqs);
    let paths: Vec<Vec<usize>> = ems.iter().map(|em| model.viterbi(em)).collect();

    let (mut loss, mut scored) = (0.0, 0usize);
    let (mut words, mut wrong) = (0usize, 0usize);
    for u in units {
        let k = distinct[u.chars.as_slice()];
        match &u.gold {
            Some(g) => {
                loss += model.nll_of(&ems[k], g);
                scored += 1;
                for span in &u.words {
                    words += 1;
                    if paths[k][span.clone()] != g[span.clone()] {
                        wrong += 1;
                    }
                }
            }
            None => {
                words += u.words.len();
                wrong += u.words.len();
            }
        }
    }
    let loss = if scored == 0 { 0.0 } else { loss / scored as f64 };
    let wer = if words == 0 {
        0.0
    } else {
        100.0 * wrong as f64 / words as f64
    };
    (loss, wer)
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Trains a BiLSTM-CRF. `train` and `validation` are verses; with the
/// default word-level setting every token is its own sequence. Returns the
/// parameters of the epoch with the lowest validation WER.
pub fn train(
    config: &NeuralConfig,
    train: &[Vec<TaggedWord>],
    validation: &[Vec<TaggedWord>],
    tagset: &TagSet,
) -> Result<(NeuralModel, TrainHistory), NeuralError> {
    config.validate()?;
    let units = make_units(train, tagset, config.verse_level);
    let val_units = make_units(validation, tagset, config.verse_level);
    if units.is_empty() || val_units.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    let mut train_ids = Vec::with_capacity(units.len());
    let mut train_gold = Vec::with_capacity(units.len());
    for u in &units {
        let gold = u.gold.as_ref().ok_or_else(|| NeuralError::UnknownTag {
            word: u.chars.iter().collect(),
        })?;
        train_gold.push(gold.as_slice());
    }
    let vocab = CharVocab::new(units.iter().flat_map(|u| u.chars.iter().copied()));
    let mut model = init_model(config, vocab, tagset.clone(), config.seed)?;
    for u in &units {
        train_ids.push(model.encode_chars(&u.chars));
    }

    let mut adam = Adam::new(model.parameter_count());
    let mut params = model.params().to_vec();
    let mut best_params = params.clone();
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best_wer = f64::INFINITY;
    let mut order: Vec<usize> = (0..units.len()).collect();
    for epoch in 0..config.max_epochs {
        let lr = config.learning_rate_at(epoch);
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::derive_indexed(config.seed, "shuffle", epoch as u64)));
        let mut total = 0.0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let seqs: Vec<&[usize]> = chunk.iter().map(|&i| train_ids[i].as_slice()).collect();
            let gold: Vec<&[usize]> = chunk.iter().map(|&i| train_gold[i]).collect();
            let mut rng = seed::rng(seed::derive_indexed(
                config.seed,
                "dropout",
                ((epoch as u64) << 32) | bi as u64,
            ));
            let (loss, mut grad) =
                model.loss_and_grad(&params, &seqs, &gold, Some((&mut rng, config.dropout_rate)));
            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(NeuralError::NonFiniteLoss { epoch, batch: bi });
            }
            if let Some(c) = config.clip_norm {
                clip(&mut grad, c);
            }
            adam.step(&mut params, &grad, lr);
            total += loss;
        }
        model.params_mut().copy_from_slice(&params);
        let (val_loss, val_wer) = evaluate(&model, &val_units);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: total / units.len() as f64,
            val_loss,
            val_wer,
            learning_rate: lr,
        });
        if val_wer < best_wer {
            best_wer = val_wer;
            history.best_epoch = epoch;
            best_params.copy_from_slice(&params);
        } else if epoch - history.best_epoch >= config.patience {
            history.stopped_early = true;
            break;
        }
    }
    model.params_mut().copy_from_slice(&best_params);
    Ok((model, history))
}
