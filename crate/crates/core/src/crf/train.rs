use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::brown::BrownClustering;
use super::features::{extract_features, feature_ids, FeatureIndex};
use super::lbfgs::{minimize, LbfgsSettings, StopReason};
use super::model::{emissions_from, CrfModel};
use super::CrfError;
use crate::lattice::Lattice;
use crate::script::{TagSet, TaggedWord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrfConfig {
    /// Inverse L2 strength; the penalty is `‖w‖² / (2C)`.
    pub c: f64,
    pub max_iter: usize,
    /// Gradient-norm stopping threshold.
    pub tol: f64,
    pub memory: usize,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            c: 10.0,
            max_iter: 200,
            tol: 1e-3,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrfTrainReport {
    /// Penalized log-likelihood after each accepted step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub reason: StopReason,
    /// Distinct (word, tags) training instances.
    pub instances: usize,
}

struct Instance {
    ids: Vec<Vec<u32>>,
    gold: Vec<usize>,
    count: f64,
}

const CHUNKS: usize = 16;

/// Negative penalized log-likelihood and its gradient, reduced over a fixed
/// partition of the instances so the result does not depend on thread count.
fn objective(instances: &[Instance], t: usize, n_state: usize, c: f64, w: &[f64], grad: &mut [f64]) -> f64 {
    let (state, trans) = w.split_at(n_state);
    let chunk = instances.len().div_ceil(CHUNKS).max(1);
    let parts: Vec<(f64, Vec<f64>)> = instances
        .par_chunks(chunk)
        .map(|part| {
            let mut g = vec![0.0; w.len()];
            let mut f = 0.0;
            for inst in part {
                let em = emissions_from(state, t, &inst.ids);
                let lat = Lattice::new(&em, trans, t);
                let m = lat.marginals();
                f += inst.count * (m.log_z - lat.score(&inst.gold));
                for (i, feats) in inst.ids.iter().enumerate() {
                    let p = &m.unary[i * t..(i + 1) * t];
                    let y = inst.gold[i];
                    for &fid in feats {
                        let row = &mut g[fid as usize * t..(fid as usize + 1) * t];
                        row.iter_mut().zip(p).for_each(|(r, p)| *r += inst.count * p);
                        row[y] -= inst.count;
                    }
                }
                let gt = &mut g[n_state..];
                gt.iter_mut()
                    .zip(&m.pairwise)
                    .for_each(|(r, p)| *r += inst.count * p);
                for pair in inst.gold.windows(2) {
                    gt[pair[0] * t + pair[1]] -= inst.count;
                }
            }
            (f, g)
        })
        .collect();
    grad.iter_mut().zip(w).for_each(|(g, w)| *g = w / c);
    let mut f = w.iter().map(|w| w * w).sum::<f64>() / (2.0 * c);
    for (pf, pg) in parts {
        f += pf;
        grad.iter_mut().zip(&pg).for_each(|(g, p)| *g += p);
    }
    f
}

/// Trains a CRF on isolated words. Identical words are collapsed into one
/// weighted instance before optimization.
pub fn crf_train<'a>(
    train: impl IntoIterator<Item = &'a TaggedWord>,
    tagset: &TagSet,
    clusters: Option<BrownClustering>,
    config: &CrfConfig,
) -> Result<(CrfModel, CrfTrainReport), CrfError> {
    if !(config.c > 0.0) {
        return Err(CrfError::Format(format!("C must be positive, got {}", config.c)));
    }
    let mut counts: BTreeMap<(&str, Vec<usize>), usize> = BTreeMap::new();
    for w in train {
        if w.is_empty() {
            continue;
        }
        let gold = tagset.encode(w).ok_or_else(|| CrfError::UnknownTag {
            word: w.diacritized(),
        })?;
        *counts.entry((w.base(), gold)).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(CrfError::EmptyInput);
    }

    let mut keys = Vec::new();
    let chars: Vec<Vec<char>> = counts.keys().map(|(b, _)| b.chars().collect()).collect();
    for cs in &chars {
        for i in 0..cs.len() {
            keys.extend(extract_features(cs, i, clusters.as_ref())?);
        }
    }
    let index = FeatureIndex::from_keys(keys);
    let instances: Vec<Instance> = counts
        .into_iter()
        .zip(&chars)
        .map(|(((_, gold), count), cs)| Instance {
            ids: feature_ids(cs, clusters.as_ref(), &index),
            gold,
            count: count as f64,
        })
        .collect();

    let t = tagset.len();
    let n_state = index.len() * t;
    let dim = n_state + t * t;
    let settings = LbfgsSettings {
        max_iter: config.max_iter,
        tol: config.tol,
        memory: config.memory,
    };
    let out = minimize(
        |w, g| objective(&instances, t, n_state, config.c, w, g),
        vec![0.0; dim],
        settings,
    );
    if out.reason == StopReason::NonFinite {
        return Err(CrfError::NonFiniteObjective {
            iteration: out.iterations,
        });
    }
    let mut model = CrfModel::zeros(tagset.clone(), index, config.c, clusters);
    model.set_weights(&out.x);
    let report = CrfTrainReport {
        objective_trace: out.trace.iter().map(|f| -f).collect(),
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        reason: out.reason,
        instances: instances.len(),
    };
    Ok((model, report))
}
