//! Finite-difference verification of the reverse pass.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::network::NeuralModel;
use super::NeuralError;
use crate::script::TaggedWord;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Minimum number of coordinates checked across all blocks.
    pub coordinates: usize,
    /// Dropout applied during the check; anything above 0 is a misuse that
    /// the check should detect, since each evaluation draws fresh masks.
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-5,
            coordinates: 200,
            dropout_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates: usize,
    /// Worst relative error per parameter block, in layout order.
    pub per_block: Vec<(String, f64)>,
}

/// `|g − ĝ| / max(1, |g| + |ĝ|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1.0)
}

/// Central-difference estimates of `∂f/∂x[k]` for each `k` in `coords`.
pub fn numeric_gradient<F>(mut f: F, x: &[f64], coords: &[usize], epsilon: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    coords
        .iter()
        .map(|&k| {
            probe[k] = x[k] + epsilon;
            let up = f(&probe);
            probe[k] = x[k] - epsilon;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * epsilon)
        })
        .collect()
}

pub fn grad_check(model: &NeuralModel, sample: &[TaggedWord], epsilon: f64) -> Result<f64, NeuralError> {
    let opts = GradCheckOptions {
        epsilon,
        ..GradCheckOptions::default()
    };
    Ok(grad_check_with(model, sample, &opts)?.max_relative_error)
}

/// Compares the analytic gradient of the summed NLL of `sample` (one padded
/// batch) against central differences on a deterministic subsample of
/// coordinates drawn from every block. Embedding coordinates come from rows
/// of characters that occur in the sample.
pub fn grad_check_with(
    model: &NeuralModel,
    sample: &[TaggedWord],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, NeuralError> {
    if sample.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    let mut ids = Vec::with_capacity(sample.len());
    let mut gold = Vec::with_capacity(sample.len());
    for w in sample {
        if w.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        ids.push(model.encode_chars(&w.chars()));
        gold.push(model.tagset().encode(w).ok_or_else(|| NeuralError::UnknownTag {
            word: w.diacritized(),
        })?);
    }
    let seqs: Vec<&[usize]> = ids.iter().map(Vec::as_slice).collect();
    let golds: Vec<&[usize]> = gold.iter().map(Vec::as_slice).collect();

    let layout = model.layout();
    let mut rng = seed::rng(seed::derive(opts.seed, "gradcheck"));
    let mut used_rows: Vec<usize> = ids.iter().flatten().copied().collect();
    used_rows.sort_unstable();
    used_rows.dedup();
    let candidates: Vec<Vec<usize>> = layout
        .blocks
        .iter()
        .enumerate()
        .map(|(bi, blk)| {
            if bi == 0 {
                used_rows
                    .iter()
                    .flat_map(|&r| blk.offset + r * blk.cols..blk.offset + (r + 1) * blk.cols)
                    .collect()
            } else {
                blk.range().collect()
            }
        })
        .collect();
    // Smallest even share per block that reaches the requested total.
    let largest = candidates.iter().map(Vec::len).max().unwrap_or(0);
    let mut per_block = opts.coordinates.div_ceil(layout.blocks.len()).max(1);
    while per_block < largest
        && candidates.iter().map(|c| c.len().min(per_block)).sum::<usize>() < opts.coordinates
    {
        per_block += 1;
    }
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for (bi, cand) in candidates.iter().enumerate() {
        let take = per_block.min(cand.len());
        let mut chosen: Vec<usize> = cand.choose_multiple(&mut rng, take).copied().collect();
        chosen.sort_unstable();
        coords.extend(chosen.into_iter().map(|c| (bi, c)));
    }

    let params = model.params();
    let mut noise = seed::rng(seed::derive(opts.seed, "gradcheck-dropout"));
    let analytic = if opts.dropout_rate > 0.0 {
        let mut fresh = seed::rng(noise.random());
        model.loss_and_grad(params, &seqs, &golds, Some((&mut fresh, opts.dropout_rate))).1
    } else {
        model.loss_and_grad(params, &seqs, &golds, None).1
    };
    let mut eval = |p: &[f64]| -> f64 {
        if opts.dropout_rate > 0.0 {
            let mut fresh = seed::rng(noise.random());
            model.loss(p, &seqs, &golds, Some((&mut fresh, opts.dropout_rate)))
        } else {
            model.loss(p, &seqs, &golds, None)
        }
    };
    let flat: Vec<usize> = coords.iter().map(|&(_, c)| c).collect();
    let numeric = numeric_gradient(&mut eval, params, &flat, opts.epsilon);

    let mut block_err = vec![0.0f64; layout.blocks.len()];
    for (&(bi, c), num) in coords.iter().zip(&numeric) {
        let e = relative_error(analytic[c], *num);
        block_err[bi] = block_err[bi].max(if e.is_nan() { f64::INFINITY } else { e });
    }
    Ok(GradCheckReport {
        max_relative_error: block_err.iter().copied().fold(0.0, f64::max),
        coordinates: coords.len(),
        per_block: layout
            .blocks
            .iter()
            .zip(block_err)
            .map(|(b, e)| (b.name.clone(), e))
            .collect(),
    })
}
