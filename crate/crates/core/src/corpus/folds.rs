//! Verse-level k-fold splitting with a 7:1 train/validation carve-out.

use rand::seq::SliceRandom;

use super::{Corpus, CorpusError};
use crate::seed;

/// Verse indices (ascending corpus order) of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldSplit {
    pub fn ids<'a>(&self, corpus: &'a Corpus, part: &[usize]) -> Vec<&'a str> {
        part.iter().map(|&i| corpus.verses()[i].id.as_str()).collect()
    }
}

/// Shuffles verses with a seeded permutation, takes slice `i` as the test
/// set of fold `i`, and splits the rest 7:1 into train/validation.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<FoldSplit>, CorpusError> {
    if k < 2 {
        return Err(CorpusError::InvalidK(k));
    }
    let n = corpus.len();
    if n < k {
        return Err(CorpusError::TooFewVerses { verses: n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));

    let mut folds = Vec::with_capacity(k);
    for fold_index in 0..k {
        let start = fold_index * n / k;
        let end = (fold_index + 1) * n / k;
        let mut test = order[start..end].to_vec();
        let rest: Vec<usize> = order[..start]
            .iter()
            .chain(&order[end..])
            .copied()
            .collect();
        let (train, validation) = split_train_validation(corpus, &rest);
        test.sort_unstable();
        folds.push(FoldSplit {
            fold_index,
            train,
            validation,
            test,
        });
    }
    Ok(folds)
}

/// Greedy token-mass assignment: a verse goes to validation whenever
/// validation holds less than one seventh of the training tokens.
/// Input order is preserved as the assignment order; outputs are sorted.
pub fn split_train_validation(corpus: &Corpus, indices: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let (mut train_tokens, mut val_tokens) = (0usize, 0usize);
    for &i in indices {
        let n = corpus.verses()[i].tokens.len();
        if val_tokens * 7 < train_tokens {
            validation.push(i);
            val_tokens += n;
        } else {
            train.push(i);
            train_tokens += n;
        }
    }
    train.sort_unstable();
    validation.sort_unstable();
    (train, validation)
}
