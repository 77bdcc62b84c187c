//! Error rates, confusion matrices and error analytics over aligned
//! gold/predicted words.
//!
//! CER counts every base character, including positions whose gold tag is
//! NONE. A word is wrong if any of its tags is wrong.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::script::{DiacriticTag, TagSet, TaggedWord};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    /// Character error rate, percent.
    pub cer: f64,
    /// Word error rate, percent.
    pub wer: f64,
    pub token_count: usize,
    pub char_count: usize,
    pub char_errors: usize,
    pub word_errors: usize,
}

/// Per-fold reports with their arithmetic means.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FoldedReport {
    pub folds: Vec<EvalReport>,
    pub mean_cer: f64,
    pub mean_wer: f64,
}

impl FoldedReport {
    pub fn new(folds: Vec<EvalReport>) -> FoldedReport {
        let n = folds.len().max(1) as f64;
        FoldedReport {
            mean_cer: folds.iter().map(|r| r.cer).sum::<f64>() / n,
            mean_wer: folds.iter().map(|r| r.wer).sum::<f64>() / n,
            folds,
        }
    }
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn check_aligned(gold: &[TaggedWord], predicted: &[TaggedWord]) -> Result<(), EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::AlignmentMismatch {
            index: gold.len().min(predicted.len()),
        });
    }
    match gold
        .iter()
        .zip(predicted)
        .position(|(g, p)| g.base() != p.base())
    {
        Some(index) => Err(EvalError::AlignmentMismatch { index }),
        None => Ok(()),
    }
}

/// Mismatched positions as (gold tag, predicted tag, word index).
fn errors<'a>(
    gold: &'a [TaggedWord],
    predicted: &'a [TaggedWord],
) -> impl Iterator<Item = (DiacriticTag, DiacriticTag, usize)> + 'a {
    gold.iter()
        .zip(predicted)
        .enumerate()
        .flat_map(|(w, (g, p))| {
            g.tags()
                .iter()
                .zip(p.tags())
                .filter(|(a, b)| a != b)
                .map(move |(a, b)| (*a, *b, w))
        })
}

pub fn score(gold: &[TaggedWord], predicted: &[TaggedWord]) -> Result<EvalReport, EvalError> {
    check_aligned(gold, predicted)?;
    let char_count: usize = gold.iter().map(TaggedWord::len).sum();
    let char_errors = errors(gold, predicted).count();
    let word_errors = gold.iter().zip(predicted).filter(|(g, p)| g != p).count();
    Ok(EvalReport {
        cer: pct(char_errors, char_count),
        wer: pct(word_errors, gold.len()),
        token_count: gold.len(),
        char_count,
        char_errors,
        word_errors,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<DiacriticTag>,
    /// `counts[gold][predicted]`.
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[DiacriticTag] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn get(&self, gold: DiacriticTag, predicted: DiacriticTag) -> usize {
        match (self.index(gold), self.index(predicted)) {
            (Some(g), Some(p)) => self.counts[g][p],
            _ => 0,
        }
    }

    fn index(&self, t: DiacriticTag) -> Option<usize> {
        self.labels.binary_search(&t).ok()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Grid with a header row of predicted labels and one row per gold label.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in &self.labels {
            write!(out, "\t{l}").unwrap();
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            write!(out, "{l}").unwrap();
            for c in row {
                write!(out, "\t{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Row-normalized heatmap, `cell` pixels per cell, darker = larger share.
    pub fn heatmap(&self, cell: u32) -> image::RgbImage {
        let n = self.labels.len() as u32;
        let mut img = image::RgbImage::new(n * cell, n * cell);
        for (g, row) in self.counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            for (p, &c) in row.iter().enumerate() {
                let share = if total == 0 { 0.0 } else { c as f64 / total as f64 };
                let shade = |full: f64| (255.0 - share * (255.0 - full)).round() as u8;
                let px = image::Rgb([shade(8.0), shade(48.0), shade(107.0)]);
                for y in 0..cell {
                    for x in 0..cell {
                        img.put_pixel(p as u32 * cell + x, g as u32 * cell + y, px);
                    }
                }
            }
        }
        img
    }
}

/// Confusion counts over the union of `tagset` (if given) and every tag in
/// the data.
pub fn confusion(
    gold: &[TaggedWord],
    predicted: &[TaggedWord],
    tagset: Option<&TagSet>,
) -> Result<ConfusionMatrix, EvalError> {
    check_aligned(gold, predicted)?;
    let observed = gold
        .iter()
        .chain(predicted)
        .flat_map(|w| w.tags().iter().copied());
    let labels: Vec<DiacriticTag> = match tagset {
        Some(ts) => TagSet::new(ts.tags().iter().copied().chain(observed)),
        None => TagSet::new(observed),
    }
    .tags()
    .to_vec();
    let mut m = ConfusionMatrix {
        counts: vec![vec![0; labels.len()]; labels.len()],
        labels,
    };
    for (g, p) in gold.iter().zip(predicted) {
        for (a, b) in g.tags().iter().zip(p.tags()) {
            let (i, j) = (m.index(*a).unwrap(), m.index(*b).unwrap());
            m.counts[i][j] += 1;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub gold: DiacriticTag,
    pub predicted: DiacriticTag,
    /// Percent of all erroneous positions.
    pub share: f64,
    pub count: usize,
    /// Up to three (gold word, predicted word) pairs, in corpus order.
    pub examples: Vec<(String, String)>,
}

/// The `n` most frequent (gold, predicted) confusions; ties keep tag order.
pub fn top_errors(
    gold: &[TaggedWord],
    predicted: &[TaggedWord],
    n: usize,
) -> Result<Vec<ErrorEntry>, EvalError> {
    check_aligned(gold, predicted)?;
    let mut cells: BTreeMap<(DiacriticTag, DiacriticTag), (usize, Vec<(String, String)>)> =
        BTreeMap::new();
    let mut total = 0;
    for (a, b, w) in errors(gold, predicted) {
        total += 1;
        let cell = cells.entry((a, b)).or_default();
        cell.0 += 1;
        let pair = (gold[w].diacritized(), predicted[w].diacritized());
        if cell.1.len() < 3 && !cell.1.contains(&pair) {
            cell.1.push(pair);
        }
    }
    let mut entries: Vec<ErrorEntry> = cells
        .into_iter()
        .map(|((g, p), (count, examples))| ErrorEntry {
            gold: g,
            predicted: p,
            share: pct(count, total),
            count,
            examples,
        })
        .collect();
    entries.sort_by(|x, y| y.count.cmp(&x.count));
    entries.truncate(n);
    Ok(entries)
}

pub const BREAKDOWN_MARKS: [char; 5] = ['a', 'u', 'i', 'o', '~'];

/// For each mark, percent of error positions whose gold or predicted tag
/// contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub error_positions: usize,
    pub shares: BTreeMap<char, f64>,
}

pub fn diacritic_breakdown(
    gold: &[TaggedWord],
    predicted: &[TaggedWord],
) -> Result<ErrorBreakdown, EvalError> {
    check_aligned(gold, predicted)?;
    let mut hits = [0usize; 5];
    let mut total = 0;
    for (a, b, _) in errors(gold, predicted) {
        total += 1;
        for (k, d) in BREAKDOWN_MARKS.iter().enumerate() {
            if a.contains(*d) || b.contains(*d) {
                hits[k] += 1;
            }
        }
    }
    Ok(ErrorBreakdown {
        error_positions: total,
        shares: BREAKDOWN_MARKS
            .iter()
            .zip(hits)
            .map(|(d, h)| (*d, pct(h, total)))
            .collect(),
    })
}
