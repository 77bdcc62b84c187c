//! Forms-per-word statistics, train/test overlap and cross-dialect overlap.
//!
//! A word type is its exact undiacritized base string. The modal form of a
//! type is its most frequent diacritized form, ties broken by the
//! lexicographically smallest Buckwalter string.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Corpus, CorpusError};
use crate::script::TaggedWord;

/// Diacritized-form counts per base type.
#[derive(Debug, Clone, Default)]
pub struct FormInventory {
    types: BTreeMap<String, TypeForms>,
    tokens: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TypeForms {
    /// Form string → (count, the word itself).
    pub forms: BTreeMap<String, (usize, TaggedWord)>,
    pub total: usize,
}

impl TypeForms {
    /// (modal form, its count).
    pub fn modal(&self) -> (&TaggedWord, usize) {
        let mut best: Option<(&TaggedWord, usize)> = None;
        for (count, word) in self.forms.values() {
            if best.is_none_or(|(_, c)| *count > c) {
                best = Some((word, *count));
            }
        }
        best.expect("type has at least one form")
    }

    pub fn modal_form(&self) -> &str {
        let mut best: Option<(&str, usize)> = None;
        for (form, (count, _)) in &self.forms {
            if best.is_none_or(|(_, c)| *count > c) {
                best = Some((form, *count));
            }
        }
        best.expect("type has at least one form").0
    }
}

impl FormInventory {
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a TaggedWord>) -> FormInventory {
        let mut inv = FormInventory::default();
        for w in words {
            inv.tokens += 1;
            let entry = inv.types.entry(w.base().to_string()).or_default();
            entry.total += 1;
            entry
                .forms
                .entry(w.diacritized())
                .or_insert_with(|| (0, w.clone()))
                .0 += 1;
        }
        inv
    }

    pub fn types(&self) -> &BTreeMap<String, TypeForms> {
        &self.types
    }

    pub fn get(&self, base: &str) -> Option<&TypeForms> {
        self.types.get(base)
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn token_count(&self) -> usize {
        self.tokens
    }
}

/// Summary of a training collection. Percentages are in [0, 100].
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub types: usize,
    pub tokens: usize,
    /// Share of types with 1, 2, 3, 4 and ≥5 distinct diacritized forms.
    pub forms_per_word_histogram: [f64; 5],
    /// Token accuracy of always emitting each type's modal form.
    pub most_freq_accuracy: f64,
    /// Among types with more than one form: share whose modal form covers
    /// more than 99% of its tokens.
    pub dominant_form_ge99_pct: f64,
    /// Among types with more than one form: share whose modal form covers
    /// less than 70% of its tokens.
    pub dominant_form_lt70_pct: f64,
}

pub const HISTOGRAM_BUCKETS: [&str; 5] = ["1", "2", "3", "4", "ge5"];

impl CorpusStats {
    /// Flat `key<TAB>value` report, one metric per line.
    pub fn report(&self) -> String {
        let mut out = String::new();
        writeln!(out, "types\t{}", self.types).unwrap();
        writeln!(out, "tokens\t{}", self.tokens).unwrap();
        for (bucket, pct) in HISTOGRAM_BUCKETS.iter().zip(self.forms_per_word_histogram) {
            writeln!(out, "forms_{bucket}_pct\t{pct:.4}").unwrap();
        }
        writeln!(out, "most_freq_accuracy\t{:.4}", self.most_freq_accuracy).unwrap();
        writeln!(out, "dominant_form_ge99_pct\t{:.4}", self.dominant_form_ge99_pct).unwrap();
        writeln!(out, "dominant_form_lt70_pct\t{:.4}", self.dominant_form_lt70_pct).unwrap();
        out
    }
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn compute_stats<'a>(
    training_words: impl IntoIterator<Item = &'a TaggedWord>,
) -> Result<CorpusStats, CorpusError> {
    let inv = FormInventory::from_words(training_words);
    if inv.token_count() == 0 {
        return Err(CorpusError::EmptyInput);
    }
    let mut buckets = [0usize; 5];
    let mut modal_hits = 0;
    let (mut multi, mut ge99, mut lt70) = (0usize, 0usize, 0usize);
    for tf in inv.types().values() {
        let n_forms = tf.forms.len();
        buckets[n_forms.min(5) - 1] += 1;
        let (_, count) = tf.modal();
        modal_hits += count;
        if n_forms > 1 {
            multi += 1;
            let share = count as f64 / tf.total as f64;
            if share > 0.99 {
                ge99 += 1;
            }
            if share < 0.70 {
                lt70 += 1;
            }
        }
    }
    let types = inv.type_count();
    Ok(CorpusStats {
        types,
        tokens: inv.token_count(),
        forms_per_word_histogram: buckets.map(|b| pct(b, types)),
        most_freq_accuracy: pct(modal_hits, inv.token_count()),
        dominant_form_ge99_pct: pct(ge99, multi),
        dominant_form_lt70_pct: pct(lt70, multi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    /// % of test tokens whose base occurs in training.
    pub seen_fraction: f64,
    /// % of test tokens whose form equals the training modal form of its base.
    pub lookup_coverage: f64,
}

pub fn overlap_stats<'a>(
    train: impl IntoIterator<Item = &'a TaggedWord>,
    test: impl IntoIterator<Item = &'a TaggedWord>,
) -> Result<Overlap, CorpusError> {
    let inv = FormInventory::from_words(train);
    if inv.token_count() == 0 {
        return Err(CorpusError::EmptyInput);
    }
    let (mut n, mut seen, mut covered) = (0usize, 0usize, 0usize);
    for w in test {
        n += 1;
        if let Some(tf) = inv.get(w.base()) {
            seen += 1;
            if tf.modal().0 == w {
                covered += 1;
            }
        }
    }
    if n == 0 {
        return Err(CorpusError::EmptyInput);
    }
    Ok(Overlap {
        seen_fraction: pct(seen, n),
        lookup_coverage: pct(covered, n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DialectOverlap {
    /// % of the first corpus's types also present in the second.
    pub vocab_overlap: f64,
    /// Among shared types, % whose modal forms agree (0 when none are shared).
    pub form_agreement: f64,
}

pub fn cross_dialect_overlap(a: &Corpus, b: &Corpus) -> Result<DialectOverlap, CorpusError> {
    let ia = FormInventory::from_words(a.words());
    let ib = FormInventory::from_words(b.words());
    if ia.token_count() == 0 || ib.token_count() == 0 {
        return Err(CorpusError::EmptyInput);
    }
    let (mut shared, mut agree) = (0usize, 0usize);
    for (base, tf) in ia.types() {
        if let Some(other) = ib.get(base) {
            shared += 1;
            if tf.modal_form() == other.modal_form() {
                agree += 1;
            }
        }
    }
    Ok(DialectOverlap {
        vocab_overlap: pct(shared, ia.type_count()),
        form_agreement: pct(agree, shared),
    })
}
