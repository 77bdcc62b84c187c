//! Most-frequent-form lookup and the lookup-first hybrid policy.
//!
//! Serialized form: one line per base type, sorted by base,
//! `base<TAB>form<TAB>count<TAB>total`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::FormInventory;
use crate::script::{is_diacritic, strip_word, ScriptError, TaggedWord};

#[derive(Debug, Error)]
pub enum LookupError {
    #[error("empty input")]
    EmptyInput,
    #[error("query contains diacritic at position {position}")]
    DiacriticsInQuery { position: usize },
    #[error("lookup table line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupEntry {
    pub best_form: TaggedWord,
    pub count: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LookupTable {
    entries: BTreeMap<String, LookupEntry>,
}

/// One entry per base type holding its modal form.
pub fn build_lookup<'a>(
    training_words: impl IntoIterator<Item = &'a TaggedWord>,
) -> Result<LookupTable, LookupError> {
    let inv = FormInventory::from_words(training_words);
    if inv.token_count() == 0 {
        return Err(LookupError::EmptyInput);
    }
    let entries = inv
        .types()
        .iter()
        .map(|(base, tf)| {
            let (best, count) = tf.modal();
            (
                base.clone(),
                LookupEntry {
                    best_form: best.clone(),
                    count,
                    total: tf.total,
                },
            )
        })
        .collect();
    Ok(LookupTable { entries })
}

fn check_query(base: &str) -> Result<(), LookupError> {
    match base.chars().position(is_diacritic) {
        Some(position) => Err(LookupError::DiacriticsInQuery { position }),
        None => Ok(()),
    }
}

impl LookupTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, base: &str) -> Option<&LookupEntry> {
        self.entries.get(base)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &LookupEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (base, e) in &self.entries {
            writeln!(
                out,
                "{base}\t{}\t{}\t{}",
                e.best_form.diacritized(),
                e.count,
                e.total
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<LookupTable, LookupError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let err = |message: String| LookupError::Format {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [base, form, count, total] = fields[..] else {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            };
            let best_form = strip_word(form).map_err(|e: ScriptError| err(e.to_string()))?;
            if best_form.base() != base {
                return Err(err(format!("form {form:?} does not match base {base:?}")));
            }
            let count: usize = count.parse().map_err(|_| err("bad count".into()))?;
            let total: usize = total.parse().map_err(|_| err("bad total".into()))?;
            if count > total || count == 0 {
                return Err(err("count must be in 1..=total".into()));
            }
            entries.insert(
                base.to_string(),
                LookupEntry {
                    best_form,
                    count,
                    total,
                },
            );
        }
        Ok(LookupTable { entries })
    }
}

/// The stored modal form, or `None` for unseen words.
pub fn lookup_diacritize(base: &str, table: &LookupTable) -> Result<Option<TaggedWord>, LookupError> {
    check_query(base)?;
    Ok(table.get(base).map(|e| e.best_form.clone()))
}

/// Table hit → lookup answer; miss → `model_fallback(base)`.
pub fn hybrid_diacritize<E>(
    base: &str,
    table: &LookupTable,
    model_fallback: impl FnOnce(&str) -> Result<TaggedWord, E>,
) -> Result<TaggedWord, E>
where
    E: From<LookupError>,
{
    match lookup_diacritize(base, table)? {
        Some(w) => Ok(w),
        None => model_fallback(base),
    }
}

/// Lookup used on its own: unseen words get all-NONE tags.
pub fn lookup_or_bare(base: &str, table: &LookupTable) -> Result<TaggedWord, LookupError> {
    hybrid_diacritize(base, table, |b| {
        TaggedWord::bare(b).map_err(|_| LookupError::DiacriticsInQuery { position: 0 })
    })
}
