//! Verse-aligned corpora: ingestion, fold splitting, statistics and a
//! synthetic two-dialect generator.
//!
//! File format: one verse per line, `verse-id<TAB>token token ...`, UTF-8,
//! tokens diacritized in Buckwalter or Arabic script.

pub mod folds;
pub mod stats;
pub mod synth;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::script::{strip_word, transliterate, Direction, ScriptError, TaggedWord};

pub use folds::{make_folds, split_train_validation, FoldSplit};
pub use stats::{
    compute_stats, cross_dialect_overlap, overlap_stats, CorpusStats, DialectOverlap, FormInventory,
    Overlap,
};
pub use synth::{synth_generate, SynthConfig, SynthLexicon, SynthOutput};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {source}")]
    Parse {
        line: usize,
        column: usize,
        #[source]
        source: ScriptError,
    },
    #[error("line {line}: expected `verse-id<TAB>tokens`")]
    MalformedLine { line: usize },
    #[error("line {line}: verse has no tokens")]
    EmptyVerse { line: usize },
    #[error("line {line}: duplicate verse id {id:?}")]
    DuplicateVerseId { id: String, line: usize },
    #[error("{verses} verses cannot be split into {k} folds")]
    TooFewVerses { verses: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Arabic,
    #[default]
    Buckwalter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verse {
    pub id: String,
    pub tokens: Vec<TaggedWord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    label: String,
    verses: Vec<Verse>,
}

impl Corpus {
    /// Builds a corpus, rejecting empty verses and duplicate ids.
    pub fn new(label: impl Into<String>, verses: Vec<Verse>) -> Result<Corpus, CorpusError> {
        let mut ids = HashSet::with_capacity(verses.len());
        for (i, v) in verses.iter().enumerate() {
            if v.tokens.is_empty() {
                return Err(CorpusError::EmptyVerse { line: i + 1 });
            }
            if !ids.insert(v.id.as_str()) {
                return Err(CorpusError::DuplicateVerseId {
                    id: v.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Corpus {
            label: label.into(),
            verses,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn verses(&self) -> &[Verse] {
        &self.verses
    }

    pub fn len(&self) -> usize {
        self.verses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verses.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.verses.iter().map(|v| v.tokens.len()).sum()
    }

    pub fn words(&self) -> impl Iterator<Item = &TaggedWord> {
        self.verses.iter().flat_map(|v| v.tokens.iter())
    }

    /// Tokens of the verses at `indices`, in the given order.
    pub fn words_of(&self, indices: &[usize]) -> Vec<TaggedWord> {
        indices
            .iter()
            .flat_map(|&i| self.verses[i].tokens.iter().cloned())
            .collect()
    }

    /// Verses at `indices` as base-string sequences (for cluster induction).
    pub fn base_sequences(&self, indices: &[usize]) -> Vec<Vec<String>> {
        indices
            .iter()
            .map(|&i| {
                self.verses[i]
                    .tokens
                    .iter()
                    .map(|t| t.base().to_string())
                    .collect()
            })
            .collect()
    }

    /// Serializes in the corpus file format (Buckwalter).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.verses {
            out.push_str(&v.id);
            out.push('\t');
            for (i, t) in v.tokens.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&t.diacritized());
            }
            out.push('\n');
        }
        out
    }
}

/// Parses corpus text. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines, columns are 1-based character offsets.
pub fn parse_corpus(
    text: &str,
    encoding: Encoding,
    dialect_label: &str,
) -> Result<Corpus, CorpusError> {
    let mut verses = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let (id, rest) = raw
            .split_once('\t')
            .ok_or(CorpusError::MalformedLine { line })?;
        if id.is_empty() {
            return Err(CorpusError::MalformedLine { line });
        }
        let mut column = id.chars().count() + 2;
        let mut tokens = Vec::new();
        for piece in rest.split(' ') {
            let width = piece.chars().count();
            if !piece.is_empty() {
                tokens.push(parse_token(piece, encoding).map_err(|(pos, source)| {
                    CorpusError::Parse {
                        line,
                        column: column + pos,
                        source,
                    }
                })?);
            }
            column += width + 1;
        }
        if tokens.is_empty() {
            return Err(CorpusError::EmptyVerse { line });
        }
        if !ids.insert(id.to_string()) {
            return Err(CorpusError::DuplicateVerseId {
                id: id.to_string(),
                line,
            });
        }
        verses.push(Verse {
            id: id.to_string(),
            tokens,
        });
    }
    Ok(Corpus {
        label: dialect_label.to_string(),
        verses,
    })
}

fn parse_token(piece: &str, encoding: Encoding) -> Result<TaggedWord, (usize, ScriptError)> {
    let bw;
    let token = match encoding {
        Encoding::Buckwalter => piece,
        Encoding::Arabic => {
            bw = transliterate(piece, Direction::ToBuckwalter).map_err(|e| (error_pos(&e), e))?;
            &bw
        }
    };
    strip_word(token).map_err(|e| (error_pos(&e), e))
}

fn error_pos(e: &ScriptError) -> usize {
    match e {
        ScriptError::UnmappableCharacter { position, .. }
        | ScriptError::LeadingDiacritic { position }
        | ScriptError::MalformedCombination { position }
        | ScriptError::Whitespace { position }
        | ScriptError::DiacriticInBase { position, .. } => *position,
        _ => 0,
    }
}

pub fn load_corpus(
    path: &Path,
    encoding: Encoding,
    dialect_label: &str,
) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text, encoding, dialect_label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_verse() {
        let c = parse_corpus("mt10:12\thaA*aA\n", Encoding::Buckwalter, "MOR").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.word_count(), 1);
        assert_eq!(c.verses()[0].id, "mt10:12");
        assert_eq!(c.label(), "MOR");
    }

    #[test]
    fn parses_arabic_encoding() {
        let ar = transliterate("haA*aA wololobolaAyoSo", Direction::ToArabic).unwrap();
        let c = parse_corpus(&format!("v1\t{ar}"), Encoding::Arabic, "MOR").unwrap();
        let words: Vec<String> = c.words().map(|w| w.diacritized()).collect();
        assert_eq!(words, ["haA*aA", "wololobolaAyoSo"]);
    }

    #[test]
    fn leading_diacritic_names_line_and_column() {
        let err = parse_corpus("v1\tbaA\nv2\tki ab\n", Encoding::Buckwalter, "X").unwrap_err();
        match err {
            CorpusError::Parse {
                line,
                column,
                source,
            } => {
                assert_eq!(line, 2);
                assert_eq!(column, 7);
                assert_eq!(source, ScriptError::LeadingDiacritic { position: 0 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_lines() {
        assert!(matches!(
            parse_corpus("a\tb\na\tt\n", Encoding::Buckwalter, "X"),
            Err(CorpusError::DuplicateVerseId { line: 2, .. })
        ));
        assert!(matches!(
            parse_corpus("no-tab-here\n", Encoding::Buckwalter, "X"),
            Err(CorpusError::MalformedLine { line: 1 })
        ));
        assert!(matches!(
            parse_corpus("a\t \n", Encoding::Buckwalter, "X"),
            Err(CorpusError::EmptyVerse { line: 1 })
        ));
    }

    #[test]
    fn text_round_trips() {
        let text = "v1\thaA*aA yiT~ahoruwA\nv2\tmanoToqapo\n";
        let c = parse_corpus(text, Encoding::Buckwalter, "MOR").unwrap();
        assert_eq!(c.to_text(), text);
    }

    #[test]
    fn load_reports_missing_file() {
        let err = load_corpus(Path::new("/nonexistent/x.txt"), Encoding::Buckwalter, "X");
        assert!(matches!(err, Err(CorpusError::Io { .. })));
    }
}
