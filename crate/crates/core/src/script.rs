//! Buckwalter/Arabic text model.
//!
//! Buckwalter is the internal representation everywhere in the toolkit;
//! Arabic script only appears at I/O boundaries through [`transliterate`].
//! A diacritized token is decomposed into a [`TaggedWord`]: its base letters
//! and one [`DiacriticTag`] per letter.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Buckwalter to Arabic codepoint table: the 38 letters plus tatweel,
/// superscript alef, alef wasla and the five diacritics handled by the
/// toolkit (fatha, damma, kasra, sukun, shadda).
pub const BUCKWALTER_TABLE: &[(char, char)] = &[
    ('\'', '\u{0621}'),
    ('|', '\u{0622}'),
    ('>', '\u{0623}'),
    ('&', '\u{0624}'),
    ('<', '\u{0625}'),
    ('}', '\u{0626}'),
    ('A', '\u{0627}'),
    ('b', '\u{0628}'),
    ('p', '\u{0629}'),
    ('t', '\u{062A}'),
    ('v', '\u{062B}'),
    ('j', '\u{062C}'),
    ('H', '\u{062D}'),
    ('x', '\u{062E}'),
    ('d', '\u{062F}'),
    ('*', '\u{0630}'),
    ('r', '\u{0631}'),
    ('z', '\u{0632}'),
    ('s', '\u{0633}'),
    ('$', '\u{0634}'),
    ('S', '\u{0635}'),
    ('D', '\u{0636}'),
    ('T', '\u{0637}'),
    ('Z', '\u{0638}'),
    ('E', '\u{0639}'),
    ('g', '\u{063A}'),
    ('_', '\u{0640}'),
    ('f', '\u{0641}'),
    ('q', '\u{0642}'),
    ('k', '\u{0643}'),
    ('l', '\u{0644}'),
    ('m', '\u{0645}'),
    ('n', '\u{0646}'),
    ('h', '\u{0647}'),
    ('w', '\u{0648}'),
    ('Y', '\u{0649}'),
    ('y', '\u{064A}'),
    ('a', '\u{064E}'),
    ('u', '\u{064F}'),
    ('i', '\u{0650}'),
    ('~', '\u{0651}'),
    ('o', '\u{0652}'),
    ('`', '\u{0670}'),
    ('{', '\u{0671}'),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("unmappable character {codepoint:?} (U+{:04X}) at position {position}", *codepoint as u32)]
    UnmappableCharacter { position: usize, codepoint: char },
    #[error("diacritic at position {position} does not follow a letter")]
    LeadingDiacritic { position: usize },
    #[error("conflicting vowels on one letter at position {position}")]
    MalformedCombination { position: usize },
    #[error("whitespace inside token at position {position}")]
    Whitespace { position: usize },
    #[error("base has {base} characters but {tags} tags were given")]
    LengthMismatch { base: usize, tags: usize },
    #[error("diacritic {codepoint:?} in base string at position {position}")]
    DiacriticInBase { position: usize, codepoint: char },
    #[error("unrecognized tag {0:?}")]
    UnknownTag(String),
    #[error("empty input")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToArabic,
    ToBuckwalter,
}

/// Maps `text` between Buckwalter and Arabic script. Whitespace passes
/// through unchanged; any other character outside the table is an error.
pub fn transliterate(text: &str, direction: Direction) -> Result<String, ScriptError> {
    let mut out = String::with_capacity(text.len() * 2);
    for (position, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            out.push(c);
            continue;
        }
        let mapped = match direction {
            Direction::ToArabic => to_arabic_char(c),
            Direction::ToBuckwalter => to_buckwalter_char(c),
        };
        match mapped {
            Some(m) => out.push(m),
            None => {
                return Err(ScriptError::UnmappableCharacter {
                    position,
                    codepoint: c,
                })
            }
        }
    }
    Ok(out)
}

fn to_arabic_char(c: char) -> Option<char> {
    BUCKWALTER_TABLE
        .iter()
        .find(|(b, _)| *b == c)
        .map(|(_, a)| *a)
}

fn to_buckwalter_char(c: char) -> Option<char> {
    BUCKWALTER_TABLE
        .iter()
        .find(|(_, a)| *a == c)
        .map(|(b, _)| *b)
}

/// Short vowel or sukun; at most one per letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vowel {
    Fatha,
    Damma,
    Kasra,
    Sukun,
}

impl Vowel {
    pub const ALL: [Vowel; 4] = [Vowel::Fatha, Vowel::Damma, Vowel::Kasra, Vowel::Sukun];

    pub fn buckwalter(self) -> char {
        match self {
            Vowel::Fatha => 'a',
            Vowel::Damma => 'u',
            Vowel::Kasra => 'i',
            Vowel::Sukun => 'o',
        }
    }

    pub fn from_buckwalter(c: char) -> Option<Vowel> {
        match c {
            'a' => Some(Vowel::Fatha),
            'u' => Some(Vowel::Damma),
            'i' => Some(Vowel::Kasra),
            'o' => Some(Vowel::Sukun),
            _ => None,
        }
    }
}

pub const SHADDA: char = '~';

/// True for the five Buckwalter diacritic symbols.
pub fn is_diacritic(c: char) -> bool {
    c == SHADDA || Vowel::from_buckwalter(c).is_some()
}

/// The label of one base letter: optional shadda plus optional vowel.
/// `(false, None)` is [`DiacriticTag::NONE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DiacriticTag {
    shadda: bool,
    vowel: Option<Vowel>,
}

impl DiacriticTag {
    pub const NONE: DiacriticTag = DiacriticTag {
        shadda: false,
        vowel: None,
    };

    pub const fn new(shadda: bool, vowel: Option<Vowel>) -> DiacriticTag {
        DiacriticTag { shadda, vowel }
    }

    pub const fn vowel_only(v: Vowel) -> DiacriticTag {
        DiacriticTag::new(false, Some(v))
    }

    pub fn shadda(self) -> bool {
        self.shadda
    }

    pub fn vowel(self) -> Option<Vowel> {
        self.vowel
    }

    pub fn is_none(self) -> bool {
        self == DiacriticTag::NONE
    }

    /// Whether the Buckwalter diacritic `d` is part of this tag.
    pub fn contains(self, d: char) -> bool {
        if d == SHADDA {
            self.shadda
        } else {
            self.vowel.map(Vowel::buckwalter) == Some(d)
        }
    }

    /// Canonical Buckwalter rendering, shadda first. NONE renders as "".
    pub fn render(self) -> String {
        let mut s = String::with_capacity(2);
        self.push_to(&mut s);
        s
    }

    fn push_to(self, out: &mut String) {
        if self.shadda {
            out.push(SHADDA);
        }
        if let Some(v) = self.vowel {
            out.push(v.buckwalter());
        }
    }

    /// Parses a tag from diacritic symbols in either order. "", "-" and
    /// "NONE" all denote NONE.
    pub fn parse(s: &str) -> Result<DiacriticTag, ScriptError> {
        if s.is_empty() || s == "-" || s == "NONE" {
            return Ok(DiacriticTag::NONE);
        }
        let mut tag = DiacriticTag::NONE;
        for c in s.chars() {
            if c == SHADDA {
                tag.shadda = true;
            } else if let Some(v) = Vowel::from_buckwalter(c) {
                match tag.vowel {
                    Some(w) if w != v => return Err(ScriptError::UnknownTag(s.to_string())),
                    _ => tag.vowel = Some(v),
                }
            } else {
                return Err(ScriptError::UnknownTag(s.to_string()));
            }
        }
        Ok(tag)
    }

    /// The ten tags reachable by the combination rules: NONE, four bare
    /// vowels, bare shadda, and shadda with each vowel.
    pub fn canonical_inventory() -> Vec<DiacriticTag> {
        let mut all = vec![DiacriticTag::NONE, DiacriticTag::new(true, None)];
        for v in Vowel::ALL {
            all.push(DiacriticTag::new(false, Some(v)));
            all.push(DiacriticTag::new(true, Some(v)));
        }
        all.sort();
        all
    }
}

impl Ord for DiacriticTag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.render().cmp(&other.render())
    }
}

impl PartialOrd for DiacriticTag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DiacriticTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            f.write_str("NONE")
        } else {
            f.write_str(&self.render())
        }
    }
}

impl Serialize for DiacriticTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DiacriticTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DiacriticTag::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A word as parallel base letters and per-letter tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedWord {
    base: String,
    tags: Vec<DiacriticTag>,
}

impl TaggedWord {
    pub fn new(base: impl Into<String>, tags: Vec<DiacriticTag>) -> Result<TaggedWord, ScriptError> {
        let base = base.into();
        let mut len = 0;
        for (position, c) in base.chars().enumerate() {
            if is_diacritic(c) {
                return Err(ScriptError::DiacriticInBase {
                    position,
                    codepoint: c,
                });
            }
            len += 1;
        }
        if len != tags.len() {
            return Err(ScriptError::LengthMismatch {
                base: len,
                tags: tags.len(),
            });
        }
        Ok(TaggedWord { base, tags })
    }

    /// A word with every tag NONE.
    pub fn bare(base: &str) -> Result<TaggedWord, ScriptError> {
        let n = base.chars().count();
        TaggedWord::new(base, vec![DiacriticTag::NONE; n])
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tags(&self) -> &[DiacriticTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn chars(&self) -> Vec<char> {
        self.base.chars().collect()
    }

    /// The diacritized Buckwalter string.
    pub fn diacritized(&self) -> String {
        let mut out = String::with_capacity(self.base.len() * 2);
        for (c, tag) in self.base.chars().zip(&self.tags) {
            out.push(c);
            tag.push_to(&mut out);
        }
        out
    }
}

impl fmt::Display for TaggedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.diacritized())
    }
}

/// Splits a diacritized Buckwalter token into base letters and tags.
///
/// Diacritics attach to the preceding letter. Repeated identical marks
/// collapse; two distinct vowels on one letter are rejected.
pub fn strip_word(diacritized: &str) -> Result<TaggedWord, ScriptError> {
    if diacritized.is_empty() {
        return Err(ScriptError::EmptyInput);
    }
    let mut base = String::with_capacity(diacritized.len());
    let mut tags: Vec<DiacriticTag> = Vec::with_capacity(diacritized.len());
    for (position, c) in diacritized.chars().enumerate() {
        if c.is_whitespace() {
            return Err(ScriptError::Whitespace { position });
        }
        if !is_diacritic(c) {
            base.push(c);
            tags.push(DiacriticTag::NONE);
            continue;
        }
        let Some(last) = tags.last_mut() else {
            return Err(ScriptError::LeadingDiacritic { position });
        };
        if c == SHADDA {
            last.shadda = true;
        } else {
            let v = Vowel::from_buckwalter(c).expect("diacritic is shadda or vowel");
            match last.vowel {
                Some(w) if w != v => return Err(ScriptError::MalformedCombination { position }),
                _ => last.vowel = Some(v),
            }
        }
    }
    Ok(TaggedWord { base, tags })
}

/// Re-composes a diacritized string. NONE tags emit nothing.
pub fn apply_tags(word: &TaggedWord) -> String {
    word.diacritized()
}

/// Ordered, duplicate-free tag inventory. Index 0 is always NONE; the rest
/// follow in canonical rendering order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DiacriticTag>", into = "Vec<DiacriticTag>")]
pub struct TagSet {
    tags: Vec<DiacriticTag>,
}

impl TagSet {
    pub fn new(tags: impl IntoIterator<Item = DiacriticTag>) -> TagSet {
        let mut set: BTreeSet<DiacriticTag> = tags.into_iter().collect();
        set.insert(DiacriticTag::NONE);
        TagSet {
            tags: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> DiacriticTag {
        self.tags[index]
    }

    pub fn index_of(&self, tag: DiacriticTag) -> Option<usize> {
        self.tags.binary_search(&tag).ok()
    }

    pub fn tags(&self) -> &[DiacriticTag] {
        &self.tags
    }

    /// Tag indices for a word, or `None` if it carries a tag outside the set.
    pub fn encode(&self, word: &TaggedWord) -> Option<Vec<usize>> {
        word.tags().iter().map(|t| self.index_of(*t)).collect()
    }

    pub fn decode(&self, base: &str, indices: &[usize]) -> Result<TaggedWord, ScriptError> {
        TaggedWord::new(base, indices.iter().map(|&i| self.get(i)).collect())
    }
}

impl TryFrom<Vec<DiacriticTag>> for TagSet {
    type Error = String;

    fn try_from(tags: Vec<DiacriticTag>) -> Result<Self, Self::Error> {
        let set = TagSet::new(tags.iter().copied());
        if set.tags != tags {
            return Err("tag set must be NONE followed by distinct tags in canonical order".into());
        }
        Ok(set)
    }
}

impl From<TagSet> for Vec<DiacriticTag> {
    fn from(set: TagSet) -> Self {
        set.tags
    }
}

/// NONE plus every tag observed in `words`.
pub fn induce_tagset<'a>(
    words: impl IntoIterator<Item = &'a TaggedWord>,
) -> Result<TagSet, ScriptError> {
    let mut seen = false;
    let mut tags = BTreeSet::new();
    for w in words {
        seen = true;
        tags.extend(w.tags().iter().copied());
    }
    if !seen {
        return Err(ScriptError::EmptyInput);
    }
    Ok(TagSet::new(tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> DiacriticTag {
        DiacriticTag::parse(s).unwrap()
    }

    #[test]
    fn transliterates_reference_example() {
        assert_eq!(
            transliterate("haA*aA", Direction::ToArabic).unwrap(),
            "\u{0647}\u{064E}\u{0627}\u{0630}\u{064E}\u{0627}"
        );
        assert_eq!(transliterate("", Direction::ToArabic).unwrap(), "");
    }

    #[test]
    fn table_is_bijective() {
        let bw: BTreeSet<char> = BUCKWALTER_TABLE.iter().map(|p| p.0).collect();
        let ar: BTreeSet<char> = BUCKWALTER_TABLE.iter().map(|p| p.1).collect();
        assert_eq!(bw.len(), BUCKWALTER_TABLE.len());
        assert_eq!(ar.len(), BUCKWALTER_TABLE.len());
    }

    #[test]
    fn unmappable_character_reports_position() {
        assert_eq!(
            transliterate("ba#", Direction::ToArabic),
            Err(ScriptError::UnmappableCharacter {
                position: 2,
                codepoint: '#'
            })
        );
        assert!(matches!(
            transliterate("b", Direction::ToBuckwalter),
            Err(ScriptError::UnmappableCharacter { position: 0, .. })
        ));
    }

    #[test]
    fn strips_default_diacritics_example() {
        let w = strip_word("haA*aA").unwrap();
        assert_eq!(w.base(), "hA*A");
        assert_eq!(w.tags(), &[t("a"), t(""), t("a"), t("")]);
    }

    #[test]
    fn strips_shadda_vowel_example() {
        let w = strip_word("yiT~ahoruwA").unwrap();
        assert_eq!(w.base(), "yThrwA");
        assert_eq!(w.tags(), &[t("i"), t("~a"), t("o"), t("u"), t(""), t("")]);
    }

    #[test]
    fn undiacritized_word_is_all_none() {
        let w = strip_word("hA*A").unwrap();
        assert!(w.tags().iter().all(|t| t.is_none()));
    }

    #[test]
    fn leading_and_consecutive_sukun_are_legal() {
        let w = strip_word("wololobolaAyoSo").unwrap();
        assert_eq!(w.base(), "wllblAyS");
        let sukun = w.tags().iter().filter(|t| **t == t_o()).count();
        assert_eq!(sukun, 6);
        assert_eq!(apply_tags(&w), "wololobolaAyoSo");
    }

    fn t_o() -> DiacriticTag {
        DiacriticTag::vowel_only(Vowel::Sukun)
    }

    #[test]
    fn shadda_order_is_normalized() {
        assert_eq!(strip_word("bo~").unwrap(), strip_word("b~o").unwrap());
        assert_eq!(apply_tags(&strip_word("bo~").unwrap()), "b~o");
        assert_eq!(t("o~"), t("~o"));
        assert_eq!(t("~o").render(), "~o");
    }

    #[test]
    fn duplicate_marks_collapse() {
        assert_eq!(apply_tags(&strip_word("baa~~").unwrap()), "b~a");
    }

    #[test]
    fn strip_errors() {
        assert_eq!(strip_word("ab"), Err(ScriptError::LeadingDiacritic { position: 0 }));
        assert_eq!(
            strip_word("bai"),
            Err(ScriptError::MalformedCombination { position: 2 })
        );
        assert_eq!(strip_word(""), Err(ScriptError::EmptyInput));
        assert_eq!(strip_word("b a"), Err(ScriptError::Whitespace { position: 1 }));
    }

    #[test]
    fn tagged_word_invariants() {
        assert_eq!(
            TaggedWord::new("hA", vec![DiacriticTag::NONE]),
            Err(ScriptError::LengthMismatch { base: 2, tags: 1 })
        );
        assert!(matches!(
            TaggedWord::new("ha", vec![DiacriticTag::NONE; 2]),
            Err(ScriptError::DiacriticInBase { position: 1, .. })
        ));
        let w = TaggedWord::new("hA*A", vec![t("a"), t(""), t("a"), t("")]).unwrap();
        assert_eq!(apply_tags(&w), "haA*aA");
        assert_eq!(apply_tags(&TaggedWord::bare("x").unwrap()), "x");
    }

    #[test]
    fn tagset_orders_none_first() {
        let words = [strip_word("bobaA").unwrap(), strip_word("bo").unwrap()];
        let set = induce_tagset(&words).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.get(0), DiacriticTag::NONE);
        assert_eq!(set.tags(), &[t(""), t("a"), t("o")]);
        assert_eq!(induce_tagset(&[]), Err(ScriptError::EmptyInput));
    }

    #[test]
    fn canonical_inventory_has_ten_tags() {
        let inv = DiacriticTag::canonical_inventory();
        assert_eq!(inv.len(), 10);
        let set = TagSet::new(inv.clone());
        assert_eq!(set.tags(), inv.as_slice());
        assert_eq!(set.get(0), DiacriticTag::NONE);
    }

    #[test]
    fn tagset_serde_rejects_noncanonical() {
        let set = TagSet::new([t("a"), t("~o")]);
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(json, r#"["NONE","a","~o"]"#);
        assert_eq!(serde_json::from_str::<TagSet>(&json).unwrap(), set);
        assert!(serde_json::from_str::<TagSet>(r#"["a","NONE"]"#).is_err());
    }

    fn arb_tag() -> impl Strategy<Value = DiacriticTag> {
        proptest::sample::select(DiacriticTag::canonical_inventory())
    }

    fn arb_word() -> impl Strategy<Value = TaggedWord> {
        let letters: Vec<char> = BUCKWALTER_TABLE
            .iter()
            .map(|p| p.0)
            .filter(|c| !is_diacritic(*c))
            .collect();
        proptest::collection::vec((proptest::sample::select(letters), arb_tag()), 1..12).prop_map(
            |pairs| {
                let base: String = pairs.iter().map(|p| p.0).collect();
                TaggedWord::new(base, pairs.iter().map(|p| p.1).collect()).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn strip_inverts_apply(w in arb_word()) {
            prop_assert_eq!(strip_word(&apply_tags(&w)).unwrap(), w);
        }

        #[test]
        fn transliteration_round_trips(w in arb_word()) {
            let s = apply_tags(&w);
            let ar = transliterate(&s, Direction::ToArabic).unwrap();
            prop_assert_eq!(transliterate(&ar, Direction::ToBuckwalter).unwrap(), s);
        }

        #[test]
        fn tag_parse_is_idempotent(tag in arb_tag()) {
            let r = tag.render();
            prop_assert_eq!(DiacriticTag::parse(&r).unwrap(), tag);
            let rev: String = r.chars().rev().collect();
            prop_assert_eq!(DiacriticTag::parse(&rev).unwrap(), tag);
        }
    }
}
