//! Synthetic two-dialect corpus generator.
//!
//! Each dialect diacritizes by its own small rule system (lead-letter sukun,
//! a vowel "harmony" keyed on the first letter, sukun clusters, final-letter
//! rules, short vowels before long ones) plus a lexical shadda. Dialect-only
//! words carry dialect-specific final letters, so the dialect is
//! recoverable from the word itself. Shared words agree on their dominant
//! form unless chosen to diverge.
//!
//! Every type occurs at least once; the remaining token mass follows a
//! Zipf law over a per-dialect ranking of its vocabulary.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Verse};
use crate::script::{DiacriticTag, TaggedWord, Vowel};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Types per dialect.
    pub vocab_size: usize,
    pub verse_count: usize,
    pub mean_verse_len: f64,
    /// Probability that a type also has a secondary form.
    pub ambiguity_rate: f64,
    /// Fraction of each dialect's types shared with the other.
    pub pair_overlap: f64,
    /// Probability that a shared type has different dominant forms.
    pub pair_form_divergence: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 800,
            verse_count: 1000,
            mean_verse_len: 10.0,
            ambiguity_rate: 0.0,
            pair_overlap: 0.61,
            pair_form_divergence: 0.35,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidConfig(m.to_string()));
        if self.vocab_size == 0 || self.verse_count == 0 {
            return bad("vocab_size and verse_count must be positive");
        }
        if !(self.mean_verse_len.is_finite() && self.mean_verse_len >= 1.0) {
            return bad("mean_verse_len must be at least 1");
        }
        for (name, r) in [
            ("ambiguity_rate", self.ambiguity_rate),
            ("pair_overlap", self.pair_overlap),
            ("pair_form_divergence", self.pair_form_divergence),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(CorpusError::InvalidConfig(format!("{name} must be in [0, 1]")));
            }
        }
        if self.vocab_size > 200_000 {
            return bad("vocab_size above 200000 is not supported");
        }
        Ok(())
    }
}

/// Ground-truth forms of one type in one dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexForms {
    pub dominant: TaggedWord,
    pub secondary: Option<TaggedWord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub base: String,
    /// Forms in dialect A and dialect B; `None` where the type is absent.
    pub forms: [Option<LexForms>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynthLexicon {
    pub entries: Vec<LexEntry>,
}

impl SynthLexicon {
    pub fn shared(&self) -> impl Iterator<Item = &LexEntry> {
        self.entries
            .iter()
            .filter(|e| e.forms[0].is_some() && e.forms[1].is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutput {
    pub a: Corpus,
    pub b: Corpus,
    pub lexicon: SynthLexicon,
}

const CONSONANTS: &[char] = &[
    'b', 't', 'v', 'j', 'H', 'x', 'd', '*', 'r', 'z', 's', '$', 'S', 'D', 'T', 'Z', 'g', 'f', 'q',
    'l', 'm', 'n',
];
const LONG: &[char] = &['A', 'w', 'y'];
const MARKERS: [&[char]; 2] = [&['p', 'k'], &['h', 'E']];
const LEAD_SUKUN: [&str; 2] = ["btdrsfqlmn", "jHxzSDTg$"];
const HARMONY: [(&str, Vowel, Vowel); 2] = [
    ("btvjHxd*rzs", Vowel::Fatha, Vowel::Kasra),
    ("SDTZgfqlmn$", Vowel::Damma, Vowel::Fatha),
];
const CLUSTER: [&str; 2] = ["rlmn", "bdtsz"];
const FINAL_SUKUN_B: &str = "btdrsfqlmnh";
const SHADDA_RATE: f64 = 0.3;
const LONG_RATE: f64 = 0.25;

fn long_vowel_tag(c: char) -> DiacriticTag {
    let v = match c {
        'A' => Vowel::Fatha,
        'w' => Vowel::Damma,
        _ => Vowel::Kasra,
    };
    DiacriticTag::vowel_only(v)
}

/// Dominant form of `letters` under dialect `d`'s rules.
fn rule_form(d: usize, letters: &[char], shadda_at: Option<usize>) -> Vec<DiacriticTag> {
    let n = letters.len();
    let (harm_set, yes, no) = HARMONY[d];
    let harmony = DiacriticTag::vowel_only(if harm_set.contains(letters[0]) { yes } else { no });
    let sukun = DiacriticTag::vowel_only(Vowel::Sukun);
    let mut tags: Vec<DiacriticTag> = Vec::with_capacity(n);
    for (i, &c) in letters.iter().enumerate() {
        let next = letters.get(i + 1).copied();
        let mut tag = if i > 0 && LONG.contains(&c) {
            DiacriticTag::NONE
        } else if let Some(nx) = next.filter(|nx| LONG.contains(nx)) {
            long_vowel_tag(nx)
        } else if i + 1 == n {
            if d == 0 || FINAL_SUKUN_B.contains(c) {
                sukun
            } else {
                DiacriticTag::NONE
            }
        } else if i == 0 {
            if LEAD_SUKUN[d].contains(c) {
                sukun
            } else {
                harmony
            }
        } else {
            let prev_vowel = tags[i - 1]
                .vowel()
                .is_some_and(|v| v != Vowel::Sukun);
            if prev_vowel && CLUSTER[d].contains(c) {
                sukun
            } else {
                harmony
            }
        };
        if shadda_at == Some(i) {
            tag = DiacriticTag::new(true, tag.vowel());
        }
        tags.push(tag);
    }
    tags
}

/// Replaces the vowel at one random position by a different one.
fn perturb(rng: &mut ChaCha8Rng, tags: &[DiacriticTag]) -> Vec<DiacriticTag> {
    const CHOICES: [Option<Vowel>; 5] = [
        None,
        Some(Vowel::Fatha),
        Some(Vowel::Damma),
        Some(Vowel::Kasra),
        Some(Vowel::Sukun),
    ];
    let mut out = tags.to_vec();
    let i = rng.random_range(0..tags.len());
    let current = tags[i].vowel();
    let options: Vec<Option<Vowel>> = CHOICES.into_iter().filter(|v| *v != current).collect();
    let v = options[rng.random_range(0..options.len())];
    out[i] = DiacriticTag::new(tags[i].shadda(), v);
    out
}

fn random_letters(rng: &mut ChaCha8Rng, marker: Option<&[char]>) -> Vec<char> {
    let len = rng.random_range(2..=7usize);
    let mut letters = Vec::with_capacity(len);
    letters.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
    for i in 1..len {
        let last = i + 1 == len;
        if last {
            if let Some(m) = marker {
                letters.push(m[rng.random_range(0..m.len())]);
                break;
            }
        }
        let prev_long = LONG.contains(&letters[i - 1]);
        if !prev_long && rng.random_bool(LONG_RATE) {
            letters.push(LONG[rng.random_range(0..LONG.len())]);
        } else {
            letters.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
        }
    }
    letters
}

fn word(letters: &[char], tags: Vec<DiacriticTag>) -> TaggedWord {
    TaggedWord::new(letters.iter().collect::<String>(), tags).expect("generator keeps lengths aligned")
}

/// Which dialects a type belongs to.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Membership {
    OnlyA,
    OnlyB,
    Shared,
}

pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<SynthOutput, CorpusError> {
    config.validate()?;
    let v = config.vocab_size;
    let shared = ((config.pair_overlap * v as f64).round() as usize).min(v);
    let only = v - shared;

    let mut rng = seed::rng(seed::derive(seed, "synth-lexicon"));
    let mut seen: HashSet<Vec<char>> = HashSet::new();
    let mut plan: Vec<Membership> = Vec::with_capacity(shared + 2 * only);
    plan.extend(std::iter::repeat_n(Membership::Shared, shared));
    plan.extend(std::iter::repeat_n(Membership::OnlyA, only));
    plan.extend(std::iter::repeat_n(Membership::OnlyB, only));

    let mut entries = Vec::with_capacity(plan.len());
    for membership in plan {
        let marker = match membership {
            Membership::OnlyA => Some(MARKERS[0]),
            Membership::OnlyB => Some(MARKERS[1]),
            Membership::Shared => None,
        };
        let mut attempts = 0;
        let letters = loop {
            let candidate = random_letters(&mut rng, marker);
            if seen.insert(candidate.clone()) {
                break candidate;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(CorpusError::InvalidConfig(
                    "vocabulary too large for the generator alphabet".into(),
                ));
            }
        };
        let eligible: Vec<usize> = (1..letters.len())
            .filter(|&i| !LONG.contains(&letters[i]))
            .collect();
        let shadda_at = if !eligible.is_empty() && rng.random_bool(SHADDA_RATE) {
            Some(eligible[rng.random_range(0..eligible.len())])
        } else {
            None
        };
        let form_a = rule_form(0, &letters, shadda_at);
        let dominant: [Option<Vec<DiacriticTag>>; 2] = match membership {
            Membership::OnlyA => [Some(form_a), None],
            Membership::OnlyB => [None, Some(rule_form(1, &letters, shadda_at))],
            Membership::Shared => {
                let form_b = if rng.random_bool(config.pair_form_divergence) {
                    let b = rule_form(1, &letters, shadda_at);
                    if b == form_a {
                        perturb(&mut rng, &form_a)
                    } else {
                        b
                    }
                } else {
                    form_a.clone()
                };
                [Some(form_a), Some(form_b)]
            }
        };
        let forms = dominant.map(|d| {
            d.map(|tags| {
                let secondary = rng
                    .random_bool(config.ambiguity_rate)
                    .then(|| word(&letters, perturb(&mut rng, &tags)));
                LexForms {
                    dominant: word(&letters, tags),
                    secondary,
                }
            })
        });
        entries.push(LexEntry {
            base: letters.iter().collect(),
            forms,
        });
    }
    let lexicon = SynthLexicon { entries };

    let a = dialect_corpus(config, &lexicon, 0, "SYN-A", seed::derive(seed, "synth-a"))?;
    let b = dialect_corpus(config, &lexicon, 1, "SYN-B", seed::derive(seed, "synth-b"))?;
    Ok(SynthOutput { a, b, lexicon })
}

fn dialect_corpus(
    config: &SynthConfig,
    lexicon: &SynthLexicon,
    dialect: usize,
    label: &str,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    let mut rng = seed::rng(seed);
    let members: Vec<&LexForms> = lexicon
        .entries
        .iter()
        .filter_map(|e| e.forms[dialect].as_ref())
        .collect();
    let v = members.len();

    let lo = ((config.mean_verse_len * 0.5).floor() as usize).max(1);
    let hi = ((2.0 * config.mean_verse_len).round() as usize)
        .saturating_sub(lo)
        .max(lo);
    let lengths: Vec<usize> = (0..config.verse_count)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    let total: usize = lengths.iter().sum();
    if total < v {
        return Err(CorpusError::InvalidConfig(format!(
            "{total} tokens cannot cover a vocabulary of {v} types; raise verse_count or mean_verse_len"
        )));
    }

    // Zipf ranks over a dialect-specific permutation of the vocabulary.
    let mut ranking: Vec<usize> = (0..v).collect();
    ranking.shuffle(&mut rng);
    let mut cumulative = Vec::with_capacity(v);
    let mut acc = 0.0;
    for r in 0..v {
        acc += 1.0 / (r as f64 + 1.0);
        cumulative.push(acc);
    }
    let mut stream: Vec<usize> = (0..v).collect();
    for _ in v..total {
        let u = rng.random::<f64>() * acc;
        let r = cumulative.partition_point(|&c| c <= u).min(v - 1);
        stream.push(ranking[r]);
    }
    stream.shuffle(&mut rng);

    // A strict minority of each ambiguous type's occurrences use its
    // secondary form, so the dominant form stays modal in the data.
    let mut occurrences: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (pos, &t) in stream.iter().enumerate() {
        occurrences[t].push(pos);
    }
    let mut use_secondary = vec![false; total];
    for (t, occ) in occurrences.iter_mut().enumerate() {
        if members[t].secondary.is_some() {
            let share = rng.random_range(0.1..0.4);
            let k = (share * occ.len() as f64).floor() as usize;
            occ.shuffle(&mut rng);
            for &pos in occ.iter().take(k) {
                use_secondary[pos] = true;
            }
        }
    }

    let mut verses = Vec::with_capacity(lengths.len());
    let mut pos = 0;
    for (i, len) in lengths.into_iter().enumerate() {
        let tokens = (pos..pos + len)
            .map(|p| {
                let forms = members[stream[p]];
                match (&forms.secondary, use_secondary[p]) {
                    (Some(s), true) => s.clone(),
                    _ => forms.dominant.clone(),
                }
            })
            .collect();
        pos += len;
        verses.push(Verse {
            id: format!("{label}:{:05}", i + 1),
            tokens,
        });
    }
    Corpus::new(label, verses)
}
