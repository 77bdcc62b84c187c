//! Character n-gram and Brown-cluster feature templates.

use std::collections::HashMap;

use super::brown::BrownClustering;
use super::CrfError;

pub const START: &str = "⟨S⟩";
pub const END: &str = "⟨E⟩";
pub const UNKNOWN_CLUSTER: &str = "⟨UNK⟩";

/// (template name, window start offset, window width).
const NGRAM_TEMPLATES: [(&str, isize, usize); 10] = [
    ("u", 0, 1),
    ("b-1", -1, 2),
    ("b0", 0, 2),
    ("t-2", -2, 3),
    ("t-1", -1, 3),
    ("t0", 0, 3),
    ("q-3", -3, 4),
    ("q-2", -2, 4),
    ("q-1", -1, 4),
    ("q0", 0, 4),
];

/// Cluster-path prefix lengths; `None` is the full path.
const CLUSTER_PREFIXES: [(&str, Option<usize>); 3] = [("c4", Some(4)), ("c6", Some(6)), ("c", None)];

pub const NGRAM_FEATURES: usize = NGRAM_TEMPLATES.len();
pub const CLUSTER_FEATURES: usize = CLUSTER_PREFIXES.len();

/// Feature keys for `position` of `word_chars`. Windows reaching past the
/// word edges are filled with [`START`]/[`END`] sentinels; cluster features
/// attach the whole word's path to every position.
pub fn extract_features(
    word_chars: &[char],
    position: usize,
    clusters: Option<&BrownClustering>,
) -> Result<Vec<String>, CrfError> {
    let n = word_chars.len();
    if position >= n {
        return Err(CrfError::PositionOutOfRange { position, len: n });
    }
    let mut keys = Vec::with_capacity(NGRAM_FEATURES + CLUSTER_FEATURES);
    for (name, offset, width) in NGRAM_TEMPLATES {
        let mut key = String::with_capacity(name.len() + 1 + 4 * width);
        key.push_str(name);
        key.push(':');
        for k in 0..width as isize {
            let j = position as isize + offset + k;
            if j < 0 {
                key.push_str(START);
            } else if j as usize >= n {
                key.push_str(END);
            } else {
                key.push(word_chars[j as usize]);
            }
        }
        keys.push(key);
    }
    if let Some(clusters) = clusters {
        let word: String = word_chars.iter().collect();
        let path = clusters.path(&word).unwrap_or(UNKNOWN_CLUSTER);
        for (name, len) in CLUSTER_PREFIXES {
            let prefix = match len {
                Some(l) if path != UNKNOWN_CLUSTER => &path[..l.min(path.len())],
                _ => path,
            };
            keys.push(format!("{name}:{prefix}"));
        }
    }
    Ok(keys)
}

/// Frozen dense numbering of feature keys (sorted key order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureIndex {
    keys: Vec<String>,
    ids: HashMap<String, u32>,
}

impl FeatureIndex {
    pub fn from_keys(keys: impl IntoIterator<Item = String>) -> FeatureIndex {
        let mut keys: Vec<String> = keys.into_iter().collect();
        keys.sort_unstable();
        keys.dedup();
        let ids = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        FeatureIndex { keys, ids }
    }

    /// `None` for keys unseen at training time (zero weight).
    pub fn id(&self, key: &str) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }
}

/// Known feature ids for every position of a word.
pub fn feature_ids(
    chars: &[char],
    clusters: Option<&BrownClustering>,
    index: &FeatureIndex,
) -> Vec<Vec<u32>> {
    (0..chars.len())
        .map(|i| {
            extract_features(chars, i, clusters)
                .expect("position in range")
                .iter()
                .filter_map(|k| index.id(k))
                .collect()
        })
        .collect()
}
