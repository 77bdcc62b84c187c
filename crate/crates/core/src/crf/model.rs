use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::brown::BrownClustering;
use super::features::{feature_ids, FeatureIndex};
use super::CrfError;
use crate::lattice::Lattice;
use crate::script::{is_diacritic, TagSet, TaggedWord};

const FORMAT: &str = "tashkil-crf";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    tagset: TagSet,
    index: FeatureIndex,
    /// `features × tags`, row-major.
    state: Vec<f64>,
    /// `tags × tags`, `[from * tags + to]`.
    transitions: Vec<f64>,
    c: f64,
    clusters: Option<BrownClustering>,
}

#[derive(Debug, Clone)]
pub struct WordMarginals {
    pub log_z: f64,
    /// One distribution over tag indices per character.
    pub marginals: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureRow {
    key: String,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterFile {
    k: usize,
    paths: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    c: f64,
    tagset: TagSet,
    transitions: Vec<Vec<f64>>,
    clusters: Option<ClusterFile>,
    features: Vec<FeatureRow>,
}

impl CrfModel {
    pub fn new(
        tagset: TagSet,
        index: FeatureIndex,
        state: Vec<f64>,
        transitions: Vec<f64>,
        c: f64,
        clusters: Option<BrownClustering>,
    ) -> Result<CrfModel, CrfError> {
        let t = tagset.len();
        if state.len() != index.len() * t || transitions.len() != t * t {
            return Err(CrfError::Format("weight shapes do not match tag set".into()));
        }
        if state.iter().chain(&transitions).any(|w| !w.is_finite()) {
            return Err(CrfError::Format("non-finite weight".into()));
        }
        Ok(CrfModel {
            tagset,
            index,
            state,
            transitions,
            c,
            clusters,
        })
    }

    /// All-zero weights over `index`.
    pub fn zeros(tagset: TagSet, index: FeatureIndex, c: f64, clusters: Option<BrownClustering>) -> CrfModel {
        let t = tagset.len();
        CrfModel {
            state: vec![0.0; index.len() * t],
            transitions: vec![0.0; t * t],
            tagset,
            index,
            c,
            clusters,
        }
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn feature_index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn state_weights(&self) -> &[f64] {
        &self.state
    }

    pub fn transition_weights(&self) -> &[f64] {
        &self.transitions
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn clusters(&self) -> Option<&BrownClustering> {
        self.clusters.as_ref()
    }

    pub(crate) fn set_weights(&mut self, params: &[f64]) {
        let f = self.state.len();
        self.state.copy_from_slice(&params[..f]);
        self.transitions.copy_from_slice(&params[f..]);
    }

    /// Emission scores (`len × tags`) for a word's feature ids.
    pub(crate) fn emissions(&self, ids: &[Vec<u32>]) -> Vec<f64> {
        emissions_from(&self.state, self.tagset.len(), ids)
    }

    fn prepare(&self, base: &str) -> Result<(Vec<char>, Vec<f64>), CrfError> {
        let chars: Vec<char> = base.chars().collect();
        if chars.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        if let Some(position) = chars.iter().position(|&c| is_diacritic(c)) {
            return Err(CrfError::DiacriticsInQuery { position });
        }
        let ids = feature_ids(&chars, self.clusters.as_ref(), &self.index);
        let em = self.emissions(&ids);
        Ok((chars, em))
    }

    pub fn to_json(&self) -> String {
        let t = self.tagset.len();
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            c: self.c,
            tagset: self.tagset.clone(),
            transitions: self.transitions.chunks(t).map(<[f64]>::to_vec).collect(),
            clusters: self.clusters.as_ref().map(|c| ClusterFile {
                k: c.cluster_count(),
                paths: c.paths().clone(),
            }),
            features: self
                .index
                .keys()
                .iter()
                .zip(self.state.chunks(t))
                .map(|(key, w)| FeatureRow {
                    key: key.clone(),
                    weights: w.to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<CrfModel, CrfError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| CrfError::Format(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(CrfError::Format(format!(
                "expected {FORMAT} version {VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        let t = file.tagset.len();
        if file.transitions.len() != t || file.transitions.iter().any(|r| r.len() != t) {
            return Err(CrfError::Format("transition matrix shape".into()));
        }
        if file.features.iter().any(|r| r.weights.len() != t) {
            return Err(CrfError::Format("feature weight arity".into()));
        }
        if file.features.windows(2).any(|w| w[0].key >= w[1].key) {
            return Err(CrfError::Format("feature keys must be sorted and unique".into()));
        }
        let index = FeatureIndex::from_keys(file.features.iter().map(|r| r.key.clone()));
        let state = file.features.into_iter().flat_map(|r| r.weights).collect();
        let transitions = file.transitions.into_iter().flatten().collect();
        let clusters = file
            .clusters
            .map(|c| BrownClustering::from_paths(c.paths, c.k));
        CrfModel::new(file.tagset, index, state, transitions, file.c, clusters)
    }

    pub fn save(&self, path: &Path) -> Result<(), CrfError> {
        std::fs::write(path, self.to_json()).map_err(|source| CrfError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<CrfModel, CrfError> {
        let text = std::fs::read_to_string(path).map_err(|source| CrfError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CrfModel::from_json(&text)
    }
}

pub(crate) fn emissions_from(state: &[f64], t: usize, ids: &[Vec<u32>]) -> Vec<f64> {
    let mut em = vec![0.0; ids.len() * t];
    for (i, feats) in ids.iter().enumerate() {
        let row = &mut em[i * t..(i + 1) * t];
        for &f in feats {
            let w = &state[f as usize * t..(f as usize + 1) * t];
            row.iter_mut().zip(w).for_each(|(r, w)| *r += w);
        }
    }
    em
}

/// `ln Z` and per-character tag marginals of an undiacritized word.
pub fn crf_log_partition(base: &str, model: &CrfModel) -> Result<WordMarginals, CrfError> {
    let (chars, em) = model.prepare(base)?;
    let t = model.tagset.len();
    let m = Lattice::new(&em, &model.transitions, t).marginals();
    Ok(WordMarginals {
        log_z: m.log_z,
        marginals: (0..chars.len())
            .map(|i| m.unary[i * t..(i + 1) * t].to_vec())
            .collect(),
    })
}

/// Viterbi tagging of an undiacritized word.
pub fn crf_decode(base: &str, model: &CrfModel) -> Result<TaggedWord, CrfError> {
    let (_, em) = model.prepare(base)?;
    let (path, _) = Lattice::new(&em, &model.transitions, model.tagset.len()).viterbi();
    Ok(model.tagset.decode(base, &path)?)
}
