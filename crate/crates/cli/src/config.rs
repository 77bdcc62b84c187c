use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tashkil::corpus::{load_corpus, synth_generate, Corpus, Encoding, SynthConfig};
use tashkil::crf::CrfConfig;
use tashkil::eval::{ModelKind, Regime};
use tashkil::neural::NeuralConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub path: PathBuf,
    /// Defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Declarative run description. Every field has a default, so an empty
/// file is valid; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub encoding: Encoding,
    pub corpora: Vec<CorpusEntry>,
    /// Generated dialect pair used when `corpora` is empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    /// Model trained by `train`.
    pub model: ModelKind,
    /// Models evaluated by `experiment`.
    pub models: Vec<ModelKind>,
    pub regimes: Vec<Regime>,
    pub k: usize,
    /// Brown clusters for CRF features; 0 disables them.
    pub brown_clusters: usize,
    pub hybrid_fallback: ModelKind,
    pub heatmaps: bool,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub crf: CrfConfig,
    pub neural: NeuralConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            encoding: Encoding::Buckwalter,
            corpora: Vec::new(),
            synth: None,
            model: ModelKind::Dnn,
            models: vec![ModelKind::Lookup, ModelKind::Crf, ModelKind::Dnn, ModelKind::Hybrid],
            regimes: vec![Regime::Uni, Regime::Cross, Regime::Joint],
            k: 5,
            brown_clusters: 50,
            hybrid_fallback: ModelKind::Dnn,
            heatmaps: true,
            jobs: 0,
            out: None,
            crf: CrfConfig::default(),
            neural: NeuralConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        // Corpus paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new(""));
        for c in &mut config.corpora {
            if c.path.is_relative() {
                c.path = base.join(&c.path);
            }
        }
        Ok(config)
    }

    /// Serialized copy for an output directory; `out` is left out so runs
    /// into different directories produce identical copies.
    pub fn to_toml(&self) -> String {
        let copy = RunConfig {
            out: None,
            ..self.clone()
        };
        toml::to_string(&copy).expect("config serializes")
    }

    pub fn out_dir(&self) -> anyhow::Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("no output directory: pass --out or set `out` in the config"),
        }
    }

    /// The configured corpora, or the generated pair when none are listed.
    pub fn load_corpora(&self) -> anyhow::Result<Vec<Corpus>> {
        if self.corpora.is_empty() {
            let synth = self.synth.clone().unwrap_or_default();
            let out = synth_generate(&synth, self.seed)?;
            return Ok(vec![out.a, out.b]);
        }
        self.corpora
            .iter()
            .map(|c| {
                let label = match &c.label {
                    Some(l) => l.clone(),
                    None => stem(&c.path),
                };
                Ok(load_corpus(&c.path, self.encoding, &label)?)
            })
            .collect()
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}
