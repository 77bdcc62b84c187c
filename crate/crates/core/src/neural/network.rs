//! Embeddings → stacked BiLSTM → linear emissions → CRF, with a hand-written
//! reverse pass.

use std::collections::HashMap;
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{self, DirCache, Shape};
use super::params::{initialize, view, view_mut, CharVocab, Layout, PAD};
use super::{NeuralConfig, NeuralError};
use crate::lattice::Lattice;
use crate::script::{is_diacritic, TagSet, TaggedWord};
use crate::seed;

const FORMAT: &str = "tashkil-bilstm-crf";
const VERSION: u32 = 1;
/// Sequences per forward pass when decoding.
const EVAL_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    config: NeuralConfig,
    vocab: CharVocab,
    tagset: TagSet,
    layout: Layout,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active, masks drawn from this seed.
    Train { dropout_seed: u64 },
}

/// Padded time-major batch of id sequences.
pub(crate) struct Batch {
    pub shape: Shape,
    pub ids: Vec<usize>,
    pub mask: Vec<f64>,
    pub lens: Vec<usize>,
}

impl Batch {
    pub fn new(seqs: &[&[usize]]) -> Batch {
        let steps = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let batch = seqs.len();
        let mut ids = vec![PAD; steps * batch];
        let mut mask = vec![0.0; steps * batch];
        for (b, seq) in seqs.iter().enumerate() {
            for (t, &id) in seq.iter().enumerate() {
                ids[t * batch + b] = id;
                mask[t * batch + b] = 1.0;
            }
        }
        Batch {
            shape: Shape { steps, batch },
            ids,
            mask,
            lens: seqs.iter().map(|s| s.len()).collect(),
        }
    }

    /// Emission rows of sequence `b` gathered into a contiguous `len × tags`.
    fn rows_of(&self, em: &Array2<f64>, b: usize) -> Vec<f64> {
        let t = em.ncols();
        let mut out = Vec::with_capacity(self.lens[b] * t);
        for step in 0..self.lens[b] {
            out.extend(em.row(step * self.shape.batch + b).iter());
        }
        out
    }
}

struct LayerCache {
    input: Array2<f64>,
    drop_mask: Option<Array2<f64>>,
    dirs: [DirCache; 2],
}

pub(crate) struct NetCache {
    layers: Vec<LayerCache>,
    out: Array2<f64>,
}

fn dropout_mask(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rate: f64) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

/// `ln Z − score(gold)` under start/stop boundary transitions.
pub fn sequence_nll(
    emissions: &[f64],
    transitions: &[f64],
    start: &[f64],
    stop: &[f64],
    gold: &[usize],
) -> Result<f64, NeuralError> {
    let tags = start.len();
    if gold.is_empty() || emissions.len() != gold.len() * tags {
        return Err(NeuralError::LengthMismatch {
            emissions: emissions.len() / tags.max(1),
            gold: gold.len(),
        });
    }
    let lat = Lattice::new(emissions, transitions, tags).with_boundaries(start, stop);
    Ok(lat.log_partition() - lat.score(gold))
}

/// A parameter vector interpreted through a layout.
struct Net<'a> {
    layout: &'a Layout,
    params: &'a [f64],
    hidden: usize,
}

impl Net<'_> {
    fn forward(&self, batch: &Batch, mut dropout: Option<(&mut ChaCha8Rng, f64)>) -> (Array2<f64>, NetCache) {
        let rows = batch.ids.len();
        let embed = view(self.params, self.layout.embed());
        let mut x = Array2::<f64>::zeros((rows, embed.ncols()));
        for (r, &id) in batch.ids.iter().enumerate() {
            x.row_mut(r).assign(&embed.row(id));
        }
        let mut layers = Vec::with_capacity(self.layout.layers);
        for l in 0..self.layout.layers {
            let drop_mask = match dropout.as_mut() {
                Some((rng, rate)) if *rate > 0.0 => {
                    let m = dropout_mask(rng, rows, x.ncols(), *rate);
                    x *= &m;
                    Some(m)
                }
                _ => None,
            };
            let dirs = [0, 1].map(|d| {
                let [w, u, b] = self.layout.lstm(l, d);
                lstm::forward(
                    x.view(),
                    view(self.params, w),
                    view(self.params, u),
                    &self.params[b.range()],
                    &batch.mask,
                    &batch.shape,
                    d == 1,
                )
            });
            let mut out = Array2::<f64>::zeros((rows, 2 * self.hidden));
            out.slice_mut(s![.., ..self.hidden]).assign(&dirs[0].h);
            out.slice_mut(s![.., self.hidden..]).assign(&dirs[1].h);
            layers.push(LayerCache {
                input: std::mem::replace(&mut x, out),
                drop_mask,
                dirs,
            });
        }
        let out = x;
        let ew = view(self.params, self.layout.emit_w());
        let eb = &self.params[self.layout.emit_b().range()];
        let mut em = Array2::<f64>::zeros((rows, ew.nrows()));
        general_mat_mul(1.0, &out, &ew.t(), 0.0, &mut em);
        for mut row in em.rows_mut() {
            row.iter_mut().zip(eb).for_each(|(r, b)| *r += b);
        }
        (em, NetCache { layers, out })
    }

    fn crf_parts(&self) -> (&[f64], &[f64], &[f64]) {
        (
            &self.params[self.layout.trans().range()],
            &self.params[self.layout.start().range()],
            &self.params[self.layout.stop().range()],
        )
    }

    /// Summed sequence NLL of the batch and its gradient.
    fn loss_and_grad(
        &self,
        batch: &Batch,
        gold: &[&[usize]],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (f64, Vec<f64>) {
        let (em, cache) = self.forward(batch, dropout);
        let mut grad = vec![0.0; self.layout.total];
        let tags = em.ncols();
        let bs = batch.shape.batch;
        let (trans, start, stop) = self.crf_parts();
        let mut dem = Array2::<f64>::zeros(em.raw_dim());
        let mut loss = 0.0;
        {
            let (tr_r, st_r, sp_r) = (
                self.layout.trans().range(),
                self.layout.start().range(),
                self.layout.stop().range(),
            );
            for (b, g) in gold.iter().enumerate() {
                let rows = batch.rows_of(&em, b);
                let lat = Lattice::new(&rows, trans, tags).with_boundaries(start, stop);
                let m = lat.marginals();
                loss += m.log_z - lat.score(g);
                let n = g.len();
                for (step, &y) in g.iter().enumerate() {
                    let mut d = dem.row_mut(step * bs + b);
                    for k in 0..tags {
                        d[k] = m.unary[step * tags + k];
                    }
                    d[y] -= 1.0;
                }
                for (k, p) in m.pairwise.iter().enumerate() {
                    grad[tr_r.start + k] += p;
                }
                for pair in g.windows(2) {
                    grad[tr_r.start + pair[0] * tags + pair[1]] -= 1.0;
                }
                for k in 0..tags {
                    grad[st_r.start + k] += m.unary[k];
                    grad[sp_r.start + k] += m.unary[(n - 1) * tags + k];
                }
                grad[st_r.start + g[0]] -= 1.0;
                grad[sp_r.start + g[n - 1]] -= 1.0;
            }
        }
        self.backward(batch, &cache, &dem, &mut grad);
        (loss, grad)
    }

    fn backward(&self, batch: &Batch, cache: &NetCache, dem: &Array2<f64>, grad: &mut [f64]) {
        let h = self.hidden;
        let ew_blk = self.layout.emit_w();
        general_mat_mul(1.0, &dem.t(), &cache.out, 1.0, &mut view_mut(grad, ew_blk));
        let eb = self.layout.emit_b().range();
        for row in dem.rows() {
            grad[eb.clone()].iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        let mut dout = Array2::<f64>::zeros(cache.out.raw_dim());
        general_mat_mul(1.0, dem, &view(self.params, ew_blk), 0.0, &mut dout);

        for l in (0..self.layout.layers).rev() {
            let lc = &cache.layers[l];
            let mut dx = Array2::<f64>::zeros(lc.input.raw_dim());
            for d in 0..2 {
                let [w, u, b] = self.layout.lstm(l, d);
                let dh = dout.slice(s![.., d * h..(d + 1) * h]);
                let mut gw = vec![0.0; w.len()];
                let mut gu = vec![0.0; u.len()];
                let part = lstm::backward(
                    &lc.dirs[d],
                    lc.input.view(),
                    view(self.params, w),
                    view(self.params, u),
                    &batch.mask,
                    dh,
                    &batch.shape,
                    d == 1,
                    ndarray::ArrayViewMut2::from_shape((w.rows, w.cols), &mut gw).unwrap(),
                    ndarray::ArrayViewMut2::from_shape((u.rows, u.cols), &mut gu).unwrap(),
                    &mut grad[b.range()],
                );
                grad[w.range()].iter_mut().zip(&gw).for_each(|(g, v)| *g += v);
                grad[u.range()].iter_mut().zip(&gu).for_each(|(g, v)| *g += v);
                dx += &part;
            }
            if let Some(m) = &lc.drop_mask {
                dx *= m;
            }
            dout = dx;
        }
        let emb = self.layout.embed();
        let e = emb.cols;
        for (r, &id) in batch.ids.iter().enumerate() {
            if batch.mask[r] == 0.0 {
                continue;
            }
            let row = dout.row(r);
            let dst = &mut grad[emb.offset + id * e..emb.offset + (id + 1) * e];
            dst.iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamArray {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: NeuralConfig,
    vocab: Vec<String>,
    tagset: TagSet,
    params: Vec<ParamArray>,
}

/// Randomly initialized model; parameters depend only on `seed`.
pub fn init_model(
    config: &NeuralConfig,
    vocab: CharVocab,
    tagset: TagSet,
    seed: u64,
) -> Result<NeuralModel, NeuralError> {
    config.validate()?;
    if vocab.chars().is_empty() {
        return Err(NeuralError::InvalidConfig("empty character vocabulary".into()));
    }
    let layout = Layout::new(config, vocab.len(), tagset.len());
    let params = initialize(
        &layout,
        config.lstm_state,
        &mut seed::rng(seed::derive(seed, "init")),
    );
    Ok(NeuralModel {
        config: config.clone(),
        vocab,
        tagset,
        layout,
        params,
    })
}

fn check_base(base: &str) -> Result<Vec<char>, NeuralError> {
    let chars: Vec<char> = base.chars().collect();
    if chars.is_empty() {
        return Err(NeuralError::EmptySequence);
    }
    if let Some(position) = chars.iter().position(|&c| is_diacritic(c)) {
        return Err(NeuralError::DiacriticsInQuery { position });
    }
    Ok(chars)
}

impl NeuralModel {
    pub fn config(&self) -> &NeuralConfig {
        &self.config
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.layout.total
    }

    fn net(&self) -> Net<'_> {
        self.net_with(&self.params)
    }

    fn net_with<'a>(&'a self, params: &'a [f64]) -> Net<'a> {
        Net {
            layout: &self.layout,
            params,
            hidden: self.config.lstm_state,
        }
    }

    pub(crate) fn encode_chars(&self, chars: &[char]) -> Vec<usize> {
        chars.iter().map(|&c| self.vocab.id(c)).collect()
    }

    /// Characters of `text` that map to UNK (whitespace excluded).
    pub fn unknown_chars(&self, text: &str) -> Vec<char> {
        let mut out: Vec<char> = text
            .chars()
            .filter(|c| !c.is_whitespace() && !self.vocab.contains(*c))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Emission scores (`len × tags`, row-major) of one sequence.
    pub fn forward(&self, base: &str, mode: Mode) -> Result<Vec<f64>, NeuralError> {
        let chars: Vec<char> = base.chars().collect();
        if chars.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        let ids = self.encode_chars(&chars);
        let batch = Batch::new(&[&ids]);
        let em = match mode {
            Mode::Eval => self.net().forward(&batch, None).0,
            Mode::Train { dropout_seed } => {
                let mut rng = seed::rng(dropout_seed);
                self.net()
                    .forward(&batch, Some((&mut rng, self.config.dropout_rate)))
                    .0
            }
        };
        Ok(em.into_raw_vec_and_offset().0)
    }

    /// Eval-mode emissions for many id sequences, batched in input order.
    pub(crate) fn emissions_many(&self, seqs: &[Vec<usize>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(EVAL_BATCH) {
            let refs: Vec<&[usize]> = chunk.iter().map(Vec::as_slice).collect();
            let batch = Batch::new(&refs);
            let (em, _) = self.net().forward(&batch, None);
            for b in 0..chunk.len() {
                out.push(batch.rows_of(&em, b));
            }
        }
        out
    }

    fn crf(&self) -> (&[f64], &[f64], &[f64]) {
        (
            &self.params[self.layout.trans().range()],
            &self.params[self.layout.start().range()],
            &self.params[self.layout.stop().range()],
        )
    }

    pub(crate) fn viterbi(&self, emissions: &[f64]) -> Vec<usize> {
        let (trans, start, stop) = self.crf();
        Lattice::new(emissions, trans, self.tagset.len())
            .with_boundaries(start, stop)
            .viterbi()
            .0
    }

    pub(crate) fn nll_of(&self, emissions: &[f64], gold: &[usize]) -> f64 {
        let (trans, start, stop) = self.crf();
        sequence_nll(emissions, trans, start, stop, gold).expect("aligned")
    }

    pub fn decode(&self, base: &str) -> Result<TaggedWord, NeuralError> {
        check_base(base)?;
        let em = self.forward(base, Mode::Eval)?;
        let path = self.viterbi(&em);
        Ok(self.tagset.decode(base, &path)?)
    }

    /// Decodes many bases; identical bases are decoded once.
    pub fn decode_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, NeuralError> {
        let mut unique: Vec<&str> = bases.to_vec();
        unique.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        unique.dedup();
        let mut seqs = Vec::with_capacity(unique.len());
        for b in &unique {
            let chars = check_base(b)?;
            seqs.push(self.encode_chars(&chars));
        }
        let ems = self.emissions_many(&seqs);
        let mut decoded: HashMap<&str, TaggedWord> = HashMap::with_capacity(unique.len());
        for (b, em) in unique.iter().zip(&ems) {
            let path = self.viterbi(em);
            decoded.insert(b, self.tagset.decode(b, &path)?);
        }
        Ok(bases.iter().map(|b| decoded[b].clone()).collect())
    }

    /// Diacritizes a whitespace-separated line, keeping its whitespace.
    pub fn predict_text(&self, line: &str) -> Result<String, NeuralError> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            return Ok(line.to_string());
        }
        for (index, t) in tokens.iter().enumerate() {
            check_base(t).map_err(|e| NeuralError::Token {
                index,
                source: Box::new(e),
            })?;
        }
        let words = if self.config.verse_level {
            self.decode_verse(&tokens)?
        } else {
            self.decode_many(&tokens)?
        };
        Ok(rebuild_line(line, &words))
    }

    fn decode_verse(&self, tokens: &[&str]) -> Result<Vec<TaggedWord>, NeuralError> {
        let joined = tokens.join(" ");
        let em = self.forward(&joined, Mode::Eval)?;
        let path = self.viterbi(&em);
        let mut out = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        for t in tokens {
            let n = t.chars().count();
            out.push(self.tagset.decode(t, &path[pos..pos + n])?);
            pos += n + 1;
        }
        Ok(out)
    }

    pub(crate) fn loss_and_grad(
        &self,
        params: &[f64],
        seqs: &[&[usize]],
        gold: &[&[usize]],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (f64, Vec<f64>) {
        let batch = Batch::new(seqs);
        self.net_with(params).loss_and_grad(&batch, gold, dropout)
    }

    /// Summed NLL only (no reverse pass).
    pub(crate) fn loss(
        &self,
        params: &[f64],
        seqs: &[&[usize]],
        gold: &[&[usize]],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> f64 {
        let batch = Batch::new(seqs);
        let net = self.net_with(params);
        let (em, _) = net.forward(&batch, dropout);
        let (trans, start, stop) = net.crf_parts();
        gold.iter()
            .enumerate()
            .map(|(b, g)| sequence_nll(&batch.rows_of(&em, b), trans, start, stop, g).expect("aligned"))
            .sum()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config.clone(),
            vocab: self.vocab.chars().iter().map(|c| c.to_string()).collect(),
            tagset: self.tagset.clone(),
            params: self
                .layout
                .blocks
                .iter()
                .map(|b| ParamArray {
                    name: b.name.clone(),
                    shape: [b.rows, b.cols],
                    data: self.params[b.range()].to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<NeuralModel, NeuralError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| NeuralError::Format(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(NeuralError::Format(format!(
                "expected {FORMAT} version {VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        file.config.validate()?;
        let mut chars = Vec::with_capacity(file.vocab.len());
        for s in &file.vocab {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(NeuralError::Format(format!("bad vocabulary entry {s:?}"))),
            }
        }
        let vocab = CharVocab::new(chars.iter().copied());
        if vocab.chars() != chars.as_slice() {
            return Err(NeuralError::Format("vocabulary must be sorted and unique".into()));
        }
        let layout = Layout::new(&file.config, vocab.len(), file.tagset.len());
        if file.params.len() != layout.blocks.len() {
            return Err(NeuralError::Format("parameter block count".into()));
        }
        let mut params = Vec::with_capacity(layout.total);
        for (arr, blk) in file.params.into_iter().zip(&layout.blocks) {
            if arr.name != blk.name || arr.shape != [blk.rows, blk.cols] || arr.data.len() != blk.len() {
                return Err(NeuralError::Format(format!("block {} has wrong name or shape", blk.name)));
            }
            params.extend(arr.data);
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::Format("non-finite parameter".into()));
        }
        Ok(NeuralModel {
            config: file.config,
            vocab,
            tagset: file.tagset,
            layout,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        std::fs::write(path, self.to_json()).map_err(|source| NeuralError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<NeuralModel, NeuralError> {
        let text = std::fs::read_to_string(path).map_err(|source| NeuralError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        NeuralModel::from_json(&text)
    }
}

/// Replaces each whitespace-separated token of `line` by the matching word.
fn rebuild_line(line: &str, words: &[TaggedWord]) -> String {
    let mut out = String::with_capacity(line.len() * 2);
    let mut words = words.iter();
    let mut in_token = false;
    for c in line.chars() {
        if c.is_whitespace() {
            in_token = false;
            out.push(c);
        } else if !in_token {
            in_token = true;
            out.push_str(&words.next().expect("one word per token").diacritized());
        }
    }
    out
}
