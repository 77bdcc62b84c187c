//! Flat parameter storage with named blocks.
//!
//! Block order: `embed` (V×E); per layer `l` and direction `d ∈ {fwd, bwd}`:
//! `lstm{l}.{d}.w` (4H×I), `lstm{l}.{d}.u` (4H×H), `lstm{l}.{d}.b` (1×4H);
//! then `emit.w` (T×2H), `emit.b` (1×T), `crf.trans` (T×T), `crf.start`
//! (1×T), `crf.stop` (1×T). Gate rows are ordered input, forget, output,
//! cell candidate.

use std::collections::HashMap;

use ndarray::{ArrayView2, ArrayViewMut2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::NeuralConfig;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub layers: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(config: &NeuralConfig, vocab: usize, tags: usize) -> Layout {
        let (e, h) = (config.embedding_dim, config.lstm_state);
        let mut shapes = vec![("embed".to_string(), vocab, e)];
        for l in 0..config.num_bilstm_layers {
            let input = if l == 0 { e } else { 2 * h };
            for d in ["fwd", "bwd"] {
                shapes.push((format!("lstm{l}.{d}.w"), 4 * h, input));
                shapes.push((format!("lstm{l}.{d}.u"), 4 * h, h));
                shapes.push((format!("lstm{l}.{d}.b"), 1, 4 * h));
            }
        }
        shapes.push(("emit.w".into(), tags, 2 * h));
        shapes.push(("emit.b".into(), 1, tags));
        shapes.push(("crf.trans".into(), tags, tags));
        shapes.push(("crf.start".into(), 1, tags));
        shapes.push(("crf.stop".into(), 1, tags));
        let mut offset = 0;
        let blocks = shapes
            .into_iter()
            .map(|(name, rows, cols)| {
                let b = Block {
                    name,
                    rows,
                    cols,
                    offset,
                };
                offset += rows * cols;
                b
            })
            .collect();
        Layout {
            blocks,
            layers: config.num_bilstm_layers,
            total: offset,
        }
    }

    pub fn embed(&self) -> &Block {
        &self.blocks[0]
    }

    /// `(w, u, b)` of layer `l`, direction `d` (0 forward, 1 backward).
    pub fn lstm(&self, l: usize, d: usize) -> [&Block; 3] {
        let i = 1 + (l * 2 + d) * 3;
        [&self.blocks[i], &self.blocks[i + 1], &self.blocks[i + 2]]
    }

    fn tail(&self, k: usize) -> &Block {
        &self.blocks[1 + self.layers * 6 + k]
    }

    pub fn emit_w(&self) -> &Block {
        self.tail(0)
    }

    pub fn emit_b(&self) -> &Block {
        self.tail(1)
    }

    pub fn trans(&self) -> &Block {
        self.tail(2)
    }

    pub fn start(&self) -> &Block {
        self.tail(3)
    }

    pub fn stop(&self) -> &Block {
        self.tail(4)
    }

    pub fn find(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

pub fn view<'a>(data: &'a [f64], b: &Block) -> ArrayView2<'a, f64> {
    ArrayView2::from_shape((b.rows, b.cols), &data[b.range()]).expect("block shape")
}

pub fn view_mut<'a>(data: &'a mut [f64], b: &Block) -> ArrayViewMut2<'a, f64> {
    ArrayViewMut2::from_shape((b.rows, b.cols), &mut data[b.range()]).expect("block shape")
}

/// Uniform ±0.1 weights, forget-gate biases 1, other biases 0.
pub fn initialize(layout: &Layout, hidden: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut data = vec![0.0; layout.total];
    for b in &layout.blocks {
        let is_bias = b.name.ends_with(".b") || b.name == "emit.b";
        if is_bias {
            if b.name.starts_with("lstm") {
                data[b.offset + hidden..b.offset + 2 * hidden].fill(1.0);
            }
        } else {
            for v in &mut data[b.range()] {
                *v = rng.random_range(-0.1..=0.1);
            }
        }
    }
    data
}

/// Character inventory: PAD, UNK, then observed characters in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    pub fn new(chars: impl IntoIterator<Item = char>) -> CharVocab {
        let mut chars: Vec<char> = chars.into_iter().collect();
        chars.sort_unstable();
        chars.dedup();
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + 2)).collect();
        CharVocab { chars, index }
    }

    /// Including PAD and UNK.
    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// Observed characters (ids 2..).
    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}
