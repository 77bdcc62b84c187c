use serde::{Deserialize, Serialize};

use super::NeuralError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralConfig {
    pub embedding_dim: usize,
    /// Hidden state size of each LSTM direction.
    pub lstm_state: usize,
    pub num_bilstm_layers: usize,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epoch `t` trains at `learning_rate / (1 + decay_rate * t)`.
    pub decay_rate: f64,
    /// Epochs without a validation WER improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Train and predict on whole verses instead of isolated words.
    pub verse_level: bool,
    /// Clip the batch gradient to this Euclidean norm. Off by default.
    pub clip_norm: Option<f64>,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        NeuralConfig {
            embedding_dim: 100,
            lstm_state: 200,
            num_bilstm_layers: 2,
            dropout_rate: 0.25,
            batch_size: 5,
            learning_rate: 0.01,
            decay_rate: 0.05,
            patience: 10,
            max_epochs: 100,
            seed: 1,
            verse_level: false,
            clip_norm: None,
        }
    }
}

impl NeuralConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        for (name, v) in [
            ("embedding_dim", self.embedding_dim),
            ("lstm_state", self.lstm_state),
            ("num_bilstm_layers", self.num_bilstm_layers),
            ("batch_size", self.batch_size),
            ("patience", self.patience),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return bad(format!("decay_rate must be non-negative, got {}", self.decay_rate));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate / (1.0 + self.decay_rate * epoch as f64)
    }
}
