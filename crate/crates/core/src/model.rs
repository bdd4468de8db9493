//! The composite sentence-pair scorer: per-sentence encoders with parallel
//! dilated-CNN and LSTM branches feeding two fully connected layers, merged
//! by concatenation into a two-way softmax head.
//!
//! Each encoder maps a padded embedding matrix to a 10-dimensional vector;
//! the two vectors are concatenated (metaphor side first) and the head's
//! positive-class probability is the paraphrase score.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Condition, PairRecord};
use crate::embeddings::EncodedSentence;
use crate::nn::{
    global_max_pool, global_max_pool_backward, softmax, softmax_cross_entropy, with_prefix,
    with_prefix_mut, Activation, AdamState, Checkpoint, Conv1d, Conv1dCache, Conv1dGrads, Dense,
    FeedForward, FeedForwardCache, FeedForwardGrads, Lstm, LstmCache, LstmGrads, NnError,
    ParamSet, Tensor,
};

/// Sentence-vector width fixed by the architecture.
pub const SENTENCE_VECTOR_DIM: usize = 10;
/// Hidden width of the classifier head (20 -> 16 -> 2).
pub const HEAD_HIDDEN: usize = 16;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("embedding table dimension {table} does not match config {config}")]
    EmbeddingDimMismatch { table: usize, config: usize },
    #[error("pair {pair_id:?} has no context but input mode is with_context")]
    MissingContext { pair_id: String },
    #[error("checkpoint configuration: {0}")]
    BadCheckpointConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Dilated-convolution branch settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub filters: usize,
    pub width: usize,
    pub dilation: usize,
    pub layers: usize,
}

/// Shape of one sentence encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub max_len: usize,
    pub embedding_dim: usize,
    pub cnn: CnnConfig,
    pub lstm_hidden: usize,
    /// Widths of the two fully connected layers; the second must be 10.
    pub fc_sizes: [usize; 2],
    /// Activation of the hidden layers; the final 10-dim layer is identity.
    #[serde(default = "default_activation")]
    pub hidden_activation: Activation,
}

fn default_activation() -> Activation {
    Activation::Relu
}

/// What text feeds the encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    TargetOnly,
    WithContext,
}

impl std::fmt::Display for InputMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputMode::TargetOnly => write!(f, "target_only"),
            InputMode::WithContext => write!(f, "with_context"),
        }
    }
}

impl EncoderConfig {
    /// Paper-gap defaults: 32 filters of width 3 at dilation 2 in 2 layers,
    /// LSTM hidden 64, fully connected 64 -> 10, ReLU.
    pub fn default_for(input_mode: InputMode, embedding_dim: usize) -> EncoderConfig {
        EncoderConfig {
            max_len: match input_mode {
                InputMode::TargetOnly => 50,
                InputMode::WithContext => 100,
            },
            embedding_dim,
            cnn: CnnConfig {
                filters: 32,
                width: 3,
                dilation: 2,
                layers: 2,
            },
            lstm_hidden: 64,
            fc_sizes: [64, SENTENCE_VECTOR_DIM],
            hidden_activation: Activation::Relu,
        }
    }

    /// Input rows the convolution stack consumes to emit one output row.
    pub fn receptive_field(&self) -> usize {
        self.cnn.layers * (self.cnn.width - 1) * self.cnn.dilation + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sizes = [
            ("max_len", self.max_len),
            ("embedding_dim", self.embedding_dim),
            ("cnn.filters", self.cnn.filters),
            ("cnn.width", self.cnn.width),
            ("cnn.dilation", self.cnn.dilation),
            ("cnn.layers", self.cnn.layers),
            ("lstm_hidden", self.lstm_hidden),
            ("fc_sizes[0]", self.fc_sizes[0]),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(ModelError::BadConfig(format!("{name} must be positive")));
            }
        }
        if self.fc_sizes[1] != SENTENCE_VECTOR_DIM {
            return Err(ModelError::BadConfig(format!(
                "final fully connected size must be {SENTENCE_VECTOR_DIM}, got {}",
                self.fc_sizes[1]
            )));
        }
        if self.receptive_field() > self.max_len {
            return Err(ModelError::BadConfig(format!(
                "receptive field {} exceeds max_len {}",
                self.receptive_field(),
                self.max_len
            )));
        }
        Ok(())
    }

    /// Closed-form trainable parameter count of one encoder.
    pub fn encoder_param_count(&self) -> usize {
        let c = &self.cnn;
        let mut total = c.filters * c.width * self.embedding_dim + c.filters;
        total += (c.layers - 1) * (c.filters * c.width * c.filters + c.filters);
        let h = self.lstm_hidden;
        total += 4 * h * self.embedding_dim + 4 * h * h + 4 * h;
        let concat = c.filters + h;
        total += self.fc_sizes[0] * concat + self.fc_sizes[0];
        total += self.fc_sizes[1] * self.fc_sizes[0] + self.fc_sizes[1];
        total
    }

    /// Closed-form parameter count of the whole model (two encoders + head).
    pub fn model_param_count(&self) -> usize {
        let head = HEAD_HIDDEN * (2 * SENTENCE_VECTOR_DIM) + HEAD_HIDDEN
            + 2 * HEAD_HIDDEN
            + 2;
        2 * self.encoder_param_count() + head
    }
}

/// One per-sentence encoder: conv stack + LSTM, concatenated, then two
/// fully connected layers down to the 10-dim sentence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEncoder {
    pub convs: Vec<Conv1d>,
    pub lstm: Lstm,
    pub fc: FeedForward,
}

#[derive(Debug)]
pub struct EncoderCache {
    conv_caches: Vec<Conv1dCache>,
    pool_argmax: Vec<usize>,
    pool_input_shape: Vec<usize>,
    lstm_cache: LstmCache,
    fc_cache: FeedForwardCache,
}

#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub convs: Vec<Conv1dGrads>,
    pub lstm: LstmGrads,
    pub fc: FeedForwardGrads,
}

impl SentenceEncoder {
    fn new<R: Rng>(config: &EncoderConfig, rng: &mut R) -> SentenceEncoder {
        let mut convs = Vec::with_capacity(config.cnn.layers);
        for layer in 0..config.cnn.layers {
            let in_channels = if layer == 0 {
                config.embedding_dim
            } else {
                config.cnn.filters
            };
            convs.push(Conv1d::new(
                in_channels,
                config.cnn.filters,
                config.cnn.width,
                config.cnn.dilation,
                config.hidden_activation,
                rng,
            ));
        }
        let lstm = Lstm::new(config.embedding_dim, config.lstm_hidden, rng);
        let concat = config.cnn.filters + config.lstm_hidden;
        let fc = FeedForward {
            layers: vec![
                Dense::new(concat, config.fc_sizes[0], config.hidden_activation, rng),
                Dense::new(config.fc_sizes[0], config.fc_sizes[1], Activation::Identity, rng),
            ],
        };
        SentenceEncoder { convs, lstm, fc }
    }

    /// All-zero parameters, for overwriting from a checkpoint.
    fn zeroed(config: &EncoderConfig) -> SentenceEncoder {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut enc = SentenceEncoder::new(config, &mut rng);
        for (_, t) in enc.params_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        enc
    }

    /// The conv stack sees the first `clamp(valid_length, receptive_field,
    /// max_len)` rows (padding rows are zero, so over-reading is harmless);
    /// the LSTM consumes exactly the valid prefix.
    fn forward_cached(
        &self,
        enc: &EncodedSentence,
        config: &EncoderConfig,
    ) -> Result<(EncoderCache, Vec<f64>), NnError> {
        let max_len = enc.matrix.shape()[0];
        let dim = enc.matrix.shape()[1];
        let conv_len = enc
            .valid_length
            .max(config.receptive_field())
            .min(max_len);
        let conv_input = slice_rows(&enc.matrix, conv_len, dim);

        let mut conv_caches = Vec::with_capacity(self.convs.len());
        let mut cur = conv_input;
        for conv in &self.convs {
            let (cache, out) = conv.forward_cached(&cur)?;
            conv_caches.push(cache);
            cur = out;
        }
        let pool_input_shape = cur.shape().to_vec();
        let (pooled, pool_argmax) = global_max_pool(&cur)?;

        let lstm_len = enc.valid_length.min(max_len);
        let lstm_input = slice_rows(&enc.matrix, lstm_len, dim);
        let (lstm_cache, hidden) = self.lstm.forward_cached(&lstm_input)?;

        let mut concat = pooled;
        concat.extend_from_slice(&hidden);
        let (fc_cache, vector) = self.fc.forward_cached(&concat)?;
        Ok((
            EncoderCache {
                conv_caches,
                pool_argmax,
                pool_input_shape,
                lstm_cache,
                fc_cache,
            },
            vector,
        ))
    }

    fn forward(&self, enc: &EncodedSentence, config: &EncoderConfig) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(enc, config)?.1)
    }

    fn backward(&self, cache: &EncoderCache, grad_out: &[f64]) -> EncoderGrads {
        let (fc_grads, concat_grad) = self.fc.backward(&cache.fc_cache, grad_out);
        let filters = cache.pool_input_shape[1];
        let (pool_grad, hidden_grad) = concat_grad.split_at(filters);

        let mut conv_grads: Vec<Option<Conv1dGrads>> = vec![None; self.convs.len()];
        let mut g = global_max_pool_backward(&cache.pool_input_shape, &cache.pool_argmax, pool_grad);
        for (idx, conv) in self.convs.iter().enumerate().rev() {
            let (cg, gx) = conv.backward(&cache.conv_caches[idx], &g);
            conv_grads[idx] = Some(cg);
            g = gx;
        }

        let (lstm_grads, _) = self.lstm.backward(&cache.lstm_cache, hidden_grad);
        EncoderGrads {
            convs: conv_grads.into_iter().map(|c| c.unwrap()).collect(),
            lstm: lstm_grads,
            fc: fc_grads,
        }
    }

    fn zero_grads(&self) -> EncoderGrads {
        EncoderGrads {
            convs: self.convs.iter().map(Conv1d::zero_grads).collect(),
            lstm: self.lstm.zero_grads(),
            fc: self.fc.zero_grads(),
        }
    }
}

fn slice_rows(matrix: &Tensor, rows: usize, dim: usize) -> Tensor {
    Tensor::from_vec(&[rows, dim], matrix.data()[..rows * dim].to_vec())
        .expect("prefix slice preserves row length")
}

impl ParamSet for SentenceEncoder {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            out.extend(with_prefix(&format!("conv.{i}"), conv.params()));
        }
        out.extend(with_prefix("lstm", self.lstm.params()));
        out.extend(with_prefix("fc", self.fc.params()));
        out
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, conv) in self.convs.iter_mut().enumerate() {
            out.extend(with_prefix_mut(&format!("conv.{i}"), conv.params_mut()));
        }
        out.extend(with_prefix_mut("lstm", self.lstm.params_mut()));
        out.extend(with_prefix_mut("fc", self.fc.params_mut()));
        out
    }
}

impl EncoderGrads {
    fn accumulate(&mut self, other: &EncoderGrads) {
        for (a, b) in self.convs.iter_mut().zip(&other.convs) {
            a.accumulate(b);
        }
        self.lstm.accumulate(&other.lstm);
        self.fc.accumulate(&other.fc);
    }

    fn scale(&mut self, s: f64) {
        for c in &mut self.convs {
            c.scale(s);
        }
        self.lstm.scale(s);
        self.fc.scale(s);
    }

    fn push_named(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("{prefix}.conv.{i}.kernels"), c.kernels.clone()));
            out.push((format!("{prefix}.conv.{i}.bias"), c.bias.clone()));
        }
        out.push((format!("{prefix}.lstm.w_input"), self.lstm.w_input.clone()));
        out.push((
            format!("{prefix}.lstm.w_recurrent"),
            self.lstm.w_recurrent.clone(),
        ));
        out.push((format!("{prefix}.lstm.bias"), self.lstm.bias.clone()));
        for (i, l) in self.fc.layers.iter().enumerate() {
            out.push((format!("{prefix}.fc.layers.{i}.weights"), l.weights.clone()));
            out.push((format!("{prefix}.fc.layers.{i}.bias"), l.bias.clone()));
        }
    }
}

/// Serializable identity of a model: architecture plus input mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub encoder: EncoderConfig,
    pub input_mode: InputMode,
}

/// The full two-encoder scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct MpatModel {
    pub encoder_a: SentenceEncoder,
    pub encoder_b: SentenceEncoder,
    pub head: FeedForward,
    pub config: EncoderConfig,
    pub input_mode: InputMode,
}

#[derive(Debug)]
pub struct ModelCache {
    cache_a: EncoderCache,
    cache_b: EncoderCache,
    head_cache: FeedForwardCache,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub encoder_a: EncoderGrads,
    pub encoder_b: EncoderGrads,
    pub head: FeedForwardGrads,
}

impl ModelGrads {
    pub fn accumulate(&mut self, other: &ModelGrads) {
        self.encoder_a.accumulate(&other.encoder_a);
        self.encoder_b.accumulate(&other.encoder_b);
        self.head.accumulate(&other.head);
    }

    pub fn scale(&mut self, s: f64) {
        self.encoder_a.scale(s);
        self.encoder_b.scale(s);
        self.head.scale(s);
    }

    /// Flatten to `(name, tensor)` pairs in the exact order of
    /// [`MpatModel::params`].
    pub fn into_named(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.encoder_a.push_named("encoder_a", &mut out);
        self.encoder_b.push_named("encoder_b", &mut out);
        for (i, l) in self.head.layers.iter().enumerate() {
            out.push((format!("head.layers.{i}.weights"), l.weights.clone()));
            out.push((format!("head.layers.{i}.bias"), l.bias.clone()));
        }
        out
    }
}

impl MpatModel {
    /// Seeded construction: Glorot-uniform weights, zero biases. Identical
    /// seeds give identical models.
    pub fn new(
        config: EncoderConfig,
        input_mode: InputMode,
        seed: u64,
    ) -> Result<MpatModel, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder_a = SentenceEncoder::new(&config, &mut rng);
        let encoder_b = SentenceEncoder::new(&config, &mut rng);
        let head = FeedForward {
            layers: vec![
                Dense::new(
                    2 * SENTENCE_VECTOR_DIM,
                    HEAD_HIDDEN,
                    config.hidden_activation,
                    &mut rng,
                ),
                Dense::new(HEAD_HIDDEN, 2, Activation::Identity, &mut rng),
            ],
        };
        Ok(MpatModel {
            encoder_a,
            encoder_b,
            head,
            config,
            input_mode,
        })
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            encoder: self.config.clone(),
            input_mode: self.input_mode,
        }
    }

    /// Encode one sentence with the given side's encoder (false = metaphor
    /// side a, true = candidate side b).
    pub fn encode_sentence(
        &self,
        enc: &EncodedSentence,
        candidate_side: bool,
    ) -> Result<Vec<f64>, ModelError> {
        self.check_input(enc)?;
        let encoder = if candidate_side {
            &self.encoder_b
        } else {
            &self.encoder_a
        };
        Ok(encoder.forward(enc, &self.config)?)
    }

    fn check_input(&self, enc: &EncodedSentence) -> Result<(), ModelError> {
        if enc.matrix.shape()[1] != self.config.embedding_dim {
            return Err(ModelError::EmbeddingDimMismatch {
                table: enc.matrix.shape()[1],
                config: self.config.embedding_dim,
            });
        }
        Ok(())
    }

    pub fn forward_cached(
        &self,
        sentence_a: &EncodedSentence,
        sentence_b: &EncodedSentence,
    ) -> Result<ModelCache, ModelError> {
        self.check_input(sentence_a)?;
        self.check_input(sentence_b)?;
        let (cache_a, va) = self.encoder_a.forward_cached(sentence_a, &self.config)?;
        let (cache_b, vb) = self.encoder_b.forward_cached(sentence_b, &self.config)?;
        let mut concat = va;
        concat.extend_from_slice(&vb);
        let (head_cache, logits) = self.head.forward_cached(&concat)?;
        Ok(ModelCache {
            cache_a,
            cache_b,
            head_cache,
            logits,
        })
    }

    /// Positive-class probability that `sentence_b` aptly paraphrases
    /// `sentence_a`. Argument order matters.
    pub fn score_pair(
        &self,
        sentence_a: &EncodedSentence,
        sentence_b: &EncodedSentence,
    ) -> Result<f64, ModelError> {
        let cache = self.forward_cached(sentence_a, sentence_b)?;
        Ok(softmax(&cache.logits)[1])
    }

    /// Loss, score, and full parameter gradients for one labeled pair.
    pub fn loss_and_grads(
        &self,
        sentence_a: &EncodedSentence,
        sentence_b: &EncodedSentence,
        label: bool,
    ) -> Result<(f64, f64, ModelGrads), ModelError> {
        let cache = self.forward_cached(sentence_a, sentence_b)?;
        let (loss, probs, dlogits) = softmax_cross_entropy(&cache.logits, label as usize);
        let (head_grads, concat_grad) = self.head.backward(&cache.head_cache, &dlogits);
        let (grad_a, grad_b) = concat_grad.split_at(SENTENCE_VECTOR_DIM);
        let enc_a_grads = self.encoder_a.backward(&cache.cache_a, grad_a);
        let enc_b_grads = self.encoder_b.backward(&cache.cache_b, grad_b);
        if !loss.is_finite() {
            return Err(ModelError::Nn(NnError::NonFinite {
                context: "loss_and_grads",
            }));
        }
        Ok((
            loss,
            probs[1],
            ModelGrads {
                encoder_a: enc_a_grads,
                encoder_b: enc_b_grads,
                head: head_grads,
            },
        ))
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            encoder_a: self.encoder_a.zero_grads(),
            encoder_b: self.encoder_b.zero_grads(),
            head: self.head.zero_grads(),
        }
    }

    /// Snapshot parameters (and optimizer state) into a checkpoint.
    pub fn to_checkpoint(&self, seed: u64, adam: Option<&AdamState>) -> Checkpoint {
        let config_json = serde_json::to_string(&self.descriptor())
            .expect("descriptor serialization cannot fail");
        Checkpoint::capture(self, seed, config_json, adam)
    }

    /// Rebuild a model from a checkpoint written by [`Self::to_checkpoint`].
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<MpatModel, ModelError> {
        let descriptor: ModelDescriptor = serde_json::from_str(&ckpt.config_json)
            .map_err(|e| ModelError::BadCheckpointConfig(e.to_string()))?;
        descriptor.encoder.validate()?;
        let mut model = MpatModel {
            encoder_a: SentenceEncoder::zeroed(&descriptor.encoder),
            encoder_b: SentenceEncoder::zeroed(&descriptor.encoder),
            head: FeedForward {
                layers: vec![
                    Dense {
                        weights: Tensor::zeros(&[HEAD_HIDDEN, 2 * SENTENCE_VECTOR_DIM]),
                        bias: Tensor::zeros(&[HEAD_HIDDEN]),
                        activation: descriptor.encoder.hidden_activation,
                    },
                    Dense {
                        weights: Tensor::zeros(&[2, HEAD_HIDDEN]),
                        bias: Tensor::zeros(&[2]),
                        activation: Activation::Identity,
                    },
                ],
            },
            config: descriptor.encoder,
            input_mode: descriptor.input_mode,
        };
        ckpt.apply_to(&mut model)?;
        Ok(model)
    }
}

impl ParamSet for MpatModel {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut out = with_prefix("encoder_a", self.encoder_a.params());
        out.extend(with_prefix("encoder_b", self.encoder_b.params()));
        out.extend(with_prefix("head", self.head.params()));
        out
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = with_prefix_mut("encoder_a", self.encoder_a.params_mut());
        out.extend(with_prefix_mut("encoder_b", self.encoder_b.params_mut()));
        out.extend(with_prefix_mut("head", self.head.params_mut()));
        out
    }
}

/// Binary decision from a score: 1 iff the score is at least 0.5.
pub fn classify(score: f64) -> u8 {
    (score >= 0.5) as u8
}

/// Affine map of a [0,1] score onto the 1-4 rating scale.
pub fn gradient_rating(score: f64) -> f64 {
    1.0 + 3.0 * score
}

/// Text actually fed to the two encoders under the given input mode.
pub fn render_input(pair: &PairRecord, mode: InputMode) -> Result<(String, String), ModelError> {
    match mode {
        InputMode::TargetOnly => Ok((pair.metaphor_text.clone(), pair.candidate_text.clone())),
        InputMode::WithContext => {
            if pair.condition() == Condition::OutOfContext {
                return Err(ModelError::MissingContext {
                    pair_id: pair.pair_id.clone(),
                });
            }
            Ok((pair.rendered_metaphor(), pair.rendered_candidate()))
        }
    }
}
