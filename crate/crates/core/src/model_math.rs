//! Parameter counting, training FLOPs, perplexity, and rotary embeddings
//! for LLaMA-style decoder configurations.
//!
//! The accounting assumes untied input/output embeddings, no bias terms,
//! RMSNorm-style scales (d parameters per norm, two per layer plus a final
//! one), and attention projections of 4·d² per layer regardless of head
//! count. Training compute is 6·N·D with embedding parameters included in N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_size: u64,
    pub num_layers: u64,
    pub intermediate_size: u64,
    pub vocab_size: u64,
    pub context_length: u64,
    pub rope_theta: Real,
    pub head_dim: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_size: 1024,
            num_layers: 8,
            intermediate_size: 4096,
            vocab_size: 15_000,
            context_length: 128,
            rope_theta: 20.0,
            head_dim: 64,
        }
    }
}

impl ModelConfig {
    /// Config with the given shape and the default vocabulary, context, and
    /// rope settings; `head_dim` shrinks to the hidden size when needed.
    pub fn with_shape(hidden_size: u64, num_layers: u64, intermediate_size: u64) -> Self {
        let defaults = ModelConfig::default();
        ModelConfig {
            hidden_size,
            num_layers,
            intermediate_size,
            head_dim: defaults.head_dim.min(hidden_size),
            ..defaults
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, u64); 5] = [
            ("hidden_size", self.hidden_size),
            ("num_layers", self.num_layers),
            ("intermediate_size", self.intermediate_size),
            ("vocab_size", self.vocab_size),
            ("context_length", self.context_length),
        ];
        for (field, value) in positive {
            if value == 0 {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(2) {
            return Err(Error::invalid("head_dim", "must be positive and even"));
        }
        if !self.hidden_size.is_multiple_of(self.head_dim) {
            return Err(Error::invalid(
                "head_dim",
                format!(
                    "{} does not divide hidden_size {}",
                    self.head_dim, self.hidden_size
                ),
            ));
        }
        if self.rope_theta.is_nan() || self.rope_theta <= 0.0 {
            return Err(Error::invalid("rope_theta", "must be positive"));
        }
        Ok(())
    }
}

/// Exact parameter breakdown of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub embedding: u64,
    pub lm_head: u64,
    pub per_layer: u64,
    pub final_norm: u64,
    pub total: u64,
}

/// Counts parameters: 2·V·d embeddings (untied), per layer 4·d² attention,
/// 3·d·d_ff gated MLP, and 2·d norm scales, plus the final norm.
pub fn count_params(config: &ModelConfig) -> Result<ParamCount> {
    config.validate()?;
    let d = config.hidden_size;
    let embedding = config.vocab_size * d;
    let lm_head = config.vocab_size * d;
    let per_layer = 4 * d * d + 3 * d * config.intermediate_size + 2 * d;
    let final_norm = d;
    Ok(ParamCount {
        embedding,
        lm_head,
        per_layer,
        final_norm,
        total: embedding + lm_head + config.num_layers * per_layer + final_norm,
    })
}

/// Training compute in FLOPs: 6 · params · tokens, embeddings included.
pub fn training_flops(params_total: u64, tokens: u64) -> Real {
    6.0 * params_total as Real * tokens as Real
}

/// Perplexity of a mean per-token cross-entropy in nats.
pub fn perplexity(mean_cross_entropy: Real) -> Real {
    mean_cross_entropy.exp()
}

/// Cost of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunCost {
    pub params_total: u64,
    pub tokens: u64,
    pub flops: Real,
}

impl RunCost {
    pub fn new(params_total: u64, tokens: u64) -> Self {
        RunCost {
            params_total,
            tokens,
            flops: training_flops(params_total, tokens),
        }
    }
}

// ---------------------------------------------------------------------------
// Reference configurations
// ---------------------------------------------------------------------------

/// Token ids reserved beyond the nominal vocabulary in reported totals
/// (begin/end/pad markers).
pub const REPORTED_RESERVED_IDS: u64 = 3;

/// Nominal vocabulary of the reference configurations.
pub const REFERENCE_VOCAB_SIZE: u64 = 15_000;

/// One row of the published reference table: configuration plus its
/// reported size in hundredths of a million parameters (e.g. 16496 for
/// 164.96M).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceConfig {
    pub hidden_size: u64,
    pub num_layers: u64,
    pub intermediate_size: u64,
    pub reported_hundredths: u64,
}

/// The 18 reference configurations: hidden sizes 32–1024, 2/4/8 layers,
/// intermediate size 4× hidden.
pub fn reference_table() -> &'static [ReferenceConfig; 18] {
    const T: [ReferenceConfig; 18] = {
        const fn row(h: u64, l: u64, m: u64) -> ReferenceConfig {
            ReferenceConfig {
                hidden_size: h,
                num_layers: l,
                intermediate_size: h * 4,
                reported_hundredths: m,
            }
        }
        [
            row(1024, 8, 16496),
            row(1024, 4, 9784),
            row(1024, 2, 6428),
            row(512, 8, 4892),
            row(512, 4, 3214),
            row(512, 2, 2375),
            row(256, 8, 1607),
            row(256, 4, 1187),
            row(256, 2, 977),
            row(128, 8, 594),
            row(128, 4, 489),
            row(128, 2, 436),
            row(64, 8, 244),
            row(64, 4, 218),
            row(64, 2, 205),
            row(32, 8, 109),
            row(32, 4, 102),
            row(32, 2, 99),
        ]
    };
    &T
}

/// Size of a configuration under the reference reporting convention: the
/// vocabulary is extended by [`REPORTED_RESERVED_IDS`] and the value in
/// millions is truncated (not rounded) to two decimals. Returned in
/// hundredths of a million so the comparison stays in integers.
pub fn reported_size_hundredths(hidden_size: u64, num_layers: u64, intermediate_size: u64) -> u64 {
    let config = ModelConfig {
        vocab_size: REFERENCE_VOCAB_SIZE + REPORTED_RESERVED_IDS,
        ..ModelConfig::with_shape(hidden_size, num_layers, intermediate_size)
    };
    let total = count_params(&config)
        .expect("reference configs are valid")
        .total;
    total / 10_000
}

/// Formats hundredths of a million as a decimal string (16496 → "164.96").
pub fn format_hundredths(hundredths: u64) -> String {
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

// ---------------------------------------------------------------------------
// Rotary position embeddings
// ---------------------------------------------------------------------------

/// Rotary embedding parameters. `pi_scale` is the position-interpolation
/// factor: positions are divided by it, so 1 disables interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeConfig<T = Real> {
    pub theta: T,
    pub head_dim: usize,
    pub pi_scale: T,
}

impl<T: Scalar> RopeConfig<T> {
    pub fn new(theta: T, head_dim: usize) -> Self {
        RopeConfig {
            theta,
            head_dim,
            pi_scale: T::one(),
        }
    }

    pub fn with_pi_scale(mut self, pi_scale: T) -> Self {
        self.pi_scale = pi_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_nan() || self.theta <= T::zero() {
            return Err(Error::invalid("theta", "must be positive"));
        }
        if self.pi_scale < T::one() {
            return Err(Error::invalid("pi_scale", "must be at least 1"));
        }
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(2) {
            return Err(Error::OddVectorLength { len: self.head_dim });
        }
        Ok(())
    }
}

/// Rotates consecutive pairs `(x_{2i}, x_{2i+1})` by `m·ω_i`, where
/// `m = position / pi_scale` and `ω_i = theta^(−2i/head_dim)`. Each pair's
/// Euclidean norm is preserved.
pub fn rope_rotate<T: Scalar>(
    vector: &[T],
    position: u64,
    config: &RopeConfig<T>,
) -> Result<Vec<T>> {
    config.validate()?;
    if !vector.len().is_multiple_of(2) {
        return Err(Error::OddVectorLength { len: vector.len() });
    }
    if vector.len() != config.head_dim {
        return Err(Error::invalid(
            "head_dim",
            format!(
                "vector length {} != head_dim {}",
                vector.len(),
                config.head_dim
            ),
        ));
    }
    let m = T::from_u64(position).expect("position representable") / config.pi_scale;
    let dim = T::from_usize(config.head_dim).expect("head_dim representable");
    let two = T::one() + T::one();
    let mut out = Vec::with_capacity(vector.len());
    for (i, pair) in vector.chunks_exact(2).enumerate() {
        let exponent = -(two * T::from_usize(i).expect("index representable")) / dim;
        let omega = config.theta.powf(exponent);
        let angle = m * omega;
        let (sin, cos) = angle.sin_cos();
        out.push(pair[0] * cos - pair[1] * sin);
        out.push(pair[0] * sin + pair[1] * cos);
    }
    Ok(out)
}
