//! Hierarchical-attention depth network.
//!
//! Four stages: a convolutional stem (stages 1–2) pools the input to 1/16
//! resolution and a strided entry block brings stage 3 to 1/32, where each
//! block alternates window self-attention on local tokens with frame-level
//! and global self-attention on mean-pooled summary tokens; fused summaries
//! are blended back into their windows through a residual MLP. Stage 4
//! refines the windowed locals with stacked pre-norm window MHSA layers, and
//! a 1×1 head decodes per-frame depth and confidence at input resolution.
//!
//! Everything runs in f64 and is serial and deterministic; attention
//! reductions are canonical (see [`crate::numeric`]), which makes the whole
//! forward pass bitwise equivariant under frame permutations (with their
//! embeddings).

mod complexity;
mod config;
mod head;
mod layers;
mod model;
mod stem;
mod tokens;

pub use complexity::{complexity_report, ComplexityReport};
pub use config::AhaConfig;
pub use head::DepthHead;
pub use layers::{AhaBlock, RefineLayer, WindowAttention};
pub use model::{AhaModel, NetOutput};
pub use stem::{ConvBlock, ConvStem};
pub use tokens::{frame_tok, frame_tok_masked, untok, win_tok, FrameTokens, TokenLayout};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AhaError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("expected {expected} input frames, got {got}")]
    FrameCount { expected: usize, got: usize },
    #[error("frame {frame} is {got_w}x{got_h}, config wants {want_w}x{want_h}")]
    BadFrameSize {
        frame: usize,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
