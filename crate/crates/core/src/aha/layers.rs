//! Window attention with relative positional bias, the three-level
//! hierarchical block, and the stage-4 refinement layer.

use super::tokens::{frame_tok_masked, FrameTokens};
use crate::numeric::{
    layernorm_backward, layernorm_forward, mhsa_backward, mhsa_forward, mlp1_backward,
    mlp1_forward, LayerNorm, MhsaParams, Mlp1, Tensor,
};
use rand::Rng;

/// MHSA shared across windows plus a learnable relative-position bias table
/// of `(2·P_h−1)(2·P_w−1)` entries per head, gathered per cell-offset pair.
#[derive(Debug, Clone)]
pub struct WindowAttention {
    pub attn: MhsaParams,
    /// `[heads, (2·P_h−1)(2·P_w−1)]`, zero-initialized.
    pub bias_table: Tensor,
    pub win_h: usize,
    pub win_w: usize,
}

impl WindowAttention {
    pub fn new<R: Rng>(
        rng: &mut R,
        channels: usize,
        heads: usize,
        win_h: usize,
        win_w: usize,
    ) -> Self {
        let table_len = (2 * win_h - 1) * (2 * win_w - 1);
        Self {
            attn: MhsaParams::fan_in_uniform(rng, channels, heads),
            bias_table: Tensor::zeros(&[heads, table_len]),
            win_h,
            win_w,
        }
    }

    pub fn cells(&self) -> usize {
        self.win_h * self.win_w
    }

    /// Gather index of the (query cell, key cell) offset into the table.
    pub fn bias_indices(&self) -> Vec<usize> {
        let (ph, pw) = (self.win_h, self.win_w);
        let p = ph * pw;
        let span_w = 2 * pw - 1;
        let mut idx = Vec::with_capacity(p * p);
        for q in 0..p {
            let (qy, qx) = (q / pw, q % pw);
            for k in 0..p {
                let (ky, kx) = (k / pw, k % pw);
                let oy = qy + ph - 1 - ky;
                let ox = qx + pw - 1 - kx;
                idx.push(oy * span_w + ox);
            }
        }
        idx
    }

    /// Bias matrix `[heads, P, P]` gathered from the table.
    pub fn gathered_bias(&self) -> Tensor {
        let heads = self.bias_table.shape()[0];
        let p = self.cells();
        let idx = self.bias_indices();
        let mut bias = Tensor::zeros(&[heads, p, p]);
        for h in 0..heads {
            let table = self.bias_table.row(h);
            for (i, &t) in idx.iter().enumerate() {
                bias.data_mut()[h * p * p + i] = table[t];
            }
        }
        bias
    }

    fn with_bias(&self) -> MhsaParams {
        let mut p = self.attn.clone();
        p.bias = Some(self.gathered_bias());
        p
    }

    /// Attention inside one `[P, C]` window.
    pub fn forward_window(&self, x: &Tensor) -> Tensor {
        assert_eq!(x.rows(), self.cells(), "window cell count mismatch");
        mhsa_forward(x, &self.with_bias())
    }

    /// Input gradient plus the bias-table gradient (scatter-added through
    /// the gather).
    pub fn backward_window(&self, x: &Tensor, upstream: &Tensor) -> (Tensor, Tensor) {
        let grads = mhsa_backward(x, &self.with_bias(), upstream);
        let dbias = grads.dbias.expect("bias is always present here");
        let heads = self.bias_table.shape()[0];
        let p = self.cells();
        let idx = self.bias_indices();
        let mut dtable = Tensor::zeros(self.bias_table.shape());
        for h in 0..heads {
            for (i, &t) in idx.iter().enumerate() {
                dtable.data_mut()[h * self.bias_table.shape()[1] + t] +=
                    dbias.data()[h * p * p + i];
            }
        }
        (grads.dx, dtable)
    }

    pub fn zero_output_projection(&mut self) {
        self.attn.zero_output_projection();
    }
}

/// Adds `e` to every row of `x`.
fn add_row_broadcast(x: &Tensor, e: &[f64]) -> Tensor {
    let mut out = x.clone();
    for r in 0..out.rows() {
        for (v, b) in out.row_mut(r).iter_mut().zip(e) {
            *v += b;
        }
    }
    out
}

/// Self-attention over one frame's summary tokens with its frame embedding
/// added to every summary beforehand.
pub fn frame_attention(summaries: &Tensor, embed: &[f64], params: &MhsaParams) -> Tensor {
    mhsa_forward(&add_row_broadcast(summaries, embed), params)
}

/// Self-attention over the concatenation of all frames' summaries.
pub fn global_attention(all_summaries: &Tensor, params: &MhsaParams) -> Tensor {
    mhsa_forward(all_summaries, params)
}

/// One stage-3 block: pre-norm window attention on locals, then frame- and
/// global-level attention on fresh summaries, then a residual MLP blend of
/// each window's fused summary into its local tokens.
#[derive(Debug, Clone)]
pub struct AhaBlock {
    pub ln_win: LayerNorm,
    pub win_attn: WindowAttention,
    pub ln_frame: LayerNorm,
    pub frame_attn: MhsaParams,
    pub ln_global: LayerNorm,
    pub global_attn: MhsaParams,
    pub ln_blend: LayerNorm,
    /// `2C → C → C`; consumes a local token concatenated with its window's
    /// fused summary.
    pub blend: Mlp1,
}

impl AhaBlock {
    pub fn new<R: Rng>(
        rng: &mut R,
        channels: usize,
        heads: usize,
        win_h: usize,
        win_w: usize,
    ) -> Self {
        Self {
            ln_win: LayerNorm::identity(channels),
            win_attn: WindowAttention::new(rng, channels, heads, win_h, win_w),
            ln_frame: LayerNorm::identity(channels),
            frame_attn: MhsaParams::fan_in_uniform(rng, channels, heads),
            ln_global: LayerNorm::identity(channels),
            global_attn: MhsaParams::fan_in_uniform(rng, channels, heads),
            ln_blend: LayerNorm::identity(2 * channels),
            blend: Mlp1::fan_in_uniform(rng, 2 * channels, channels, channels),
        }
    }

    pub fn zero_output_projections(&mut self) {
        self.win_attn.zero_output_projection();
        self.frame_attn.zero_output_projection();
        self.global_attn.zero_output_projection();
        self.blend.zero_output_projection();
    }

    /// Updates every frame's local tokens in place. `embeds[s]` is frame
    /// `s`'s embedding; `use_global` toggles the cross-frame level (the
    /// hierarchy-ablation hook).
    pub fn forward(&self, frames: &mut [FrameTokens], embeds: &[Vec<f64>], use_global: bool) {
        let channels = self.ln_win.dim();
        // 1. window attention on locals
        for frame in frames.iter_mut() {
            for win in &mut frame.windows {
                let normed = layernorm_forward(win, &self.ln_win);
                win.add_assign(&self.win_attn.forward_window(&normed));
            }
        }
        // 2. fresh summaries per frame
        let m = frames[0].windows.len();
        let mut summaries: Vec<Tensor> = frames
            .iter()
            .map(|f| {
                let mut s = Tensor::zeros(&[m, channels]);
                for (w, (win, valid)) in f.windows.iter().zip(&f.valid).enumerate() {
                    s.row_mut(w).copy_from_slice(&frame_tok_masked(win, valid));
                }
                s
            })
            .collect();
        // 3. frame-level attention with embeddings
        for (s, summary) in summaries.iter_mut().enumerate() {
            let normed = layernorm_forward(summary, &self.ln_frame);
            summary.add_assign(&frame_attention(&normed, &embeds[s], &self.frame_attn));
        }
        // 4. global attention over all summaries
        if use_global && frames.len() >= 1 {
            let total = frames.len() * m;
            let mut concat = Tensor::zeros(&[total, channels]);
            for (s, summary) in summaries.iter().enumerate() {
                let normed = layernorm_forward(summary, &self.ln_global);
                for w in 0..m {
                    concat.row_mut(s * m + w).copy_from_slice(normed.row(w));
                }
            }
            let fused = global_attention(&concat, &self.global_attn);
            for (s, summary) in summaries.iter_mut().enumerate() {
                for w in 0..m {
                    for (a, b) in summary.row_mut(w).iter_mut().zip(fused.row(s * m + w)) {
                        *a += b;
                    }
                }
            }
        }
        // 5. blend fused summaries back into their windows
        for (frame, summary) in frames.iter_mut().zip(&summaries) {
            for (w, win) in frame.windows.iter_mut().enumerate() {
                let cells = win.rows();
                let mut cat = Tensor::zeros(&[cells, 2 * channels]);
                for p in 0..cells {
                    cat.row_mut(p)[..channels].copy_from_slice(win.row(p));
                    cat.row_mut(p)[channels..].copy_from_slice(summary.row(w));
                }
                let normed = layernorm_forward(&cat, &self.ln_blend);
                win.add_assign(&mlp1_forward(&normed, &self.blend));
            }
        }
    }
}

/// One stage-4 layer: `X ← X + WinMHSA(LN(X); B_rel)`, then
/// `X ← X + MLP(LN(X))`.
#[derive(Debug, Clone)]
pub struct RefineLayer {
    pub ln1: LayerNorm,
    pub attn: WindowAttention,
    pub ln2: LayerNorm,
    pub mlp: Mlp1,
}

impl RefineLayer {
    pub fn new<R: Rng>(
        rng: &mut R,
        channels: usize,
        heads: usize,
        win_h: usize,
        win_w: usize,
    ) -> Self {
        Self {
            ln1: LayerNorm::identity(channels),
            attn: WindowAttention::new(rng, channels, heads, win_h, win_w),
            ln2: LayerNorm::identity(channels),
            mlp: Mlp1::fan_in_uniform(rng, channels, 2 * channels, channels),
        }
    }

    pub fn zero_output_projections(&mut self) {
        self.attn.zero_output_projection();
        self.mlp.zero_output_projection();
    }

    pub fn forward_window(&self, x: &Tensor) -> Tensor {
        let normed = layernorm_forward(x, &self.ln1);
        let y = x.add(&self.attn.forward_window(&normed));
        let normed = layernorm_forward(&y, &self.ln2);
        y.add(&mlp1_forward(&normed, &self.mlp))
    }

    /// Gradient w.r.t. the window input.
    pub fn backward_window(&self, x: &Tensor, upstream: &Tensor) -> Tensor {
        let a = layernorm_forward(x, &self.ln1);
        let y = x.add(&self.attn.forward_window(&a));
        let c = layernorm_forward(&y, &self.ln2);

        let mlp_grads = mlp1_backward(&c, &self.mlp, upstream);
        let dy = upstream.add(&layernorm_backward(&y, &self.ln2, &mlp_grads.dx).dx);
        let (da, _) = self.attn.backward_window(&a, &dy);
        dy.add(&layernorm_backward(x, &self.ln1, &da).dx)
    }
}

/// Applies `layers` refinement layers to every window of every frame.
/// Zero layers is the identity.
pub fn local_refinement(frames: &mut [FrameTokens], layers: &[RefineLayer]) {
    for layer in layers {
        for frame in frames.iter_mut() {
            for win in &mut frame.windows {
                *win = layer.forward_window(win);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aha::tokens::win_tok;
    use crate::numeric::finite_diff_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_tensor<R: Rng>(r: &mut R, shape: &[usize]) -> Tensor {
        Tensor::from_vec(
            shape,
            (0..shape.iter().product())
                .map(|_| r.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bias_indices_cover_the_offset_table() {
        let mut r = rng(1);
        let w = WindowAttention::new(&mut r, 8, 2, 3, 3);
        let idx = w.bias_indices();
        assert_eq!(idx.len(), 81);
        assert!(idx.iter().all(|&i| i < 25));
        // zero offset (query == key) maps to the table center
        assert_eq!(idx[0], 2 * 5 + 2);
        // all 25 offsets occur for a 3x3 window
        let mut seen = vec![false; 25];
        for &i in &idx {
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn identical_windows_get_identical_outputs() {
        let mut r = rng(2);
        let w = WindowAttention::new(&mut r, 8, 2, 2, 2);
        let x = random_tensor(&mut r, &[4, 8]);
        let a = w.forward_window(&x);
        let b = w.forward_window(&x);
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn window_attention_gradcheck_on_one_window() {
        let mut r = rng(3);
        let w = WindowAttention::new(&mut r, 8, 2, 2, 2);
        let x = random_tensor(&mut r, &[4, 8]);
        let ones = Tensor::filled(&[4, 8], 1.0);
        let (dx, dtable) = w.backward_window(&x, &ones);
        let err = finite_diff_check(|t| w.forward_window(t).sum(), &x, &dx, 1e-5);
        assert!(err < 1e-6, "input grad err {err}");

        // table gradient via the same oracle
        let f = |t: &Tensor| {
            let mut w2 = w.clone();
            w2.bias_table = t.clone();
            w2.forward_window(&x).sum()
        };
        let err = finite_diff_check(f, &w.bias_table, &dtable, 1e-5);
        assert!(err < 1e-6, "table grad err {err}");
    }

    #[test]
    fn frame_attention_single_summary_reduces_to_projection_chain() {
        let mut r = rng(4);
        let p = MhsaParams::fan_in_uniform(&mut r, 8, 2);
        let s = random_tensor(&mut r, &[1, 8]);
        let e: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let out = frame_attention(&s, &e, &p);
        let input = add_row_broadcast(&s, &e);
        let v = crate::numeric::linear_forward(&input, &p.value);
        let expect = crate::numeric::linear_forward(&v, &p.output);
        for (a, b) in out.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn different_embeddings_discriminate_equal_summaries() {
        let mut r = rng(5);
        let p = MhsaParams::fan_in_uniform(&mut r, 8, 2);
        let s = random_tensor(&mut r, &[3, 8]);
        let e1 = vec![0.0; 8];
        let e2: Vec<f64> = (0..8).map(|i| 0.2 * (i as f64 + 1.0)).collect();
        let a = frame_attention(&s, &e1, &p);
        let b = frame_attention(&s, &e2, &p);
        assert!(
            a.data().iter().zip(b.data()).any(|(x, y)| (x - y).abs() > 1e-9),
            "embedding must change the output"
        );
    }

    #[test]
    fn frame_attention_is_window_permutation_equivariant() {
        let mut r = rng(6);
        let p = MhsaParams::fan_in_uniform(&mut r, 8, 2);
        let s = random_tensor(&mut r, &[4, 8]);
        let e: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let out = frame_attention(&s, &e, &p);
        let perm = [2usize, 0, 3, 1];
        let mut sp = Tensor::zeros(&[4, 8]);
        for (dst, &src) in perm.iter().enumerate() {
            sp.row_mut(dst).copy_from_slice(s.row(src));
        }
        let outp = frame_attention(&sp, &e, &p);
        for (dst, &src) in perm.iter().enumerate() {
            assert_eq!(outp.row(dst), out.row(src));
        }
    }

    #[test]
    fn global_attention_on_one_frame_equals_plain_attention() {
        let mut r = rng(7);
        let p = MhsaParams::fan_in_uniform(&mut r, 8, 2);
        let s = random_tensor(&mut r, &[5, 8]);
        assert_eq!(
            global_attention(&s, &p).data(),
            mhsa_forward(&s, &p).data()
        );
    }

    #[test]
    fn zeroed_projections_make_the_block_an_identity() {
        let mut r = rng(8);
        let mut block = AhaBlock::new(&mut r, 8, 2, 2, 2);
        block.zero_output_projections();
        let feat = random_tensor(&mut r, &[8, 5, 6]);
        let (_, tokens) = win_tok(&feat, 2, 2);
        let mut frames = vec![tokens.clone(), tokens.clone()];
        let embeds = vec![vec![0.1; 8], vec![-0.2; 8]];
        block.forward(&mut frames, &embeds, true);
        for f in &frames {
            for (w, win) in f.windows.iter().enumerate() {
                assert_eq!(win.data(), tokens.windows[w].data(), "window {w} changed");
            }
        }
    }

    #[test]
    fn disabling_global_attention_changes_outputs_on_distinct_frames() {
        let mut r = rng(9);
        let block = AhaBlock::new(&mut r, 8, 2, 2, 2);
        let fa = win_tok(&random_tensor(&mut r, &[8, 4, 4]), 2, 2).1;
        let fb = win_tok(&random_tensor(&mut r, &[8, 4, 4]), 2, 2).1;
        let embeds = vec![vec![0.0; 8], vec![0.0; 8]];
        let mut with_global = vec![fa.clone(), fb.clone()];
        block.forward(&mut with_global, &embeds, true);
        let mut without = vec![fa, fb];
        block.forward(&mut without, &embeds, false);
        let differs = with_global[0]
            .windows
            .iter()
            .zip(&without[0].windows)
            .any(|(a, b)| a.data().iter().zip(b.data()).any(|(x, y)| (x - y).abs() > 1e-12));
        assert!(differs, "global level must mix cross-frame information");
    }

    #[test]
    fn block_preserves_shapes() {
        let mut r = rng(10);
        let block = AhaBlock::new(&mut r, 8, 2, 3, 3);
        let feat = random_tensor(&mut r, &[8, 7, 11]);
        let (layout, tokens) = win_tok(&feat, 3, 3);
        let mut frames = vec![tokens];
        block.forward(&mut frames, &[vec![0.0; 8]], true);
        assert_eq!(frames[0].windows.len(), layout.window_count());
        for w in &frames[0].windows {
            assert_eq!(w.shape(), &[9, 8]);
        }
    }

    #[test]
    fn refinement_with_no_layers_is_identity_and_zero_init_is_identity() {
        let mut r = rng(11);
        let feat = random_tensor(&mut r, &[8, 4, 4]);
        let (_, tokens) = win_tok(&feat, 2, 2);
        let mut frames = vec![tokens.clone()];
        local_refinement(&mut frames, &[]);
        assert_eq!(frames[0], tokens);

        let mut layers = vec![
            RefineLayer::new(&mut r, 8, 2, 2, 2),
            RefineLayer::new(&mut r, 8, 2, 2, 2),
            RefineLayer::new(&mut r, 8, 2, 2, 2),
        ];
        for l in &mut layers {
            l.zero_output_projections();
        }
        local_refinement(&mut frames, &layers);
        assert_eq!(frames[0], tokens);
    }

    #[test]
    fn refine_layer_gradcheck_on_a_2x2_window() {
        let mut r = rng(12);
        let layer = RefineLayer::new(&mut r, 8, 2, 2, 2);
        let x = random_tensor(&mut r, &[4, 8]);
        let ones = Tensor::filled(&[4, 8], 1.0);
        let dx = layer.backward_window(&x, &ones);
        let err = finite_diff_check(|t| layer.forward_window(t).sum(), &x, &dx, 1e-5);
        assert!(err < 1e-6, "refine grad err {err}");
    }
}
