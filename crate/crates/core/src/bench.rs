//! Wall-clock comparison of hierarchical versus full attention.
//!
//! These are the throughput (f32) paths, separate from the f64 verification
//! kernels in [`crate::numeric`]: plain sequential reductions, no bias, one
//! shared weight set for both attention styles. Timings are medians over
//! several runs after a warmup.

use crate::aha::complexity_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub frames: usize,
    /// Dense tokens per frame, `N`.
    pub tokens_per_frame: usize,
    /// Tokens per window, `P`.
    pub window: usize,
    pub channels: usize,
    pub heads: usize,
    /// Timed repetitions (median reported), not counting one warmup.
    pub runs: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            frames: 4,
            tokens_per_frame: 200,
            window: 49,
            channels: 128,
            heads: 4,
            runs: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub s: usize,
    pub n: usize,
    pub p: usize,
    pub predicted_ratio: f64,
    pub aha_ms: f64,
    pub full_ms: f64,
}

struct Weights {
    wq: Vec<f32>,
    wk: Vec<f32>,
    wv: Vec<f32>,
    wo: Vec<f32>,
    channels: usize,
    heads: usize,
}

impl Weights {
    fn random(rng: &mut ChaCha8Rng, channels: usize, heads: usize) -> Self {
        let bound = 1.0 / (channels as f32).sqrt();
        let mut mk = || -> Vec<f32> {
            (0..channels * channels)
                .map(|_| rng.random_range(-bound..bound))
                .collect()
        };
        Self {
            wq: mk(),
            wk: mk(),
            wv: mk(),
            wo: mk(),
            channels,
            heads,
        }
    }
}

/// `[rows, c]·[c, c]`, accumulating into a fresh buffer.
fn matmul(x: &[f32], w: &[f32], rows: usize, c: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; rows * c];
    for i in 0..rows {
        let xrow = &x[i * c..(i + 1) * c];
        let orow = &mut out[i * c..(i + 1) * c];
        for (k, &a) in xrow.iter().enumerate() {
            let wrow = &w[k * c..(k + 1) * c];
            for (o, &b) in orow.iter_mut().zip(wrow) {
                *o += a * b;
            }
        }
    }
    out
}

/// Plain multi-head attention over one `[len, C]` sequence.
fn mhsa(x: &[f32], w: &Weights, len: usize, scratch: &mut Vec<f32>) -> Vec<f32> {
    let c = w.channels;
    let dh = c / w.heads;
    let scale = 1.0 / (dh as f32).sqrt();
    let q = matmul(x, &w.wq, len, c);
    let k = matmul(x, &w.wk, len, c);
    let v = matmul(x, &w.wv, len, c);
    let mut concat = vec![0.0f32; len * c];
    scratch.clear();
    scratch.resize(len, 0.0);
    for head in 0..w.heads {
        let off = head * dh;
        for i in 0..len {
            let qi = &q[i * c + off..i * c + off + dh];
            let mut maxl = f32::NEG_INFINITY;
            for j in 0..len {
                let kj = &k[j * c + off..j * c + off + dh];
                let mut dot = 0.0f32;
                for (a, b) in qi.iter().zip(kj) {
                    dot += a * b;
                }
                let l = dot * scale;
                scratch[j] = l;
                maxl = maxl.max(l);
            }
            let mut denom = 0.0f32;
            for s in scratch.iter_mut() {
                *s = (*s - maxl).exp();
                denom += *s;
            }
            let inv = 1.0 / denom;
            let orow = &mut concat[i * c + off..i * c + off + dh];
            for (j, &e) in scratch.iter().enumerate() {
                let wgt = e * inv;
                let vrow = &v[j * c + off..j * c + off + dh];
                for (o, &vv) in orow.iter_mut().zip(vrow) {
                    *o += wgt * vv;
                }
            }
        }
    }
    matmul(&concat, &w.wo, len, c)
}

/// One full-attention pass over all `S·N` tokens.
fn full_attention_pass(tokens: &[f32], w: &Weights, total: usize) -> f32 {
    let mut scratch = Vec::new();
    let out = mhsa(tokens, w, total, &mut scratch);
    out[0]
}

/// One hierarchical pass: window attention on `S·M` windows of `P` tokens,
/// frame attention on each frame's `M` mean-pooled summaries, then global
/// attention over all `S·M` summaries.
fn aha_pass(tokens: &[f32], w: &Weights, s: usize, n: usize, p: usize) -> f32 {
    let c = w.channels;
    let m = n.div_ceil(p);
    let padded = m * p;
    let mut scratch = Vec::new();
    let mut sink = 0.0f32;

    // local window attention
    let mut window = vec![0.0f32; p * c];
    let mut summaries = vec![0.0f32; s * m * c];
    for frame in 0..s {
        for win in 0..m {
            window.iter_mut().for_each(|v| *v = 0.0);
            for cell in 0..p {
                let tok = win * p + cell;
                if tok < n {
                    let src = (frame * n + tok) * c;
                    window[cell * c..(cell + 1) * c].copy_from_slice(&tokens[src..src + c]);
                }
            }
            let out = mhsa(&window, w, p, &mut scratch);
            sink += out[0];
            // mean-pool the window into its summary
            let dst = (frame * m + win) * c;
            let inv = 1.0 / padded.min(n).max(1) as f32;
            for cell in 0..p {
                for ch in 0..c {
                    summaries[dst + ch] += out[cell * c + ch] * inv;
                }
            }
        }
    }
    // frame-level attention per frame
    for frame in 0..s {
        let out = mhsa(&summaries[frame * m * c..(frame + 1) * m * c], w, m, &mut scratch);
        sink += out[0];
    }
    // global attention over all summaries
    let out = mhsa(&summaries, w, s * m, &mut scratch);
    sink + out[0]
}

fn median_ms<F: FnMut() -> f32>(runs: usize, mut f: F) -> f64 {
    let mut sink = 0.0f32;
    sink += f(); // warmup
    let mut times: Vec<f64> = (0..runs.max(1))
        .map(|_| {
            let t0 = Instant::now();
            sink += f();
            t0.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    std::hint::black_box(sink);
    times[times.len() / 2]
}

/// Times both attention styles on shared random tokens/weights and returns
/// the measured medians alongside the closed-form cost ratio.
pub fn attention_bench(cfg: &BenchConfig) -> BenchRow {
    let (s, n, p) = (cfg.frames, cfg.tokens_per_frame, cfg.window);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = Weights::random(&mut rng, cfg.channels, cfg.heads);
    let tokens: Vec<f32> = (0..s * n * cfg.channels)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();

    let full_ms = median_ms(cfg.runs, || full_attention_pass(&tokens, &w, s * n));
    let aha_ms = median_ms(cfg.runs, || aha_pass(&tokens, &w, s, n, p));
    BenchRow {
        s,
        n,
        p,
        predicted_ratio: complexity_report(s, n, p).ratio,
        aha_ms,
        full_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_row_carries_the_closed_form_ratio() {
        let cfg = BenchConfig {
            frames: 2,
            tokens_per_frame: 32,
            window: 16,
            channels: 32,
            heads: 2,
            runs: 1,
            seed: 1,
        };
        let row = attention_bench(&cfg);
        assert!((row.predicted_ratio - (16.0 / 64.0 + 1.0 / 256.0)).abs() < 1e-12);
        assert!(row.aha_ms > 0.0 && row.full_ms > 0.0);
    }

    #[test]
    fn hierarchical_path_beats_full_attention_at_scale() {
        let cfg = BenchConfig {
            runs: 3,
            ..BenchConfig::default()
        };
        let row = attention_bench(&cfg);
        assert!(
            row.aha_ms < row.full_ms,
            "aha {} ms vs full {} ms",
            row.aha_ms,
            row.full_ms
        );
    }
}
