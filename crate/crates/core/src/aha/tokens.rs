//! Window tokenization of stage-3 feature maps.
//!
//! A `[C, h, w]` frame is padded to `H' = ⌈h/P_h⌉·P_h`, `W' = ⌈w/P_w⌉·P_w`
//! and partitioned into `M = (H'/P_h)·(W'/P_w)` non-overlapping windows,
//! row-major over the window grid; cells inside a window are row-major too.
//! Pad cells carry zeros and are excluded from summary means.

use crate::numeric::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenLayout {
    /// Unpadded token grid.
    pub height: usize,
    pub width: usize,
    /// Padded extents `H'`, `W'`.
    pub padded_h: usize,
    pub padded_w: usize,
    /// Window extents.
    pub win_h: usize,
    pub win_w: usize,
    /// Window grid `N_h × N_w`.
    pub grid_h: usize,
    pub grid_w: usize,
}

impl TokenLayout {
    pub fn new(height: usize, width: usize, win_h: usize, win_w: usize) -> Self {
        let grid_h = height.div_ceil(win_h);
        let grid_w = width.div_ceil(win_w);
        Self {
            height,
            width,
            padded_h: grid_h * win_h,
            padded_w: grid_w * win_w,
            win_h,
            win_w,
            grid_h,
            grid_w,
        }
    }

    /// Windows per frame, `M`.
    pub fn window_count(&self) -> usize {
        self.grid_h * self.grid_w
    }

    /// Cells per window, `P = P_h·P_w`.
    pub fn cells(&self) -> usize {
        self.win_h * self.win_w
    }

    /// Token-grid coordinates of cell `p` of window `m` (may be in padding).
    pub fn cell_position(&self, m: usize, p: usize) -> (usize, usize) {
        let wy = m / self.grid_w;
        let wx = m % self.grid_w;
        let cy = p / self.win_w;
        let cx = p % self.win_w;
        (wy * self.win_h + cy, wx * self.win_w + cx)
    }
}

/// One frame's windowed tokens: `M` windows of `[P, C]`, plus per-cell
/// validity (false inside padding).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTokens {
    pub windows: Vec<Tensor>,
    pub valid: Vec<Vec<bool>>,
}

/// Partitions a `[C, h, w]` feature map into windowed local tokens.
pub fn win_tok(feat: &Tensor, win_h: usize, win_w: usize) -> (TokenLayout, FrameTokens) {
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let layout = TokenLayout::new(h, w, win_h, win_w);
    let cells = layout.cells();
    let mut windows = Vec::with_capacity(layout.window_count());
    let mut valid = Vec::with_capacity(layout.window_count());
    for m in 0..layout.window_count() {
        let mut t = Tensor::zeros(&[cells, c]);
        let mut v = vec![false; cells];
        for p in 0..cells {
            let (ty, tx) = layout.cell_position(m, p);
            if ty < h && tx < w {
                v[p] = true;
                for ch in 0..c {
                    *t.at2_mut(p, ch) = feat.data()[ch * h * w + ty * w + tx];
                }
            }
        }
        windows.push(t);
        valid.push(v);
    }
    (layout, FrameTokens { windows, valid })
}

/// Exact inverse of [`win_tok`] on the unpadded region.
pub fn untok(layout: &TokenLayout, tokens: &FrameTokens, channels: usize) -> Tensor {
    let (h, w) = (layout.height, layout.width);
    let mut feat = Tensor::zeros(&[channels, h, w]);
    for (m, win) in tokens.windows.iter().enumerate() {
        for p in 0..layout.cells() {
            let (ty, tx) = layout.cell_position(m, p);
            if ty < h && tx < w {
                for ch in 0..channels {
                    feat.data_mut()[ch * h * w + ty * w + tx] = win.at2(p, ch);
                }
            }
        }
    }
    feat
}

/// Plain mean over the window dimension: `S_loc[m] = (1/P)·Σ_p L[m, p, :]`.
pub fn frame_tok(window: &Tensor) -> Vec<f64> {
    let (p, c) = (window.rows(), window.cols());
    let mut out = vec![0.0; c];
    for row in 0..p {
        for (o, v) in out.iter_mut().zip(window.row(row)) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= p as f64;
    }
    out
}

/// Mean over valid (non-pad) cells only; equals [`frame_tok`] on fully valid
/// windows.
pub fn frame_tok_masked(window: &Tensor, valid: &[bool]) -> Vec<f64> {
    let (p, c) = (window.rows(), window.cols());
    assert_eq!(valid.len(), p);
    let count = valid.iter().filter(|&&v| v).count().max(1);
    let mut out = vec![0.0; c];
    for row in 0..p {
        if !valid[row] {
            continue;
        }
        for (o, v) in out.iter_mut().zip(window.row(row)) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= count as f64;
    }
    out
}
