//! Latitude-weighted depth losses with analytic gradients.
//!
//! ERP rows are weighted by `w(v) = cos φ(v)`, `φ(v) = π((v+0.5)/H − 1/2)`,
//! so every pixel contributes in proportion to its solid angle and the pole
//! rows cannot dominate. The data term is a weighted Huber on the residual;
//! the gradient term matches forward-difference depth gradients across a
//! pyramid of stride-2^r decimations. Sums are unnormalized as written; the
//! multi-frame objective averages per-frame losses.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("scale count {scales} too deep: decimated height {height} < 2")]
    TooManyScales { scales: usize, height: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Per-row solid-angle weights for an ERP image of height `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatitudeWeights {
    weights: Vec<f64>,
}

pub fn latitude_weights(height: usize) -> LatitudeWeights {
    assert!(height >= 1);
    let weights = (0..height)
        .map(|v| {
            let phi = std::f64::consts::PI * ((v as f64 + 0.5) / height as f64 - 0.5);
            phi.cos()
        })
        .collect();
    LatitudeWeights { weights }
}

impl LatitudeWeights {
    pub fn at(&self, row: usize) -> f64 {
        self.weights[row]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }
}

#[inline]
fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

#[inline]
fn huber_grad(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        r
    } else {
        delta * r.signum()
    }
}

/// One frame's supervision inputs on a `width × height` ERP grid.
#[derive(Debug, Clone, Copy)]
pub struct FrameMaps<'a> {
    pub width: usize,
    pub height: usize,
    pub pred: &'a [f64],
    pub gt: &'a [f64],
    pub mask: &'a [bool],
    /// Per-pixel confidence weights; `None` means all ones.
    pub conf: Option<&'a [f64]>,
}

impl FrameMaps<'_> {
    fn check(&self) -> Result<(), LossError> {
        let n = self.width * self.height;
        if self.pred.len() != n || self.gt.len() != n || self.mask.len() != n {
            return Err(LossError::ShapeMismatch(format!(
                "maps must have {n} pixels ({}x{})",
                self.width, self.height
            )));
        }
        if let Some(c) = self.conf {
            if c.len() != n {
                return Err(LossError::ShapeMismatch("confidence length".into()));
            }
        }
        Ok(())
    }

    #[inline]
    fn conf_at(&self, i: usize) -> f64 {
        self.conf.map_or(1.0, |c| c[i])
    }
}

/// Weighted Huber data term `Σ w(v)·M·C·ρ(pred − gt)` and its gradient
/// w.r.t. `pred`.
pub fn data_term(maps: &FrameMaps, delta: f64) -> Result<(f64, Vec<f64>), LossError> {
    maps.check()?;
    let weights = latitude_weights(maps.height);
    let mut loss = 0.0;
    let mut grad = vec![0.0; maps.pred.len()];
    for row in 0..maps.height {
        let w = weights.at(row);
        for col in 0..maps.width {
            let i = row * maps.width + col;
            if !maps.mask[i] {
                continue;
            }
            let scale = w * maps.conf_at(i);
            let r = maps.pred[i] - maps.gt[i];
            loss += scale * huber(r, delta);
            grad[i] = scale * huber_grad(r, delta);
        }
    }
    Ok((loss, grad))
}

/// Multi-scale forward-difference gradient term, averaged over `scales`
/// stride-2^r decimations, and its gradient w.r.t. `pred`.
///
/// A difference contributes only when both of its endpoints are masked, and
/// its confidence weight is the product of the endpoint confidences, so the
/// loss vanishes iff predicted and target gradients agree on the supervised
/// support.
pub fn grad_term(
    maps: &FrameMaps,
    scales: usize,
    delta: f64,
) -> Result<(f64, Vec<f64>), LossError> {
    maps.check()?;
    assert!(scales >= 1, "grad_term needs at least one scale");
    // Scale 0 always exists on the given grid (a 1-row image still has
    // u-differences); deeper scales must keep at least 2 rows.
    let deepest = maps.height.div_ceil(1 << (scales - 1));
    if scales > 1 && deepest < 2 {
        return Err(LossError::TooManyScales {
            scales,
            height: deepest,
        });
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; maps.pred.len()];
    let inv_r = 1.0 / scales as f64;

    for r in 0..scales {
        let stride = 1usize << r;
        let hr = maps.height.div_ceil(stride);
        let wr = maps.width.div_ceil(stride);
        let weights = latitude_weights(hr);
        let full = |i: usize, j: usize| (i * stride) * maps.width + j * stride;

        for i in 0..hr {
            let w = weights.at(i);
            for j in 0..wr {
                let a = full(i, j);
                if !maps.mask[a] {
                    continue;
                }
                for (bi, bj, ok) in [(i, j + 1, j + 1 < wr), (i + 1, j, i + 1 < hr)] {
                    if !ok {
                        continue;
                    }
                    let b = full(bi, bj);
                    if !maps.mask[b] {
                        continue;
                    }
                    let scale = w * maps.conf_at(a) * maps.conf_at(b) * inv_r;
                    let res = (maps.pred[b] - maps.pred[a]) - (maps.gt[b] - maps.gt[a]);
                    loss += scale * huber(res, delta);
                    let g = scale * huber_grad(res, delta);
                    grad[b] += g;
                    grad[a] -= g;
                }
            }
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub huber_delta: f64,
    pub lambda_grad: f64,
    pub scales: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            huber_delta: 1.0,
            lambda_grad: 0.5,
            scales: 3,
        }
    }
}

/// Multi-frame objective `(1/S)·Σ_s (data_s + λ·grad_s)`; returns the scalar
/// loss and per-frame gradients w.r.t. each frame's prediction.
pub fn depth_loss(
    frames: &[FrameMaps],
    cfg: &LossConfig,
) -> Result<(f64, Vec<Vec<f64>>), LossError> {
    assert!(!frames.is_empty(), "depth_loss needs at least one frame");
    let inv_s = 1.0 / frames.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(frames.len());
    for maps in frames {
        let (ld, mut gd) = data_term(maps, cfg.huber_delta)?;
        let (lg, gg) = grad_term(maps, cfg.scales, cfg.huber_delta)?;
        total += inv_s * (ld + cfg.lambda_grad * lg);
        for (d, g) in gd.iter_mut().zip(&gg) {
            *d = inv_s * (*d + cfg.lambda_grad * g);
        }
        grads.push(gd);
    }
    Ok((total, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equator_row_weight_is_one() {
        let w = latitude_weights(5);
        assert_abs_diff_eq!(w.at(2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn top_row_weight_matches_closed_form_h4() {
        let w = latitude_weights(4);
        // φ = π(0.125 − 0.5) = −0.375π
        assert_abs_diff_eq!(w.at(0), (0.375 * std::f64::consts::PI).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.at(0), 0.3826834323650898, epsilon = 1e-12);
    }

    #[test]
    fn weights_are_symmetric_and_bounded() {
        for h in [4, 5, 80, 320] {
            let w = latitude_weights(h);
            for v in 0..h {
                assert!(w.at(v) > 0.0 && w.at(v) <= 1.0);
                assert_abs_diff_eq!(w.at(v), w.at(h - 1 - v), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn mean_weight_converges_to_two_over_pi() {
        let target = 2.0 / std::f64::consts::PI;
        let mut last = f64::INFINITY;
        for h in [80, 160, 320] {
            let err = (latitude_weights(h).mean() - target).abs();
            assert!(err < last, "error must decrease with H");
            last = err;
        }
        assert!((latitude_weights(320).mean() - target).abs() < 1e-3);
    }

    fn frame<'a>(
        w: usize,
        h: usize,
        pred: &'a [f64],
        gt: &'a [f64],
        mask: &'a [bool],
    ) -> FrameMaps<'a> {
        FrameMaps {
            width: w,
            height: h,
            pred,
            gt,
            mask,
            conf: None,
        }
    }

    #[test]
    fn data_term_is_zero_at_the_target() {
        let pred = vec![2.0; 8];
        let mask = vec![true; 8];
        let (l, g) = data_term(&frame(4, 2, &pred, &pred, &mask), 1.0).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn data_term_huber_branches() {
        // Single pixel on a height-1 grid: w = cos(0) = 1.
        let gt = vec![1.0];
        let mask = vec![true];
        let pred = vec![1.5];
        let (l, _) = data_term(&frame(1, 1, &pred, &gt, &mask), 1.0).unwrap();
        assert_abs_diff_eq!(l, 0.125, epsilon = 1e-15);
        let pred = vec![3.0];
        let (l, _) = data_term(&frame(1, 1, &pred, &gt, &mask), 1.0).unwrap();
        assert_abs_diff_eq!(l, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn grad_term_ignores_constant_offsets() {
        let gt: Vec<f64> = (0..16).map(|i| 1.0 + 0.1 * i as f64).collect();
        let pred: Vec<f64> = gt.iter().map(|v| v + 5.0).collect();
        let mask = vec![true; 16];
        let (l, g) = grad_term(&frame(8, 2, &pred, &gt, &mask), 1, 1.0).unwrap();
        assert_abs_diff_eq!(l, 0.0, epsilon = 1e-12);
        assert!(g.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn grad_term_single_difference_closed_form() {
        // 1x2 image, height 1 so w = 1; pred gradient 1, gt gradient 0.
        let pred = vec![0.0, 1.0];
        let gt = vec![0.0, 0.0];
        let mask = vec![true, true];
        let (l, _) = grad_term(&frame(2, 1, &pred, &gt, &mask), 1, 1.0).unwrap();
        assert_abs_diff_eq!(l, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn scale_count_prefactor_halves_contributions() {
        // Column ramp on 4x4: decimation by 2 keeps columns {0,2}, rows {0,2}.
        let pred: Vec<f64> = (0..16).map(|i| (i % 4) as f64 * 0.1).collect();
        let gt = vec![0.0; 16];
        let mask = vec![true; 16];
        let (l1, _) = grad_term(&frame(4, 4, &pred, &gt, &mask), 1, 1.0).unwrap();
        let (l2, _) = grad_term(&frame(4, 4, &pred, &gt, &mask), 2, 1.0).unwrap();
        // Coarse scale: 2x2 grid with one u-difference of 0.2 per row and
        // zero v-differences; row weights from height 2.
        let w2 = latitude_weights(2);
        let coarse = 0.5 * 0.2f64 * 0.2 * (w2.at(0) + w2.at(1));
        assert_abs_diff_eq!(l2, (l1 + coarse) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grad_term_rejects_too_deep_pyramids() {
        let pred = vec![0.0; 8];
        let mask = vec![true; 8];
        assert!(matches!(
            grad_term(&frame(4, 2, &pred, &pred, &mask), 2, 1.0),
            Err(LossError::TooManyScales { .. })
        ));
    }

    #[test]
    fn depth_loss_reduces_to_mean_of_data_terms_without_lambda() {
        let pred1 = vec![1.5; 8];
        let pred2 = vec![2.5; 8];
        let gt = vec![1.0; 8];
        let mask = vec![true; 8];
        let f1 = frame(4, 2, &pred1, &gt, &mask);
        let f2 = frame(4, 2, &pred2, &gt, &mask);
        let cfg = LossConfig {
            lambda_grad: 0.0,
            scales: 1,
            huber_delta: 1.0,
        };
        let (l, _) = depth_loss(&[f1, f2], &cfg).unwrap();
        let (d1, _) = data_term(&f1, 1.0).unwrap();
        let (d2, _) = data_term(&f2, 1.0).unwrap();
        assert_abs_diff_eq!(l, (d1 + d2) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_frame_objective_is_data_plus_lambda_grad() {
        let pred: Vec<f64> = (0..8).map(|i| 1.0 + 0.3 * (i as f64).sin()).collect();
        let gt = vec![1.0; 8];
        let mask = vec![true; 8];
        let f = frame(4, 2, &pred, &gt, &mask);
        let cfg = LossConfig {
            lambda_grad: 0.7,
            scales: 1,
            huber_delta: 1.0,
        };
        let (l, _) = depth_loss(&[f], &cfg).unwrap();
        let (d, _) = data_term(&f, 1.0).unwrap();
        let (g, _) = grad_term(&f, 1, 1.0).unwrap();
        assert_abs_diff_eq!(l, d + 0.7 * g, epsilon = 1e-12);
    }

    #[test]
    fn loss_is_positive_unless_pred_matches_on_support() {
        let cfg = LossConfig {
            scales: 1,
            ..LossConfig::default()
        };
        let gt = vec![1.0; 8];
        let mask = vec![true, true, true, true, false, false, false, false];
        // differs only off-support
        let pred = vec![1.0, 1.0, 1.0, 1.0, 9.0, 9.0, 9.0, 9.0];
        let f = frame(4, 2, &pred, &gt, &mask);
        let (l, _) = depth_loss(&[f], &cfg).unwrap();
        assert_eq!(l, 0.0);
        // differs on support
        let pred = vec![1.0, 1.2, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let f = frame(4, 2, &pred, &gt, &mask);
        let (l, _) = depth_loss(&[f], &cfg).unwrap();
        assert!(l > 0.0);
    }
}
