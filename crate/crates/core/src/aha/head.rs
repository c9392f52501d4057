//! Depth/confidence head: per-token 1×1 projection to two maps, bilinear
//! upsampling to input resolution, softplus for depth (strictly positive)
//! and a logistic for confidence (in (0, 1)).

use crate::geometry::Raster;
use crate::numeric::{Linear, Tensor};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct DepthHead {
    /// `C → 2` (depth logit, confidence logit).
    pub proj: Linear,
}

fn softplus(x: f64) -> f64 {
    // overflow-safe: softplus(x) = max(x, 0) + ln(1 + exp(−|x|))
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl DepthHead {
    pub fn new<R: Rng>(rng: &mut R, channels: usize) -> Self {
        Self {
            proj: Linear::fan_in_uniform(rng, channels, 2),
        }
    }

    /// `[C, h, w]` features → (`depth`, `confidence`) maps of `out_w × out_h`
    /// pixels (row-major), bilinearly upsampled by `factor` and cropped.
    pub fn forward(
        &self,
        feat: &Tensor,
        factor: usize,
        out_w: usize,
        out_h: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
        assert!(out_h <= h * factor && out_w <= w * factor, "crop too large");
        // project tokens to 2 channels
        let mut logits = Raster::zeros(w, h, 2);
        for row in 0..h {
            for col in 0..w {
                for out_ch in 0..2 {
                    let mut acc = self.proj.bias.data()[out_ch];
                    for ch in 0..c {
                        acc += feat.data()[ch * h * w + row * w + col]
                            * self.proj.weight.at2(ch, out_ch);
                    }
                    *logits.at_mut(col, row, out_ch) = acc;
                }
            }
        }
        // upsample, crop, squash
        let mut depth = vec![0.0; out_w * out_h];
        let mut conf = vec![0.0; out_w * out_h];
        let inv = 1.0 / factor as f64;
        for row in 0..out_h {
            let y = (row as f64 + 0.5) * inv;
            for col in 0..out_w {
                let x = (col as f64 + 0.5) * inv;
                let i = row * out_w + col;
                // softplus/logistic underflow to exactly 0 for very negative
                // logits; clamp into the open range the contract promises.
                depth[i] = softplus(logits.sample_clamped(x, y, 0)).max(f64::MIN_POSITIVE);
                conf[i] = logistic(logits.sample_clamped(x, y, 1))
                    .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            }
        }
        (depth, conf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn outputs_are_positive_depth_and_unit_interval_confidence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let head = DepthHead::new(&mut rng, 8);
        let feat = Tensor::from_vec(
            &[8, 2, 4],
            (0..64).map(|i| ((i * 37) % 13) as f64 - 6.0).collect(),
        )
        .unwrap();
        let (depth, conf) = head.forward(&feat, 32, 128, 64);
        assert_eq!(depth.len(), 128 * 64);
        assert!(depth.iter().all(|&d| d > 0.0));
        assert!(conf.iter().all(|&c| c > 0.0 && c < 1.0));
    }

    #[test]
    fn output_size_matches_requested_crop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let head = DepthHead::new(&mut rng, 4);
        let feat = Tensor::zeros(&[4, 1, 2]);
        let (depth, _) = head.forward(&feat, 32, 64, 32);
        assert_eq!(depth.len(), 64 * 32);
        let (depth, _) = head.forward(&feat, 32, 50, 20);
        assert_eq!(depth.len(), 50 * 20);
    }

    #[test]
    fn softplus_and_logistic_are_safe_at_extremes() {
        assert!(softplus(-1000.0) >= 0.0);
        assert!(softplus(1000.0).is_finite());
        assert!(logistic(-1000.0) >= 0.0 && logistic(1000.0) <= 1.0);
    }
}
