//! Convolutional stem (stages 1–2 plus the stage-3 entry downsample).
//! Forward-only; normalization is a per-channel affine with fixed unit
//! statistics so the stem is deterministic at inference.

use crate::numeric::{gelu, Tensor};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Conv2d {
    /// `[out, in, kh, kw]`
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn fan_in_uniform<R: Rng>(
        rng: &mut R,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let fan_in = in_ch * kernel * kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data = (0..out_ch * fan_in)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            weight: Tensor::from_vec(&[out_ch, in_ch, kernel, kernel], data).unwrap(),
            bias: Tensor::zeros(&[out_ch]),
            stride,
            pad,
        }
    }

    pub fn out_ch(&self) -> usize {
        self.weight.shape()[0]
    }

    /// Direct convolution of a `[Cin, H, W]` map.
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (cout, kcin, kh, kw) = (
            self.weight.shape()[0],
            self.weight.shape()[1],
            self.weight.shape()[2],
            self.weight.shape()[3],
        );
        assert_eq!(cin, kcin, "conv2d: channel mismatch");
        let oh = (h + 2 * self.pad - kh) / self.stride + 1;
        let ow = (w + 2 * self.pad - kw) / self.stride + 1;
        let mut out = Tensor::zeros(&[cout, oh, ow]);
        let xs = x.data();
        let ws = self.weight.data();
        for oc in 0..cout {
            let ob = oc * oh * ow;
            for ic in 0..cin {
                let wb = (oc * cin + ic) * kh * kw;
                let xb = ic * h * w;
                for oy in 0..oh {
                    let iy0 = oy * self.stride;
                    for ky in 0..kh {
                        let iy = iy0 + ky;
                        if iy < self.pad || iy >= h + self.pad {
                            continue;
                        }
                        let iy = iy - self.pad;
                        let xrow = xb + iy * w;
                        let wrow = wb + ky * kw;
                        let orow = ob + oy * ow;
                        for ox in 0..ow {
                            let ix0 = ox * self.stride;
                            let mut acc = 0.0;
                            for kx in 0..kw {
                                let ix = ix0 + kx;
                                if ix < self.pad || ix >= w + self.pad {
                                    continue;
                                }
                                acc += ws[wrow + kx] * xs[xrow + ix - self.pad];
                            }
                            out.data_mut()[orow + ox] += acc;
                        }
                    }
                }
            }
            let b = self.bias.data()[oc];
            for v in &mut out.data_mut()[ob..ob + oh * ow] {
                *v += b;
            }
        }
        out
    }
}

/// conv → per-channel affine → GELU.
#[derive(Debug, Clone)]
pub struct ConvBlock {
    pub conv: Conv2d,
    pub gamma: Tensor,
    pub beta: Tensor,
}

impl ConvBlock {
    pub fn new<R: Rng>(
        rng: &mut R,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        Self {
            conv: Conv2d::fan_in_uniform(rng, in_ch, out_ch, kernel, stride, pad),
            gamma: Tensor::filled(&[out_ch], 1.0),
            beta: Tensor::zeros(&[out_ch]),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let mut y = self.conv.forward(x);
        let (c, h, w) = (y.shape()[0], y.shape()[1], y.shape()[2]);
        for ch in 0..c {
            let g = self.gamma.data()[ch];
            let b = self.beta.data()[ch];
            for v in &mut y.data_mut()[ch * h * w..(ch + 1) * h * w] {
                *v = g * *v + b;
            }
        }
        gelu(&y)
    }
}

/// Stages 1–2 plus the stage-3 entry: /4 patchify, two blocks to /8 at 2·C₀,
/// two blocks to /16 at 4·C₀, strided entry to /32 at C.
#[derive(Debug, Clone)]
pub struct ConvStem {
    pub entry: ConvBlock,
    pub stage1: [ConvBlock; 2],
    pub stage2: [ConvBlock; 2],
    pub stage3_entry: ConvBlock,
}

pub const STEM_BASE_WIDTH: usize = 32;
/// Total downsampling factor from input pixels to stage-3 tokens.
pub const STEM_FACTOR: usize = 32;

impl ConvStem {
    pub fn new<R: Rng>(rng: &mut R, stage3_channels: usize) -> Self {
        let c0 = STEM_BASE_WIDTH;
        Self {
            entry: ConvBlock::new(rng, 3, c0, 4, 4, 0),
            stage1: [
                ConvBlock::new(rng, c0, 2 * c0, 3, 2, 1),
                ConvBlock::new(rng, 2 * c0, 2 * c0, 3, 1, 1),
            ],
            stage2: [
                ConvBlock::new(rng, 2 * c0, 4 * c0, 3, 2, 1),
                ConvBlock::new(rng, 4 * c0, 4 * c0, 3, 1, 1),
            ],
            stage3_entry: ConvBlock::new(rng, 4 * c0, stage3_channels, 3, 2, 1),
        }
    }

    /// `[3, H, W]` (H, W divisible by 32) → `[C, H/32, W/32]`.
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let mut f = self.entry.forward(x);
        for b in &self.stage1 {
            f = b.forward(&f);
        }
        for b in &self.stage2 {
            f = b.forward(&f);
        }
        self.stage3_entry.forward(&f)
    }
}

/// Zero-pads a `[C, H, W]` map on the right/bottom to the given size.
pub fn pad_map(x: &Tensor, to_h: usize, to_w: usize) -> Tensor {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    assert!(to_h >= h && to_w >= w);
    if to_h == h && to_w == w {
        return x.clone();
    }
    let mut out = Tensor::zeros(&[c, to_h, to_w]);
    for ch in 0..c {
        for row in 0..h {
            let src = ch * h * w + row * w;
            let dst = ch * to_h * to_w + row * to_w;
            out.data_mut()[dst..dst + w].copy_from_slice(&x.data()[src..src + w]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conv_shapes_follow_stride_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let conv = Conv2d::fan_in_uniform(&mut rng, 2, 5, 3, 2, 1);
        let x = Tensor::zeros(&[2, 16, 8]);
        let y = conv.forward(&x);
        assert_eq!(y.shape(), &[5, 8, 4]);
    }

    #[test]
    fn conv_matches_manual_cross_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut conv = Conv2d::fan_in_uniform(&mut rng, 1, 1, 3, 1, 1);
        // identity kernel: picks the center sample
        conv.weight = Tensor::from_vec(
            &[1, 1, 3, 3],
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        conv.bias = Tensor::from_vec(&[1], vec![0.25]).unwrap();
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv.forward(&x);
        assert_eq!(y.data(), &[1.25, 2.25, 3.25, 4.25]);
    }

    #[test]
    fn stem_produces_the_expected_token_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let stem = ConvStem::new(&mut rng, 64);
        let x = Tensor::zeros(&[3, 32, 64]);
        let f = stem.forward(&x);
        assert_eq!(f.shape(), &[64, 1, 2], "64x32 input gives a 2x1 grid");
    }

    #[test]
    fn stem_reference_resolution_gives_200_tokens() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let stem = ConvStem::new(&mut rng, 32);
        // 640x320 at test-size channels: 20x10 tokens.
        let x = Tensor::zeros(&[3, 320, 640]);
        let f = stem.forward(&x);
        assert_eq!(f.shape(), &[32, 10, 20]);
        assert_eq!(f.shape()[1] * f.shape()[2], 200);
    }

    #[test]
    fn zero_input_stays_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let stem = ConvStem::new(&mut rng, 32);
        let f = stem.forward(&Tensor::zeros(&[3, 32, 32]));
        assert!(f.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pad_map_extends_with_zeros() {
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = pad_map(&x, 3, 4);
        assert_eq!(p.shape(), &[1, 3, 4]);
        assert_eq!(p.data()[0..4], [1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.data()[8..12], [0.0; 4]);
    }
}
