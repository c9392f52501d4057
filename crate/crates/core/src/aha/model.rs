//! The assembled network: stem, stage-3 blocks, stage-4 refinement, head,
//! and the named-tensor weight checkpoint.

use super::layers::{local_refinement, AhaBlock, RefineLayer};
use super::stem::{pad_map, ConvStem, STEM_FACTOR};
use super::tokens::{untok, win_tok, FrameTokens, TokenLayout};
use super::{AhaConfig, AhaError, DepthHead};
use crate::geometry::Raster;
use crate::numeric::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

/// Per-frame network outputs at input resolution.
#[derive(Debug, Clone)]
pub struct NetOutput {
    pub width: usize,
    pub height: usize,
    /// `frames × (width·height)` depth in meters, strictly positive.
    pub depth: Vec<Vec<f64>>,
    /// Same layout, confidence in (0, 1).
    pub confidence: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct AhaModel {
    pub config: AhaConfig,
    pub stem: ConvStem,
    pub blocks: Vec<AhaBlock>,
    pub refine: Vec<RefineLayer>,
    pub head: DepthHead,
    /// `[S, C]`, zero-initialized.
    pub frame_embed: Tensor,
}

impl AhaModel {
    /// Builds the model with weights drawn from the config seed: linear and
    /// conv weights fan-in uniform, biases / bias tables / frame embeddings
    /// zero.
    pub fn new(config: AhaConfig) -> Result<Self, AhaError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let c = config.channels;
        let stem = ConvStem::new(&mut rng, c);
        let blocks = (0..config.blocks)
            .map(|_| AhaBlock::new(&mut rng, c, config.heads, config.win_h(), config.win_w()))
            .collect();
        let refine = (0..config.refine_layers)
            .map(|_| RefineLayer::new(&mut rng, c, config.heads, config.win_h(), config.win_w()))
            .collect();
        let head = DepthHead::new(&mut rng, c);
        let frame_embed = Tensor::zeros(&[config.frames, c]);
        Ok(Self {
            config,
            stem,
            blocks,
            refine,
            head,
            frame_embed,
        })
    }

    /// Zeroes every attention/MLP output projection in stages 3–4; the
    /// attention stages then act as the identity on features.
    pub fn zero_output_projections(&mut self) {
        for b in &mut self.blocks {
            b.zero_output_projections();
        }
        for r in &mut self.refine {
            r.zero_output_projections();
        }
    }

    fn check_inputs(&self, images: &[Raster]) -> Result<(), AhaError> {
        if images.len() != self.config.frames {
            return Err(AhaError::FrameCount {
                expected: self.config.frames,
                got: images.len(),
            });
        }
        for (i, img) in images.iter().enumerate() {
            if img.width != self.config.input_width() || img.height != self.config.input_height() {
                return Err(AhaError::BadFrameSize {
                    frame: i,
                    got_w: img.width,
                    got_h: img.height,
                    want_w: self.config.input_width(),
                    want_h: self.config.input_height(),
                });
            }
        }
        Ok(())
    }

    fn image_to_tensor(img: &Raster) -> Tensor {
        let (w, h) = (img.width, img.height);
        let mut t = Tensor::zeros(&[3, h, w]);
        for row in 0..h {
            for col in 0..w {
                for ch in 0..3 {
                    let v = if img.channels == 1 {
                        img.at(col, row, 0)
                    } else {
                        img.at(col, row, ch)
                    };
                    t.data_mut()[ch * h * w + row * w + col] = v;
                }
            }
        }
        t
    }

    /// Stages 1–2 (+ stage-3 entry): per-frame feature maps at 1/32
    /// resolution of the padded input.
    pub fn stem_features(&self, images: &[Raster]) -> Result<Vec<Tensor>, AhaError> {
        self.check_inputs(images)?;
        let w = self.config.input_width();
        let h = self.config.input_height();
        let pad_w = w.div_ceil(STEM_FACTOR) * STEM_FACTOR;
        let pad_h = h.div_ceil(STEM_FACTOR) * STEM_FACTOR;
        Ok(images
            .iter()
            .map(|img| {
                let t = Self::image_to_tensor(img);
                self.stem.forward(&pad_map(&t, pad_h, pad_w))
            })
            .collect())
    }

    /// Stages 3–4 on per-frame stage-3 features. `use_global` toggles the
    /// cross-frame attention level.
    pub fn attention_stages(
        &self,
        features: &[Tensor],
        use_global: bool,
    ) -> (TokenLayout, Vec<Tensor>) {
        let c = self.config.channels;
        let mut layout = None;
        let mut frames: Vec<FrameTokens> = features
            .iter()
            .map(|f| {
                let (l, t) = win_tok(f, self.config.win_h(), self.config.win_w());
                layout = Some(l);
                t
            })
            .collect();
        let layout = layout.expect("at least one frame");
        let embeds: Vec<Vec<f64>> = (0..features.len())
            .map(|s| self.frame_embed.row(s).to_vec())
            .collect();
        for block in &self.blocks {
            block.forward(&mut frames, &embeds, use_global);
        }
        local_refinement(&mut frames, &self.refine);
        let out = frames.iter().map(|f| untok(&layout, f, c)).collect();
        (layout, out)
    }

    pub fn forward(&self, images: &[Raster]) -> Result<NetOutput, AhaError> {
        self.forward_with_options(images, true)
    }

    pub fn forward_with_options(
        &self,
        images: &[Raster],
        use_global: bool,
    ) -> Result<NetOutput, AhaError> {
        let features = self.stem_features(images)?;
        let (_, refined) = self.attention_stages(&features, use_global);
        let (w, h) = (self.config.input_width(), self.config.input_height());
        let mut depth = Vec::with_capacity(refined.len());
        let mut confidence = Vec::with_capacity(refined.len());
        for feat in &refined {
            let (d, c) = self.head.forward(feat, STEM_FACTOR, w, h);
            depth.push(d);
            confidence.push(c);
        }
        Ok(NetOutput {
            width: w,
            height: h,
            depth,
            confidence,
        })
    }

    /// All learnable tensors with stable names, for checkpointing.
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        macro_rules! push {
            ($name:expr, $t:expr) => {
                out.push(($name, $t));
            };
        }
        macro_rules! push_cb {
            ($prefix:expr, $cb:expr) => {
                push!(format!("{}.weight", $prefix), &$cb.conv.weight);
                push!(format!("{}.bias", $prefix), &$cb.conv.bias);
                push!(format!("{}.gamma", $prefix), &$cb.gamma);
                push!(format!("{}.beta", $prefix), &$cb.beta);
            };
        }
        macro_rules! push_linear {
            ($prefix:expr, $l:expr) => {
                push!(format!("{}.weight", $prefix), &$l.weight);
                push!(format!("{}.bias", $prefix), &$l.bias);
            };
        }
        macro_rules! push_mhsa {
            ($prefix:expr, $m:expr) => {
                push_linear!(format!("{}.q", $prefix), $m.query);
                push_linear!(format!("{}.k", $prefix), $m.key);
                push_linear!(format!("{}.v", $prefix), $m.value);
                push_linear!(format!("{}.o", $prefix), $m.output);
            };
        }
        macro_rules! push_ln {
            ($prefix:expr, $ln:expr) => {
                push!(format!("{}.gamma", $prefix), &$ln.gamma);
                push!(format!("{}.beta", $prefix), &$ln.beta);
            };
        }
        push_cb!("stem.entry", self.stem.entry);
        for (i, b) in self.stem.stage1.iter().enumerate() {
            push_cb!(format!("stem.stage1.{i}"), *b);
        }
        for (i, b) in self.stem.stage2.iter().enumerate() {
            push_cb!(format!("stem.stage2.{i}"), *b);
        }
        push_cb!("stem.stage3_entry", self.stem.stage3_entry);
        for (i, b) in self.blocks.iter().enumerate() {
            let p = format!("blocks.{i}");
            push_ln!(format!("{p}.ln_win"), b.ln_win);
            push_mhsa!(format!("{p}.win_attn"), b.win_attn.attn);
            push!(format!("{p}.win_attn.bias_table"), &b.win_attn.bias_table);
            push_ln!(format!("{p}.ln_frame"), b.ln_frame);
            push_mhsa!(format!("{p}.frame_attn"), b.frame_attn);
            push_ln!(format!("{p}.ln_global"), b.ln_global);
            push_mhsa!(format!("{p}.global_attn"), b.global_attn);
            push_ln!(format!("{p}.ln_blend"), b.ln_blend);
            push_linear!(format!("{p}.blend.fc1"), b.blend.fc1);
            push_linear!(format!("{p}.blend.fc2"), b.blend.fc2);
        }
        for (i, r) in self.refine.iter().enumerate() {
            let p = format!("refine.{i}");
            push_ln!(format!("{p}.ln1"), r.ln1);
            push_mhsa!(format!("{p}.attn"), r.attn.attn);
            push!(format!("{p}.attn.bias_table"), &r.attn.bias_table);
            push_ln!(format!("{p}.ln2"), r.ln2);
            push_linear!(format!("{p}.mlp.fc1"), r.mlp.fc1);
            push_linear!(format!("{p}.mlp.fc2"), r.mlp.fc2);
        }
        push_linear!("head.proj", self.head.proj);
        push!("frame_embed".to_string(), &self.frame_embed);
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        // Mirror of named_tensors; kept in sync by the checkpoint roundtrip
        // test.
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        macro_rules! push {
            ($name:expr, $t:expr) => {
                out.push(($name, $t));
            };
        }
        macro_rules! push_cb {
            ($prefix:expr, $cb:expr) => {
                push!(format!("{}.weight", $prefix), &mut $cb.conv.weight);
                push!(format!("{}.bias", $prefix), &mut $cb.conv.bias);
                push!(format!("{}.gamma", $prefix), &mut $cb.gamma);
                push!(format!("{}.beta", $prefix), &mut $cb.beta);
            };
        }
        macro_rules! push_linear {
            ($prefix:expr, $l:expr) => {
                push!(format!("{}.weight", $prefix), &mut $l.weight);
                push!(format!("{}.bias", $prefix), &mut $l.bias);
            };
        }
        macro_rules! push_mhsa {
            ($prefix:expr, $m:expr) => {
                push_linear!(format!("{}.q", $prefix), $m.query);
                push_linear!(format!("{}.k", $prefix), $m.key);
                push_linear!(format!("{}.v", $prefix), $m.value);
                push_linear!(format!("{}.o", $prefix), $m.output);
            };
        }
        macro_rules! push_ln {
            ($prefix:expr, $ln:expr) => {
                push!(format!("{}.gamma", $prefix), &mut $ln.gamma);
                push!(format!("{}.beta", $prefix), &mut $ln.beta);
            };
        }
        push_cb!("stem.entry", self.stem.entry);
        for (i, b) in self.stem.stage1.iter_mut().enumerate() {
            push_cb!(format!("stem.stage1.{i}"), *b);
        }
        for (i, b) in self.stem.stage2.iter_mut().enumerate() {
            push_cb!(format!("stem.stage2.{i}"), *b);
        }
        push_cb!("stem.stage3_entry", self.stem.stage3_entry);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let p = format!("blocks.{i}");
            push_ln!(format!("{p}.ln_win"), b.ln_win);
            push_mhsa!(format!("{p}.win_attn"), b.win_attn.attn);
            push!(format!("{p}.win_attn.bias_table"), &mut b.win_attn.bias_table);
            push_ln!(format!("{p}.ln_frame"), b.ln_frame);
            push_mhsa!(format!("{p}.frame_attn"), b.frame_attn);
            push_ln!(format!("{p}.ln_global"), b.ln_global);
            push_mhsa!(format!("{p}.global_attn"), b.global_attn);
            push_ln!(format!("{p}.ln_blend"), b.ln_blend);
            push_linear!(format!("{p}.blend.fc1"), b.blend.fc1);
            push_linear!(format!("{p}.blend.fc2"), b.blend.fc2);
        }
        for (i, r) in self.refine.iter_mut().enumerate() {
            let p = format!("refine.{i}");
            push_ln!(format!("{p}.ln1"), r.ln1);
            push_mhsa!(format!("{p}.attn"), r.attn.attn);
            push!(format!("{p}.attn.bias_table"), &mut r.attn.bias_table);
            push_ln!(format!("{p}.ln2"), r.ln2);
            push_linear!(format!("{p}.mlp.fc1"), r.mlp.fc1);
            push_linear!(format!("{p}.mlp.fc2"), r.mlp.fc2);
        }
        push_linear!("head.proj", self.head.proj);
        push!("frame_embed".to_string(), &mut self.frame_embed);
        out
    }

    /// Named-tensor checkpoint: magic, tensor count, then per tensor the
    /// name, shape, and f32 payload (little-endian).
    pub fn save_weights(&self, path: &Path) -> Result<(), AhaError> {
        let to_err = |e: std::io::Error| AhaError::Checkpoint(e.to_string());
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(to_err)?);
        let tensors = self.named_tensors();
        w.write_all(b"NTC1").map_err(to_err)?;
        w.write_all(&(tensors.len() as u32).to_le_bytes()).map_err(to_err)?;
        for (name, t) in tensors {
            let nb = name.as_bytes();
            w.write_all(&(nb.len() as u32).to_le_bytes()).map_err(to_err)?;
            w.write_all(nb).map_err(to_err)?;
            w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(to_err)?;
            for &d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes()).map_err(to_err)?;
            }
            for &v in t.data() {
                w.write_all(&(v as f32).to_le_bytes()).map_err(to_err)?;
            }
        }
        w.flush().map_err(to_err)
    }

    /// Loads a checkpoint written by [`Self::save_weights`]; every model
    /// tensor must be present with a matching shape.
    pub fn load_weights(&mut self, path: &Path) -> Result<(), AhaError> {
        let to_err = |e: std::io::Error| AhaError::Checkpoint(e.to_string());
        let mut r = std::io::BufReader::new(std::fs::File::open(path).map_err(to_err)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(to_err)?;
        if &magic != b"NTC1" {
            return Err(AhaError::Checkpoint("bad magic".into()));
        }
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u32b).map_err(to_err)?;
        let count = u32::from_le_bytes(u32b) as usize;
        let mut loaded: std::collections::HashMap<String, (Vec<usize>, Vec<f64>)> =
            std::collections::HashMap::new();
        for _ in 0..count {
            r.read_exact(&mut u32b).map_err(to_err)?;
            let mut name = vec![0u8; u32::from_le_bytes(u32b) as usize];
            r.read_exact(&mut name).map_err(to_err)?;
            let name = String::from_utf8(name)
                .map_err(|_| AhaError::Checkpoint("non-utf8 tensor name".into()))?;
            r.read_exact(&mut u32b).map_err(to_err)?;
            let ndim = u32::from_le_bytes(u32b) as usize;
            let mut shape = Vec::with_capacity(ndim);
            let mut u64b = [0u8; 8];
            for _ in 0..ndim {
                r.read_exact(&mut u64b).map_err(to_err)?;
                shape.push(u64::from_le_bytes(u64b) as usize);
            }
            let n: usize = shape.iter().product();
            let mut payload = vec![0u8; n * 4];
            r.read_exact(&mut payload).map_err(to_err)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            loaded.insert(name, (shape, data));
        }
        for (name, t) in self.named_tensors_mut() {
            let (shape, data) = loaded
                .remove(&name)
                .ok_or_else(|| AhaError::Checkpoint(format!("missing tensor {name}")))?;
            if shape != t.shape() {
                return Err(AhaError::Checkpoint(format!(
                    "tensor {name}: checkpoint shape {shape:?} vs model {:?}",
                    t.shape()
                )));
            }
            t.data_mut().copy_from_slice(&data);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> AhaConfig {
        AhaConfig {
            frames: 2,
            channels: 16,
            window: [2, 2],
            blocks: 1,
            refine_layers: 1,
            heads: 2,
            input: [64, 32],
            seed: 7,
        }
    }

    fn shaded_inputs(cfg: &AhaConfig) -> Vec<Raster> {
        (0..cfg.frames)
            .map(|s| {
                let mut img = Raster::zeros(cfg.input_width(), cfg.input_height(), 3);
                for row in 0..img.height {
                    for col in 0..img.width {
                        for ch in 0..3 {
                            *img.at_mut(col, row, ch) = ((col * 13 + row * 7 + ch * 3 + s * 29)
                                % 97) as f64
                                / 97.0;
                        }
                    }
                }
                img
            })
            .collect()
    }

    #[test]
    fn forward_produces_valid_ranges_and_sizes() {
        let cfg = small_config();
        let model = AhaModel::new(cfg.clone()).unwrap();
        let out = model.forward(&shaded_inputs(&cfg)).unwrap();
        assert_eq!(out.depth.len(), 2);
        assert_eq!(out.depth[0].len(), 64 * 32);
        assert!(out.depth.iter().flatten().all(|&d| d > 0.0 && d.is_finite()));
        assert!(out
            .confidence
            .iter()
            .flatten()
            .all(|&c| c > 0.0 && c < 1.0));
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = small_config();
        let model = AhaModel::new(cfg.clone()).unwrap();
        let inputs = shaded_inputs(&cfg);
        let a = model.forward(&inputs).unwrap();
        let b = model.forward(&inputs).unwrap();
        assert_eq!(a.depth, b.depth);
        assert_eq!(a.confidence, b.confidence);
    }

    #[test]
    fn zeroed_projections_make_attention_stages_identity() {
        let cfg = small_config();
        let mut model = AhaModel::new(cfg.clone()).unwrap();
        model.zero_output_projections();
        let feats = model.stem_features(&shaded_inputs(&cfg)).unwrap();
        let (_, out) = model.attention_stages(&feats, true);
        for (a, b) in feats.iter().zip(&out) {
            assert_eq!(a.data(), b.data(), "features must pass through bitwise");
        }
    }

    #[test]
    fn frame_permutation_permutes_outputs_bitwise() {
        let mut cfg = small_config();
        cfg.frames = 3;
        let mut model = AhaModel::new(cfg.clone()).unwrap();
        // distinct embeddings so the permutation test is non-trivial
        for s in 0..3 {
            for c in 0..cfg.channels {
                *model.frame_embed.at2_mut(s, c) = (s as f64 + 1.0) * 0.1 + c as f64 * 0.01;
            }
        }
        let inputs = shaded_inputs(&cfg);
        let base = model.forward(&inputs).unwrap();

        let perm = [2usize, 0, 1];
        let permuted_inputs: Vec<Raster> = perm.iter().map(|&s| inputs[s].clone()).collect();
        let mut permuted_model = model.clone();
        for (dst, &src) in perm.iter().enumerate() {
            let row = model.frame_embed.row(src).to_vec();
            permuted_model.frame_embed.row_mut(dst).copy_from_slice(&row);
        }
        let out = permuted_model.forward(&permuted_inputs).unwrap();
        for (dst, &src) in perm.iter().enumerate() {
            assert_eq!(out.depth[dst], base.depth[src], "frame {dst} depth");
            assert_eq!(out.confidence[dst], base.confidence[src]);
        }
    }

    #[test]
    fn rejects_wrong_frame_count_and_size() {
        let cfg = small_config();
        let model = AhaModel::new(cfg.clone()).unwrap();
        let inputs = shaded_inputs(&cfg);
        assert!(matches!(
            model.forward(&inputs[..1]),
            Err(AhaError::FrameCount { .. })
        ));
        let bad = vec![Raster::zeros(32, 16, 3), Raster::zeros(32, 16, 3)];
        assert!(matches!(
            model.forward(&bad),
            Err(AhaError::BadFrameSize { .. })
        ));
    }

    #[test]
    fn checkpoint_roundtrip_restores_the_forward_pass() {
        let cfg = small_config();
        let model = AhaModel::new(cfg.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.ntc");
        model.save_weights(&path).unwrap();

        let mut other = AhaModel::new(AhaConfig {
            seed: 99,
            ..cfg.clone()
        })
        .unwrap();
        other.load_weights(&path).unwrap();

        // f32 round-trip: both sides quantized identically after save/load.
        let mut reloaded = AhaModel::new(cfg.clone()).unwrap();
        reloaded.load_weights(&path).unwrap();
        let inputs = shaded_inputs(&cfg);
        let a = reloaded.forward(&inputs).unwrap();
        let b = other.forward(&inputs).unwrap();
        assert_eq!(a.depth, b.depth);
    }

    #[test]
    fn named_tensor_lists_are_consistent() {
        let mut model = AhaModel::new(small_config()).unwrap();
        let names: Vec<String> = model.named_tensors().iter().map(|(n, _)| n.clone()).collect();
        let names_mut: Vec<String> = model
            .named_tensors_mut()
            .iter()
            .map(|(n, _)| n.clone())
            .collect();
        assert_eq!(names, names_mut);
        let unique: std::collections::HashSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), names.len(), "names must be unique");
    }
}
