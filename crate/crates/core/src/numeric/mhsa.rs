//! Multi-head self-attention with optional additive logit bias.
//!
//! The forward pass reduces over the key axis with value-sorted summation
//! (see [`super::ordered_sum`]); outputs are therefore bitwise equivariant
//! under any permutation of the input sequence (with a permutation-consistent
//! bias), which the network layer above relies on for exact frame-permutation
//! equivariance.

use super::{ordered_sum, Linear, Tensor};
use rand::Rng;

/// Parameters of one MHSA layer over a `[seq, C]` sequence.
#[derive(Debug, Clone)]
pub struct MhsaParams {
    pub num_heads: usize,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    /// Additive pre-softmax bias, shape `[heads, seq, seq]`.
    pub bias: Option<Tensor>,
}

impl MhsaParams {
    pub fn fan_in_uniform<R: Rng>(rng: &mut R, channels: usize, num_heads: usize) -> Self {
        assert!(
            channels % num_heads == 0,
            "channels {channels} not divisible by heads {num_heads}"
        );
        Self {
            num_heads,
            query: Linear::fan_in_uniform(rng, channels, channels),
            key: Linear::fan_in_uniform(rng, channels, channels),
            value: Linear::fan_in_uniform(rng, channels, channels),
            output: Linear::fan_in_uniform(rng, channels, channels),
            bias: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.query.input_dim()
    }

    pub fn head_dim(&self) -> usize {
        self.channels() / self.num_heads
    }

    /// Zeroes the output projection; the layer then contributes nothing to a
    /// residual branch.
    pub fn zero_output_projection(&mut self) {
        self.output.zero_weights();
    }

    fn check(&self, x: &Tensor) {
        assert_eq!(x.shape().len(), 2, "mhsa input must be [seq, C]");
        assert_eq!(
            x.cols(),
            self.channels(),
            "mhsa: channel dim {} vs params {}",
            x.cols(),
            self.channels()
        );
        assert!(x.rows() >= 1, "mhsa: empty sequence");
        if let Some(b) = &self.bias {
            assert_eq!(
                b.shape(),
                &[self.num_heads, x.rows(), x.rows()],
                "mhsa: bias shape mismatch"
            );
        }
    }
}

fn project(x: &Tensor, layer: &Linear) -> Tensor {
    super::linear_forward(x, layer)
}

/// Scaled dot-product attention per head with additive bias before softmax,
/// concatenated heads, output projection.
pub fn mhsa_forward(x: &Tensor, p: &MhsaParams) -> Tensor {
    p.check(x);
    let (n, c) = (x.rows(), x.cols());
    let (h, dh) = (p.num_heads, p.head_dim());
    let scale = 1.0 / (dh as f64).sqrt();

    let q = project(x, &p.query);
    let k = project(x, &p.key);
    let v = project(x, &p.value);

    let mut concat = Tensor::zeros(&[n, c]);
    let mut exps = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for head in 0..h {
        let off = head * dh;
        for i in 0..n {
            // logits for query i over all keys
            let qi = &q.row(i)[off..off + dh];
            let mut maxl = f64::NEG_INFINITY;
            for j in 0..n {
                let kj = &k.row(j)[off..off + dh];
                let mut dot = 0.0;
                for (a, b) in qi.iter().zip(kj) {
                    dot += a * b;
                }
                let mut l = dot * scale;
                if let Some(b) = &p.bias {
                    l += b.data()[(head * n + i) * n + j];
                }
                exps[j] = l;
                maxl = maxl.max(l);
            }
            for e in exps.iter_mut() {
                *e = (*e - maxl).exp();
            }
            scratch.copy_from_slice(&exps);
            let denom = ordered_sum(&mut scratch);
            // weighted value aggregation, canonical per channel
            for cc in 0..dh {
                for j in 0..n {
                    scratch[j] = exps[j] / denom * v.row(j)[off + cc];
                }
                concat.row_mut(i)[off + cc] = ordered_sum(&mut scratch);
            }
        }
    }
    project(&concat, &p.output)
}

/// Gradients of [`mhsa_forward`] w.r.t. the input and every parameter.
#[derive(Debug, Clone)]
pub struct MhsaGrads {
    pub dx: Tensor,
    pub dquery_w: Tensor,
    pub dquery_b: Tensor,
    pub dkey_w: Tensor,
    pub dkey_b: Tensor,
    pub dvalue_w: Tensor,
    pub dvalue_b: Tensor,
    pub doutput_w: Tensor,
    pub doutput_b: Tensor,
    pub dbias: Option<Tensor>,
}

/// Reverse-mode gradients for the full MHSA layer.
pub fn mhsa_backward(x: &Tensor, p: &MhsaParams, upstream: &Tensor) -> MhsaGrads {
    p.check(x);
    assert_eq!(upstream.shape(), x.shape(), "mhsa_backward: upstream shape");
    let (n, c) = (x.rows(), x.cols());
    let (h, dh) = (p.num_heads, p.head_dim());
    let scale = 1.0 / (dh as f64).sqrt();

    let q = project(x, &p.query);
    let k = project(x, &p.key);
    let v = project(x, &p.value);

    // Recompute attention weights (plain summation; gradients do not need the
    // canonical reduction).
    let mut attn = Tensor::zeros(&[h, n, n]);
    let mut concat = Tensor::zeros(&[n, c]);
    for head in 0..h {
        let off = head * dh;
        for i in 0..n {
            let qi = &q.row(i)[off..off + dh];
            let mut maxl = f64::NEG_INFINITY;
            let mut logits = vec![0.0; n];
            for j in 0..n {
                let kj = &k.row(j)[off..off + dh];
                let mut dot = 0.0;
                for (a, b) in qi.iter().zip(kj) {
                    dot += a * b;
                }
                let mut l = dot * scale;
                if let Some(b) = &p.bias {
                    l += b.data()[(head * n + i) * n + j];
                }
                logits[j] = l;
                maxl = maxl.max(l);
            }
            let mut denom = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - maxl).exp();
                denom += *l;
            }
            for j in 0..n {
                let w = logits[j] / denom;
                attn.data_mut()[(head * n + i) * n + j] = w;
                for cc in 0..dh {
                    concat.row_mut(i)[off + cc] += w * v.row(j)[off + cc];
                }
            }
        }
    }

    // Output projection.
    let out_grads = super::linear_backward(&concat, &p.output, upstream);
    let dconcat = out_grads.dx;

    let mut dq = Tensor::zeros(&[n, c]);
    let mut dk = Tensor::zeros(&[n, c]);
    let mut dv = Tensor::zeros(&[n, c]);
    let mut dbias = p.bias.as_ref().map(|_| Tensor::zeros(&[h, n, n]));

    for head in 0..h {
        let off = head * dh;
        for i in 0..n {
            // dA[i, j] = dconcat[i, off..] · v[j, off..]
            let mut da = vec![0.0; n];
            for (j, daj) in da.iter_mut().enumerate() {
                let mut acc = 0.0;
                for cc in 0..dh {
                    acc += dconcat.row(i)[off + cc] * v.row(j)[off + cc];
                }
                *daj = acc;
            }
            // dV[j] += A[i, j] * dconcat[i]
            for j in 0..n {
                let w = attn.data()[(head * n + i) * n + j];
                for cc in 0..dh {
                    dv.row_mut(j)[off + cc] += w * dconcat.row(i)[off + cc];
                }
            }
            // softmax backward on row i
            let mut dot = 0.0;
            for j in 0..n {
                dot += da[j] * attn.data()[(head * n + i) * n + j];
            }
            for j in 0..n {
                let w = attn.data()[(head * n + i) * n + j];
                let dl = w * (da[j] - dot);
                if let Some(db) = dbias.as_mut() {
                    db.data_mut()[(head * n + i) * n + j] += dl;
                }
                // dQ[i] += dl * scale * K[j]; dK[j] += dl * scale * Q[i]
                for cc in 0..dh {
                    dq.row_mut(i)[off + cc] += dl * scale * k.row(j)[off + cc];
                    dk.row_mut(j)[off + cc] += dl * scale * q.row(i)[off + cc];
                }
            }
        }
    }

    let qg = super::linear_backward(x, &p.query, &dq);
    let kg = super::linear_backward(x, &p.key, &dk);
    let vg = super::linear_backward(x, &p.value, &dv);
    let mut dx = qg.dx;
    dx.add_assign(&kg.dx);
    dx.add_assign(&vg.dx);

    MhsaGrads {
        dx,
        dquery_w: qg.dweight,
        dquery_b: qg.dbias,
        dkey_w: kg.dweight,
        dkey_b: kg.dbias,
        dvalue_w: vg.dweight,
        dvalue_b: vg.dbias,
        doutput_w: out_grads.dweight,
        doutput_b: out_grads.dbias,
        dbias,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(seed: u64, c: usize, heads: usize) -> MhsaParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MhsaParams::fan_in_uniform(&mut rng, c, heads)
    }

    fn random_x(seed: u64, n: usize, c: usize) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_vec(&[n, c], (0..n * c).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn single_token_reduces_to_value_output_chain() {
        let p = params(1, 8, 2);
        let x = random_x(2, 1, 8);
        let y = mhsa_forward(&x, &p);
        // attention weight over one key is exactly 1
        let v = super::project(&x, &p.value);
        let expect = super::project(&v, &p.output);
        for (a, b) in y.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_tokens_produce_identical_outputs() {
        let p = params(3, 8, 2);
        let mut x = Tensor::zeros(&[5, 8]);
        let row: Vec<f64> = (0..8).map(|i| 0.3 * i as f64 - 1.0).collect();
        for r in 0..5 {
            x.row_mut(r).copy_from_slice(&row);
        }
        let y = mhsa_forward(&x, &p);
        for r in 1..5 {
            assert_eq!(y.row(0), y.row(r));
        }
    }

    #[test]
    fn sequence_permutation_permutes_outputs_bitwise() {
        let p = params(4, 8, 2);
        let x = random_x(5, 6, 8);
        let y = mhsa_forward(&x, &p);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut xp = Tensor::zeros(&[6, 8]);
        for (dst, &src) in perm.iter().enumerate() {
            xp.row_mut(dst).copy_from_slice(x.row(src));
        }
        let yp = mhsa_forward(&xp, &p);
        for (dst, &src) in perm.iter().enumerate() {
            assert_eq!(yp.row(dst), y.row(src), "row {dst} differs");
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut p = params(6, 8, 2);
        p.bias = Some(Tensor::zeros(&[2, 4, 4]));
        let x = random_x(7, 4, 8);
        let g = mhsa_backward(&x, &p, &Tensor::zeros(&[4, 8]));
        assert!(g.dx.data().iter().all(|&v| v == 0.0));
        assert!(g.dquery_w.data().iter().all(|&v| v == 0.0));
        assert!(g.dbias.unwrap().data().iter().all(|&v| v == 0.0));
    }
}
