//! Elementwise and per-row kernels: softmax, GELU, linear map, layer
//! normalization, and the one-hidden-layer MLP. Each has an analytic
//! backward pass checked against finite differences in the test suite.

use super::{ordered_sum, Tensor};
use rand::Rng;

/// Numerically stable softmax along `axis` (max subtraction, value-sorted
/// denominator summation).
pub fn softmax(x: &Tensor, axis: usize) -> Tensor {
    let shape = x.shape().to_vec();
    assert!(axis < shape.len(), "softmax: axis {axis} out of range");
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = x.clone();
    let mut buf = vec![0.0; n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut m = f64::NEG_INFINITY;
            for j in 0..n {
                m = m.max(x.data()[base + j * inner]);
            }
            for j in 0..n {
                buf[j] = (x.data()[base + j * inner] - m).exp();
            }
            let mut scratch = buf.clone();
            let denom = ordered_sum(&mut scratch);
            for j in 0..n {
                out.data_mut()[base + j * inner] = buf[j] / denom;
            }
        }
    }
    out
}

/// Backward of `softmax` along `axis`: given `s = softmax(x)` and upstream
/// `dy`, returns `dx = s ⊙ (dy − ⟨dy, s⟩)` per fiber.
pub fn softmax_backward(s: &Tensor, dy: &Tensor, axis: usize) -> Tensor {
    assert_eq!(s.shape(), dy.shape(), "softmax_backward: shape mismatch");
    let shape = s.shape().to_vec();
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut dx = Tensor::zeros(&shape);
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut dot = 0.0;
            for j in 0..n {
                dot += dy.data()[base + j * inner] * s.data()[base + j * inner];
            }
            for j in 0..n {
                let idx = base + j * inner;
                dx.data_mut()[idx] = s.data()[idx] * (dy.data()[idx] - dot);
            }
        }
    }
    dx
}

/// Exact GELU: `x · Φ(x)` with the Gaussian CDF.
pub fn gelu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = gelu_scalar(*v);
    }
    out
}

#[inline]
pub(crate) fn gelu_scalar(x: f64) -> f64 {
    x * 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

#[inline]
pub(crate) fn gelu_grad_scalar(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

pub fn gelu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    assert_eq!(x.shape(), dy.shape(), "gelu_backward: shape mismatch");
    let mut dx = x.clone();
    for (d, u) in dx.data_mut().iter_mut().zip(dy.data()) {
        *d = gelu_grad_scalar(*d) * u;
    }
    dx
}

/// Affine map `y = x·W + b` with `W: [in, out]`, `b: [out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dx: Tensor,
    pub dweight: Tensor,
    pub dbias: Tensor,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[input, output]),
            bias: Tensor::zeros(&[output]),
        }
    }

    /// Fan-in-scaled uniform weights, zero bias.
    pub fn fan_in_uniform<R: Rng>(rng: &mut R, input: usize, output: usize) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            weight: Tensor::from_vec(&[input, output], data).unwrap(),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn zero_weights(&mut self) {
        self.weight.data_mut().fill(0.0);
        self.bias.data_mut().fill(0.0);
    }
}

pub fn linear_forward(x: &Tensor, layer: &Linear) -> Tensor {
    assert_eq!(
        x.cols(),
        layer.input_dim(),
        "linear: input dim {} vs weight {}",
        x.cols(),
        layer.input_dim()
    );
    let mut y = x.matmul(&layer.weight);
    let out = layer.output_dim();
    for r in 0..y.rows() {
        let row = y.row_mut(r);
        for c in 0..out {
            row[c] += layer.bias.data()[c];
        }
    }
    y
}

pub fn linear_backward(x: &Tensor, layer: &Linear, dy: &Tensor) -> LinearGrads {
    let dx = dy.matmul_nt(&layer.weight);
    let dweight = x.matmul_tn(dy);
    let mut dbias = Tensor::zeros(&[layer.output_dim()]);
    for r in 0..dy.rows() {
        for (db, v) in dbias.data_mut().iter_mut().zip(dy.row(r)) {
            *db += v;
        }
    }
    LinearGrads { dx, dweight, dbias }
}

/// Layer normalization over the last axis with learnable scale and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormGrads {
    pub dx: Tensor,
    pub dgamma: Tensor,
    pub dbeta: Tensor,
}

impl LayerNorm {
    pub fn identity(dim: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[dim], 1.0),
            beta: Tensor::zeros(&[dim]),
            eps: 1e-6,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

pub fn layernorm_forward(x: &Tensor, ln: &LayerNorm) -> Tensor {
    let c = ln.dim();
    assert_eq!(
        *x.shape().last().unwrap(),
        c,
        "layernorm: channel dim mismatch"
    );
    let rows = x.len() / c;
    let mut out = x.clone();
    for r in 0..rows {
        let row = &x.data()[r * c..(r + 1) * c];
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + ln.eps).sqrt();
        let orow = &mut out.data_mut()[r * c..(r + 1) * c];
        for i in 0..c {
            orow[i] = (row[i] - mean) * inv * ln.gamma.data()[i] + ln.beta.data()[i];
        }
    }
    out
}

pub fn layernorm_backward(x: &Tensor, ln: &LayerNorm, dy: &Tensor) -> LayerNormGrads {
    let c = ln.dim();
    let rows = x.len() / c;
    let mut dx = Tensor::zeros(x.shape());
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for r in 0..rows {
        let row = &x.data()[r * c..(r + 1) * c];
        let dyr = &dy.data()[r * c..(r + 1) * c];
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + ln.eps).sqrt();
        let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv).collect();
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for i in 0..c {
            let dxhat = dyr[i] * ln.gamma.data()[i];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[i];
            dgamma.data_mut()[i] += dyr[i] * xhat[i];
            dbeta.data_mut()[i] += dyr[i];
        }
        mean_dxhat /= c as f64;
        mean_dxhat_xhat /= c as f64;
        let dxr = &mut dx.data_mut()[r * c..(r + 1) * c];
        for i in 0..c {
            let dxhat = dyr[i] * ln.gamma.data()[i];
            dxr[i] = inv * (dxhat - mean_dxhat - xhat[i] * mean_dxhat_xhat);
        }
    }
    LayerNormGrads { dx, dgamma, dbeta }
}

/// One-hidden-layer MLP: `y = W2·gelu(W1·x + b1) + b2`.
#[derive(Debug, Clone)]
pub struct Mlp1 {
    pub fc1: Linear,
    pub fc2: Linear,
}

#[derive(Debug, Clone)]
pub struct Mlp1Grads {
    pub dx: Tensor,
    pub dfc1: LinearGrads,
    pub dfc2: LinearGrads,
}

impl Mlp1 {
    pub fn fan_in_uniform<R: Rng>(rng: &mut R, input: usize, hidden: usize, output: usize) -> Self {
        Self {
            fc1: Linear::fan_in_uniform(rng, input, hidden),
            fc2: Linear::fan_in_uniform(rng, hidden, output),
        }
    }

    /// Zeroes the output projection so the MLP contributes nothing to a
    /// residual branch.
    pub fn zero_output_projection(&mut self) {
        self.fc2.zero_weights();
    }
}

pub fn mlp1_forward(x: &Tensor, mlp: &Mlp1) -> Tensor {
    let h = linear_forward(x, &mlp.fc1);
    let a = gelu(&h);
    linear_forward(&a, &mlp.fc2)
}

pub fn mlp1_backward(x: &Tensor, mlp: &Mlp1, dy: &Tensor) -> Mlp1Grads {
    let h = linear_forward(x, &mlp.fc1);
    let a = gelu(&h);
    let dfc2 = linear_backward(&a, &mlp.fc2, dy);
    let da = gelu_backward(&h, &dfc2.dx);
    let dfc1 = linear_backward(x, &mlp.fc1, &da);
    Mlp1Grads {
        dx: dfc1.dx.clone(),
        dfc1,
        dfc2,
    }
}
