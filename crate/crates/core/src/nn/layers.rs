//! Layer forward/backward passes: dense, dilated 1-d convolution, LSTM,
//! global max pooling, softmax and cross-entropy.
//!
//! Each `forward_cached` records exactly the intermediate values its
//! `backward` needs. Gradients are returned in dedicated `*Grads` structs
//! whose tensors mirror the parameter shapes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NnError;

/// Elementwise nonlinearity applied after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's own output.
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

/// Fully connected layer: y = activation(W x + b).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out, in]`
    pub weights: Tensor,
    /// `[out]`
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        Dense {
            weights: Tensor::glorot_uniform(&[out_dim, in_dim], in_dim, out_dim, rng),
            bias: Tensor::zeros(&[out_dim]),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(x)?.1)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(DenseCache, Vec<f64>), NnError> {
        let (out_dim, in_dim) = (self.out_dim(), self.in_dim());
        if x.len() != in_dim {
            return Err(NnError::ShapeMismatch {
                context: "Dense::forward",
                expected: vec![in_dim],
                got: vec![x.len()],
            });
        }
        let w = self.weights.data();
        let b = self.bias.data();
        let mut y = vec![0.0; out_dim];
        for o in 0..out_dim {
            let row = &w[o * in_dim..(o + 1) * in_dim];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc = wi.mul_add(*xi, acc);
            }
            y[o] = self.activation.apply(acc);
        }
        let cache = DenseCache {
            input: x.to_vec(),
            output: y.clone(),
        };
        Ok((cache, y))
    }

    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &DenseCache, grad_out: &[f64]) -> (DenseGrads, Vec<f64>) {
        let (out_dim, in_dim) = (self.out_dim(), self.in_dim());
        debug_assert_eq!(grad_out.len(), out_dim);
        let w = self.weights.data();
        let mut gw = Tensor::zeros(&[out_dim, in_dim]);
        let mut gb = Tensor::zeros(&[out_dim]);
        let mut gx = vec![0.0; in_dim];
        for o in 0..out_dim {
            let d = grad_out[o] * self.activation.grad_from_output(cache.output[o]);
            gb.data_mut()[o] = d;
            let grow = &mut gw.data_mut()[o * in_dim..(o + 1) * in_dim];
            let wrow = &w[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                grow[i] = d * cache.input[i];
                gx[i] = d.mul_add(wrow[i], gx[i]);
            }
        }
        (DenseGrads { weights: gw, bias: gb }, gx)
    }

    pub fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            weights: self.weights.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

impl DenseGrads {
    pub fn accumulate(&mut self, other: &DenseGrads) {
        add_assign(&mut self.weights, &other.weights);
        add_assign(&mut self.bias, &other.bias);
    }

    pub fn scale(&mut self, s: f64) {
        scale(&mut self.weights, s);
        scale(&mut self.bias, s);
    }
}

pub(crate) fn add_assign(dst: &mut Tensor, src: &Tensor) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

pub(crate) fn scale(t: &mut Tensor, s: f64) {
    for v in t.data_mut() {
        *v *= s;
    }
}

// ---------------------------------------------------------------------------
// Stack of dense layers
// ---------------------------------------------------------------------------

/// A plain sequence of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone)]
pub struct FeedForwardCache {
    caches: Vec<DenseCache>,
}

#[derive(Debug, Clone)]
pub struct FeedForwardGrads {
    pub layers: Vec<DenseGrads>,
}

impl FeedForward {
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(x)?.1)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(FeedForwardCache, Vec<f64>), NnError> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let (cache, y) = layer.forward_cached(&cur)?;
            caches.push(cache);
            cur = y;
        }
        Ok((FeedForwardCache { caches }, cur))
    }

    pub fn backward(
        &self,
        cache: &FeedForwardCache,
        grad_out: &[f64],
    ) -> (FeedForwardGrads, Vec<f64>) {
        let mut grads = vec![None; self.layers.len()];
        let mut g = grad_out.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let (lg, gx) = layer.backward(&cache.caches[idx], &g);
            grads[idx] = Some(lg);
            g = gx;
        }
        let layers = grads.into_iter().map(|g| g.unwrap()).collect();
        (FeedForwardGrads { layers }, g)
    }

    pub fn zero_grads(&self) -> FeedForwardGrads {
        FeedForwardGrads {
            layers: self.layers.iter().map(Dense::zero_grads).collect(),
        }
    }
}

impl FeedForwardGrads {
    pub fn accumulate(&mut self, other: &FeedForwardGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.accumulate(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.scale(s);
        }
    }
}

// ---------------------------------------------------------------------------
// Dilated 1-d convolution
// ---------------------------------------------------------------------------

/// Valid (no padding) 1-d convolution with dilated taps.
///
/// Input is `[len, in_channels]`; output is `[out_len, filters]` with
/// `out_len = len - (width - 1) * dilation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[filters, width, in_channels]`
    pub kernels: Tensor,
    /// `[filters]`
    pub bias: Tensor,
    pub dilation: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache {
    input: Tensor,
    output: Tensor,
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub kernels: Tensor,
    pub bias: Tensor,
}

impl Conv1d {
    pub fn new<R: Rng>(
        in_channels: usize,
        filters: usize,
        width: usize,
        dilation: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dilation >= 1, "dilation must be at least 1");
        let fan_in = width * in_channels;
        Conv1d {
            kernels: Tensor::glorot_uniform(&[filters, width, in_channels], fan_in, filters, rng),
            bias: Tensor::zeros(&[filters]),
            dilation,
            activation,
        }
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[2]
    }

    /// Number of input steps one output step sees.
    pub fn receptive_field(&self) -> usize {
        (self.width() - 1) * self.dilation + 1
    }

    pub fn out_len(&self, len: usize) -> Option<usize> {
        len.checked_sub((self.width() - 1) * self.dilation)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(x)?.1)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Conv1dCache, Tensor), NnError> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_channels() {
            return Err(NnError::ShapeMismatch {
                context: "Conv1d::forward",
                expected: vec![0, self.in_channels()],
                got: x.shape().to_vec(),
            });
        }
        let len = x.shape()[0];
        let rf = self.receptive_field();
        let out_len = match self.out_len(len) {
            Some(n) if n >= 1 => n,
            _ => {
                return Err(NnError::InputTooShort {
                    len,
                    receptive_field: rf,
                })
            }
        };
        let (filters, width, channels) = (self.filters(), self.width(), self.in_channels());
        let k = self.kernels.data();
        let b = self.bias.data();
        let xs = x.data();
        let mut y = Tensor::zeros(&[out_len, filters]);
        let ys = y.data_mut();
        for t in 0..out_len {
            for f in 0..filters {
                let mut acc = b[f];
                for w in 0..width {
                    let xoff = (t + w * self.dilation) * channels;
                    let koff = (f * width + w) * channels;
                    for c in 0..channels {
                        acc = k[koff + c].mul_add(xs[xoff + c], acc);
                    }
                }
                ys[t * filters + f] = self.activation.apply(acc);
            }
        }
        let cache = Conv1dCache {
            input: x.clone(),
            output: y.clone(),
        };
        Ok((cache, y))
    }

    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &Conv1dCache, grad_out: &Tensor) -> (Conv1dGrads, Tensor) {
        let (filters, width, channels) = (self.filters(), self.width(), self.in_channels());
        let out_len = grad_out.shape()[0];
        debug_assert_eq!(grad_out.shape()[1], filters);
        let k = self.kernels.data();
        let xs = cache.input.data();
        let outs = cache.output.data();
        let gys = grad_out.data();

        let mut gk = Tensor::zeros(&[filters, width, channels]);
        let mut gb = Tensor::zeros(&[filters]);
        let mut gx = cache.input.zeros_like();
        for t in 0..out_len {
            for f in 0..filters {
                let d = gys[t * filters + f]
                    * self
                        .activation
                        .grad_from_output(outs[t * filters + f]);
                if d == 0.0 {
                    continue;
                }
                gb.data_mut()[f] += d;
                for w in 0..width {
                    let xoff = (t + w * self.dilation) * channels;
                    let koff = (f * width + w) * channels;
                    let gkrow = &mut gk.data_mut()[koff..koff + channels];
                    for c in 0..channels {
                        gkrow[c] = d.mul_add(xs[xoff + c], gkrow[c]);
                    }
                    let gxrow = &mut gx.data_mut()[xoff..xoff + channels];
                    for c in 0..channels {
                        gxrow[c] = d.mul_add(k[koff + c], gxrow[c]);
                    }
                }
            }
        }
        (
            Conv1dGrads {
                kernels: gk,
                bias: gb,
            },
            gx,
        )
    }

    pub fn zero_grads(&self) -> Conv1dGrads {
        Conv1dGrads {
            kernels: self.kernels.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

impl Conv1dGrads {
    pub fn accumulate(&mut self, other: &Conv1dGrads) {
        add_assign(&mut self.kernels, &other.kernels);
        add_assign(&mut self.bias, &other.bias);
    }

    pub fn scale(&mut self, s: f64) {
        scale(&mut self.kernels, s);
        scale(&mut self.bias, s);
    }
}

// ---------------------------------------------------------------------------
// Global max pooling
// ---------------------------------------------------------------------------

/// Per-filter maximum over the time axis of `[len, filters]`.
///
/// Returns the pooled vector and the winning time index per filter; ties go to
/// the first maximal index, which is also where the gradient is routed.
pub fn global_max_pool(x: &Tensor) -> Result<(Vec<f64>, Vec<usize>), NnError> {
    let len = x.shape()[0];
    let filters = x.shape()[1];
    if len == 0 {
        return Err(NnError::EmptyPool);
    }
    let xs = x.data();
    let mut best = xs[..filters].to_vec();
    let mut arg = vec![0usize; filters];
    for t in 1..len {
        for f in 0..filters {
            let v = xs[t * filters + f];
            if v > best[f] {
                best[f] = v;
                arg[f] = t;
            }
        }
    }
    Ok((best, arg))
}

/// Scatter the pooled gradient back to the winning timesteps.
pub fn global_max_pool_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &[f64],
) -> Tensor {
    let filters = input_shape[1];
    let mut gx = Tensor::zeros(input_shape);
    for f in 0..filters {
        gx.data_mut()[argmax[f] * filters + f] = grad_out[f];
    }
    gx
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// Single-layer LSTM returning the final hidden state.
///
/// Gate rows in `w_input`, `w_recurrent` and `bias` are stacked in the order
/// input, forget, candidate, output; state starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `[4 * hidden, in]`
    pub w_input: Tensor,
    /// `[4 * hidden, hidden]`
    pub w_recurrent: Tensor,
    /// `[4 * hidden]`
    pub bias: Tensor,
    pub hidden_size: usize,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Tensor,
    steps: Vec<LstmStep>,
}

#[derive(Debug, Clone)]
struct LstmStep {
    gates: Vec<f64>, // [4H]: i, f, g, o after nonlinearities
    cell_tanh: Vec<f64>,
    hidden_prev: Vec<f64>,
    cell_prev: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_input: Tensor,
    pub w_recurrent: Tensor,
    pub bias: Tensor,
}

impl Lstm {
    pub fn new<R: Rng>(in_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Lstm {
            w_input: Tensor::glorot_uniform(&[4 * hidden, in_dim], in_dim, hidden, rng),
            w_recurrent: Tensor::glorot_uniform(&[4 * hidden, hidden], hidden, hidden, rng),
            bias: Tensor::zeros(&[4 * hidden]),
            hidden_size: hidden,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_input.shape()[1]
    }

    /// Final hidden state after consuming every row of `x` (`[len, in]`).
    /// Zero rows of input are processed like any other; callers mask by
    /// passing only the valid prefix. `len = 0` yields the zero state.
    pub fn forward(&self, x: &Tensor) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(x)?.1)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(LstmCache, Vec<f64>), NnError> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_dim() {
            return Err(NnError::ShapeMismatch {
                context: "Lstm::forward",
                expected: vec![0, self.in_dim()],
                got: x.shape().to_vec(),
            });
        }
        let h_size = self.hidden_size;
        let in_dim = self.in_dim();
        let len = x.shape()[0];
        let wi = self.w_input.data();
        let wr = self.w_recurrent.data();
        let b = self.bias.data();

        let mut h = vec![0.0; h_size];
        let mut c = vec![0.0; h_size];
        let mut steps = Vec::with_capacity(len);
        for t in 0..len {
            let xt = x.row(t);
            let mut z = b.to_vec(); // [4H]
            for r in 0..4 * h_size {
                let wrow = &wi[r * in_dim..(r + 1) * in_dim];
                let mut acc = z[r];
                for (w, v) in wrow.iter().zip(xt.iter()) {
                    acc = w.mul_add(*v, acc);
                }
                let rrow = &wr[r * h_size..(r + 1) * h_size];
                for (w, v) in rrow.iter().zip(h.iter()) {
                    acc = w.mul_add(*v, acc);
                }
                z[r] = acc;
            }
            let mut gates = vec![0.0; 4 * h_size];
            for j in 0..h_size {
                gates[j] = sigmoid(z[j]); // input
                gates[h_size + j] = sigmoid(z[h_size + j]); // forget
                gates[2 * h_size + j] = z[2 * h_size + j].tanh(); // candidate
                gates[3 * h_size + j] = sigmoid(z[3 * h_size + j]); // output
            }
            let hidden_prev = h.clone();
            let cell_prev = c.clone();
            let mut cell_tanh = vec![0.0; h_size];
            for j in 0..h_size {
                c[j] = gates[h_size + j] * cell_prev[j] + gates[j] * gates[2 * h_size + j];
                cell_tanh[j] = c[j].tanh();
                h[j] = gates[3 * h_size + j] * cell_tanh[j];
            }
            steps.push(LstmStep {
                gates,
                cell_tanh,
                hidden_prev,
                cell_prev,
            });
        }
        Ok((
            LstmCache {
                input: x.clone(),
                steps,
            },
            h,
        ))
    }

    /// Backpropagation through time from a gradient on the final hidden state.
    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &LstmCache, grad_h_final: &[f64]) -> (LstmGrads, Tensor) {
        let h_size = self.hidden_size;
        let in_dim = self.in_dim();
        let wi = self.w_input.data();
        let wr = self.w_recurrent.data();

        let mut gwi = Tensor::zeros(&[4 * h_size, in_dim]);
        let mut gwr = Tensor::zeros(&[4 * h_size, h_size]);
        let mut gb = Tensor::zeros(&[4 * h_size]);
        let mut gx = cache.input.zeros_like();

        let mut dh = grad_h_final.to_vec();
        let mut dc = vec![0.0; h_size];
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let g = &step.gates;
            let mut dz = vec![0.0; 4 * h_size];
            for j in 0..h_size {
                let i = g[j];
                let f = g[h_size + j];
                let cand = g[2 * h_size + j];
                let o = g[3 * h_size + j];
                let tc = step.cell_tanh[j];

                let do_ = dh[j] * tc;
                dz[3 * h_size + j] = do_ * o * (1.0 - o);
                let dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
                dz[j] = dct * cand * i * (1.0 - i);
                dz[h_size + j] = dct * step.cell_prev[j] * f * (1.0 - f);
                dz[2 * h_size + j] = dct * i * (1.0 - cand * cand);
                dc[j] = dct * f;
            }
            let xt = cache.input.row(t);
            let mut dh_prev = vec![0.0; h_size];
            let gxt = &mut gx.data_mut()[t * in_dim..(t + 1) * in_dim];
            for r in 0..4 * h_size {
                let d = dz[r];
                if d == 0.0 {
                    continue;
                }
                gb.data_mut()[r] += d;
                let gwirow = &mut gwi.data_mut()[r * in_dim..(r + 1) * in_dim];
                let wirow = &wi[r * in_dim..(r + 1) * in_dim];
                for k in 0..in_dim {
                    gwirow[k] = d.mul_add(xt[k], gwirow[k]);
                    gxt[k] = d.mul_add(wirow[k], gxt[k]);
                }
                let gwrrow = &mut gwr.data_mut()[r * h_size..(r + 1) * h_size];
                let wrrow = &wr[r * h_size..(r + 1) * h_size];
                for k in 0..h_size {
                    gwrrow[k] = d.mul_add(step.hidden_prev[k], gwrrow[k]);
                    dh_prev[k] = d.mul_add(wrrow[k], dh_prev[k]);
                }
            }
            dh = dh_prev;
        }
        (
            LstmGrads {
                w_input: gwi,
                w_recurrent: gwr,
                bias: gb,
            },
            gx,
        )
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            w_input: self.w_input.zeros_like(),
            w_recurrent: self.w_recurrent.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

impl LstmGrads {
    pub fn accumulate(&mut self, other: &LstmGrads) {
        add_assign(&mut self.w_input, &other.w_input);
        add_assign(&mut self.w_recurrent, &other.w_recurrent);
        add_assign(&mut self.bias, &other.bias);
    }

    pub fn scale(&mut self, s: f64) {
        scale(&mut self.w_input, s);
        scale(&mut self.w_recurrent, s);
        scale(&mut self.bias, s);
    }
}

// ---------------------------------------------------------------------------
// Softmax and cross-entropy
// ---------------------------------------------------------------------------

/// Numerically stable softmax (max-shifted).
pub fn softmax(x: &[f64]) -> Vec<f64> {
    assert!(!x.is_empty(), "softmax over an empty vector");
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Negative log-likelihood of `label` under `probs`, clamped at 1e-12.
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(1e-12).ln()
}

/// Fused softmax + cross-entropy. Returns (loss, probs, grad wrt logits),
/// where the logit gradient is `p - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let probs = softmax(logits);
    let loss = cross_entropy_loss(&probs, label);
    let mut grad = probs.clone();
    grad[label] -= 1.0;
    (loss, probs, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_dense(dim: usize) -> Dense {
        let mut w = Tensor::zeros(&[dim, dim]);
        for i in 0..dim {
            w.data_mut()[i * dim + i] = 1.0;
        }
        Dense {
            weights: w,
            bias: Tensor::zeros(&[dim]),
            activation: Activation::Identity,
        }
    }

    #[test]
    fn dense_identity_passes_input_through() {
        let layer = identity_dense(3);
        let y = layer.forward(&[0.5, -1.0, 2.0]).unwrap();
        assert_eq!(y, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn dense_hand_computed_matrix() {
        let layer = Dense {
            weights: Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            bias: Tensor::zeros(&[2]),
            activation: Activation::Identity,
        };
        assert_eq!(layer.forward(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn dense_relu_clamps_negative_preactivation() {
        let layer = Dense {
            weights: Tensor::from_vec(&[2, 1], vec![1.0, 1.0]).unwrap(),
            bias: Tensor::from_vec(&[2], vec![-2.0, 1.0]).unwrap(),
            activation: Activation::Relu,
        };
        // pre-activations [-1, 2]
        assert_eq!(layer.forward(&[1.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn dense_rejects_shape_mismatch() {
        let layer = identity_dense(3);
        assert!(layer.forward(&[1.0, 2.0]).is_err());
    }

    fn single_channel_conv(kernel: &[f64], dilation: usize) -> Conv1d {
        Conv1d {
            kernels: Tensor::from_vec(&[1, kernel.len(), 1], kernel.to_vec()).unwrap(),
            bias: Tensor::zeros(&[1]),
            dilation,
            activation: Activation::Identity,
        }
    }

    fn column(values: &[f64]) -> Tensor {
        Tensor::from_vec(&[values.len(), 1], values.to_vec()).unwrap()
    }

    #[test]
    fn conv_hand_computed_dilation_one() {
        let conv = single_channel_conv(&[1.0, 0.0, -1.0], 1);
        let y = conv.forward(&column(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(y.shape(), &[3, 1]);
        assert_eq!(y.data(), &[-2.0, -2.0, -2.0]);
    }

    #[test]
    fn conv_hand_computed_dilation_two() {
        let conv = single_channel_conv(&[1.0, 0.0, -1.0], 2);
        let y = conv.forward(&column(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(y.shape(), &[1, 1]);
        assert_eq!(y.data(), &[-4.0]);
    }

    #[test]
    fn conv_width_one_is_identity() {
        let conv = single_channel_conv(&[1.0], 1);
        let x = column(&[3.0, -1.0, 7.0]);
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_rejects_short_input() {
        let conv = single_channel_conv(&[1.0, 0.0, -1.0], 2);
        // receptive field is 5
        let err = conv.forward(&column(&[1.0, 2.0, 3.0, 4.0])).unwrap_err();
        assert!(matches!(err, NnError::InputTooShort { receptive_field: 5, .. }));
    }

    #[test]
    fn max_pool_per_filter() {
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 5.0, 3.0, 2.0]).unwrap();
        let (pooled, arg) = global_max_pool(&x).unwrap();
        assert_eq!(pooled, vec![3.0, 5.0]);
        assert_eq!(arg, vec![1, 0]);
    }

    #[test]
    fn max_pool_single_timestep() {
        let x = Tensor::from_vec(&[1, 3], vec![0.1, -0.2, 0.3]).unwrap();
        let (pooled, _) = global_max_pool(&x).unwrap();
        assert_eq!(pooled, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn max_pool_tie_routes_gradient_to_first_index() {
        let x = Tensor::from_vec(&[3, 1], vec![2.0, 2.0, 2.0]).unwrap();
        let (pooled, arg) = global_max_pool(&x).unwrap();
        assert_eq!(pooled, vec![2.0]);
        assert_eq!(arg, vec![0]);
        let gx = global_max_pool_backward(&[3, 1], &arg, &[1.0]);
        assert_eq!(gx.data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn max_pool_rejects_empty_axis() {
        let x = Tensor::zeros(&[0, 2]);
        assert!(matches!(global_max_pool(&x), Err(NnError::EmptyPool)));
    }

    #[test]
    fn lstm_zero_params_give_zero_hidden() {
        let lstm = Lstm {
            w_input: Tensor::zeros(&[8, 3]),
            w_recurrent: Tensor::zeros(&[8, 2]),
            bias: Tensor::zeros(&[8]),
            hidden_size: 2,
        };
        let x = Tensor::from_vec(&[4, 3], vec![1.0; 12]).unwrap();
        let h = lstm.forward(&x).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn lstm_forced_forget_gate_persists_cell() {
        // Scalar LSTM: input gate pinned low except at t=0, forget pinned high,
        // so the cell value written at step 0 survives to the end.
        let big = 20.0;
        let mut lstm = Lstm {
            w_input: Tensor::zeros(&[4, 1]),
            w_recurrent: Tensor::zeros(&[4, 1]),
            bias: Tensor::from_vec(&[4], vec![-big, big, 0.0, big]).unwrap(),
            hidden_size: 1,
        };
        // candidate follows the input signal; input gate opens when x is large
        lstm.w_input.data_mut()[0] = 2.0 * big; // input gate row
        lstm.w_input.data_mut()[2] = big; // candidate row
        let x = Tensor::from_vec(&[3, 1], vec![1.0, 0.0, 0.0]).unwrap();
        let h = lstm.forward(&x).unwrap();
        // step 0 stores c ~= tanh(20) ~= 1; later steps add ~0 and keep c
        assert_relative_eq!(h[0], 1.0_f64.tanh(), epsilon = 1e-3);

        let x_longer = Tensor::from_vec(&[6, 1], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let h_longer = lstm.forward(&x_longer).unwrap();
        assert_relative_eq!(h[0], h_longer[0], epsilon = 1e-3);
    }

    #[test]
    fn lstm_output_shape_is_hidden_size() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let lstm = Lstm::new(4, 6, &mut rng);
        for len in [1usize, 2, 9] {
            let x = Tensor::from_vec(&[len, 4], vec![0.3; len * 4]).unwrap();
            assert_eq!(lstm.forward(&x).unwrap().len(), 6);
        }
    }

    use rand::SeedableRng;

    #[test]
    fn softmax_uniform_on_equal_logits() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_stable_under_large_inputs() {
        let p = softmax(&[1000.0, 0.0]);
        assert!(p[0] > 1.0 - 1e-12 && p[0].is_finite());
        assert!(p[1] < 1e-12);
    }

    #[test]
    fn softmax_closed_form() {
        let p = softmax(&[1.0_f64.ln(), 3.0_f64.ln()]);
        assert_relative_eq!(p[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.75, epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_values() {
        assert_relative_eq!(
            cross_entropy_loss(&[0.5, 0.5], 1),
            2.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(cross_entropy_loss(&[0.0, 1.0], 1), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            cross_entropy_loss(&[0.25, 0.75], 0),
            -(0.25_f64.ln()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn softmax_cross_entropy_gradient_is_p_minus_onehot() {
        let (_, probs, grad) = softmax_cross_entropy(&[0.3, -0.2], 1);
        assert_relative_eq!(grad[0], probs[0], epsilon = 1e-15);
        assert_relative_eq!(grad[1], probs[1] - 1.0, epsilon = 1e-15);
    }
}
