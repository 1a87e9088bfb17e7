//! Fully-connected network with tanh hidden layers, hand-rolled training
//! machinery.
//!
//! Besides the plain forward/backward pass, the network propagates first and
//! second input derivatives forward (value, input gradient and the diagonal
//! of the input Hessian), which yields the exact Laplacian needed by the
//! PDE-residual loss. A reverse pass through that forward propagation gives
//! exact parameter gradients of objectives that depend on the value, the
//! input gradient and the Laplacian.
//!
//! Parameters live in one flat `Vec<f64>`, per layer: weight matrix
//! (row-major, `n_out x n_in`) followed by the bias vector. Checkpoints use
//! exactly that layout: an ASCII header line with the layer sizes, then the
//! flat array as little-endian 64-bit floats.

use crate::greens::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::io::{self, BufRead, Read, Write};
use std::path::Path;

#[derive(Debug)]
pub enum NeuralError {
    ShapeMismatch { expected: usize, got: usize },
    InvalidCheckpoint(String),
    Io(io::Error),
}

impl fmt::Display for NeuralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeuralError::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected} values, got {got}")
            }
            NeuralError::InvalidCheckpoint(msg) => write!(f, "invalid checkpoint: {msg}"),
            NeuralError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for NeuralError {}

impl From<io::Error> for NeuralError {
    fn from(e: io::Error) -> Self {
        NeuralError::Io(e)
    }
}

/// Total parameter count for the given layer sizes.
pub fn count_params(layer_sizes: &[usize]) -> usize {
    assert!(layer_sizes.len() >= 2, "need at least input and output layer");
    assert!(layer_sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
    layer_sizes
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}

/// Weights and biases of a fully-connected network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    data: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let n = count_params(layer_sizes);
        Self { layer_sizes: layer_sizes.to_vec(), data: vec![0.0; n] }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.layer_sizes
            .windows(2)
            .take(layer)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Row-major weight matrix of one layer, `n_out x n_in`.
    pub fn weight(&self, layer: usize) -> &[f64] {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let off = self.layer_offset(layer);
        &self.data[off..off + n_in * n_out]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let off = self.layer_offset(layer) + n_in * n_out;
        &self.data[off..off + n_out]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [f64] {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let off = self.layer_offset(layer);
        &mut self.data[off..off + n_in * n_out]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let off = self.layer_offset(layer) + n_in * n_out;
        &mut self.data[off..off + n_out]
    }
}

/// Glorot-uniform weights (bound sqrt(6/(n_in+n_out))), zero biases;
/// deterministic given the seed.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> MlpParams {
    let mut params = MlpParams::zeros(layer_sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in 0..layer_sizes.len() - 1 {
        let bound = (6.0 / (layer_sizes[l] + layer_sizes[l + 1]) as f64).sqrt();
        for w in params.weight_mut(l) {
            *w = rng.gen_range(-bound..bound);
        }
    }
    params
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let n4 = a.len() & !3;
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        acc[0] = ca[0].mul_add(cb[0], acc[0]);
        acc[1] = ca[1].mul_add(cb[1], acc[1]);
        acc[2] = ca[2].mul_add(cb[2], acc[2]);
        acc[3] = ca[3].mul_add(cb[3], acc[3]);
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in n4..a.len() {
        s = a[i].mul_add(b[i], s);
    }
    s
}

/// Network output for a 2D input (requires a single output unit).
pub fn forward(params: &MlpParams, r: Point2) -> f64 {
    assert_eq!(params.layer_sizes[0], 2, "input dimension must be 2");
    assert_eq!(*params.layer_sizes.last().unwrap(), 1, "output must be scalar");
    forward_outputs(params, &[r.x, r.y])[0]
}

/// General forward pass; returns the output layer.
pub fn forward_outputs(params: &MlpParams, input: &[f64]) -> Vec<f64> {
    assert_eq!(input.len(), params.layer_sizes[0]);
    let n_layers = params.n_layers();
    let mut a = input.to_vec();
    for l in 0..n_layers {
        let n_out = params.layer_sizes[l + 1];
        let w = params.weight(l);
        let b = params.bias(l);
        let mut z = vec![0.0; n_out];
        for i in 0..n_out {
            z[i] = dot(&w[i * a.len()..(i + 1) * a.len()], &a) + b[i];
        }
        if l + 1 < n_layers {
            for v in &mut z {
                *v = v.tanh();
            }
        }
        a = z;
    }
    a
}

/// Value, input gradient, and Laplacian (trace of the input Hessian) at `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoDerivs {
    pub value: f64,
    pub grad: [f64; 2],
    pub laplacian: f64,
}

/// Number of derivative channels carried alongside the value: d/dx, d/dy,
/// d2/dx2, d2/dy2.
const DCH: usize = 4;

/// Per-evaluation cache reused across forward/backward passes.
///
/// The value channel is stored contiguously (and computed with the same
/// blocked dot product as [`forward`], so the two agree bit for bit); the
/// four derivative channels are interleaved per neuron.
#[derive(Debug, Default)]
pub struct IoScratch {
    val: Vec<Vec<f64>>,
    der: Vec<Vec<f64>>,
    pre_val: Vec<Vec<f64>>,
    pre_der: Vec<Vec<f64>>,
    bar_val: Vec<Vec<f64>>,
    bar_der: Vec<Vec<f64>>,
    bar_pre_val: Vec<Vec<f64>>,
    bar_pre_der: Vec<Vec<f64>>,
}

fn channel_forward(params: &MlpParams, r: Point2, scratch: &mut IoScratch) {
    let sizes = &params.layer_sizes;
    let n_layers = params.n_layers();
    scratch.val.resize(sizes.len(), Vec::new());
    scratch.der.resize(sizes.len(), Vec::new());
    scratch.pre_val.resize(n_layers, Vec::new());
    scratch.pre_der.resize(n_layers, Vec::new());

    scratch.val[0].clear();
    scratch.val[0].extend_from_slice(&[r.x, r.y]);
    scratch.der[0].clear();
    scratch.der[0].extend_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

    for l in 0..n_layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = params.weight(l);
        let b = params.bias(l);

        let (val_in, val_rest) = scratch.val.split_at_mut(l + 1);
        let val_in = &val_in[l];
        let zv = &mut scratch.pre_val[l];
        zv.clear();
        zv.resize(n_out, 0.0);
        for i in 0..n_out {
            zv[i] = dot(&w[i * n_in..(i + 1) * n_in], val_in) + b[i];
        }

        let (der_in, der_rest) = scratch.der.split_at_mut(l + 1);
        let der_in = &der_in[l];
        let zd = &mut scratch.pre_der[l];
        zd.clear();
        zd.resize(n_out * DCH, 0.0);
        for i in 0..n_out {
            let row = &w[i * n_in..(i + 1) * n_in];
            let zdi = &mut zd[i * DCH..(i + 1) * DCH];
            for (j, &wij) in row.iter().enumerate() {
                let dj = &der_in[j * DCH..(j + 1) * DCH];
                zdi[0] = wij.mul_add(dj[0], zdi[0]);
                zdi[1] = wij.mul_add(dj[1], zdi[1]);
                zdi[2] = wij.mul_add(dj[2], zdi[2]);
                zdi[3] = wij.mul_add(dj[3], zdi[3]);
            }
        }

        let val_out = &mut val_rest[0];
        val_out.clear();
        let der_out = &mut der_rest[0];
        der_out.clear();
        if l + 1 < n_layers {
            val_out.resize(n_out, 0.0);
            der_out.resize(n_out * DCH, 0.0);
            for i in 0..n_out {
                let t = zv[i].tanh();
                let s = 1.0 - t * t;
                let zdi = &zd[i * DCH..(i + 1) * DCH];
                val_out[i] = t;
                let di = &mut der_out[i * DCH..(i + 1) * DCH];
                di[0] = s * zdi[0];
                di[1] = s * zdi[1];
                di[2] = s * zdi[2] - 2.0 * t * s * zdi[0] * zdi[0];
                di[3] = s * zdi[3] - 2.0 * t * s * zdi[1] * zdi[1];
            }
        } else {
            val_out.extend_from_slice(zv);
            der_out.extend_from_slice(zd);
        }
    }
}

/// Exact value, gradient and Laplacian by layer-wise propagation of the
/// derivative channels through the tanh layers.
pub fn forward_io_derivs(params: &MlpParams, r: Point2) -> IoDerivs {
    let mut scratch = IoScratch::default();
    forward_io_derivs_cached(params, r, &mut scratch)
}

pub fn forward_io_derivs_cached(params: &MlpParams, r: Point2, scratch: &mut IoScratch) -> IoDerivs {
    assert_eq!(params.layer_sizes[0], 2, "input dimension must be 2");
    assert_eq!(*params.layer_sizes.last().unwrap(), 1, "output must be scalar");
    channel_forward(params, r, scratch);
    let val = scratch.val.last().unwrap();
    let der = scratch.der.last().unwrap();
    IoDerivs { value: val[0], grad: [der[0], der[1]], laplacian: der[2] + der[3] }
}

/// Accumulates into `grads` the parameter gradient of
/// `bar_value * f(r) + bar_grad . grad f(r) + bar_laplacian * lap f(r)`,
/// reusing the forward channels stored in `scratch` by the last
/// `forward_io_derivs_cached` call at the same input.
pub fn backward_io_cached(
    params: &MlpParams,
    scratch: &mut IoScratch,
    bar_value: f64,
    bar_grad: [f64; 2],
    bar_laplacian: f64,
    grads: &mut [f64],
) {
    assert_eq!(grads.len(), params.n_params());
    let sizes = &params.layer_sizes;
    let n_layers = params.n_layers();
    scratch.bar_pre_val.resize(n_layers, Vec::new());
    scratch.bar_pre_der.resize(n_layers, Vec::new());
    scratch.bar_val.resize(sizes.len(), Vec::new());
    scratch.bar_der.resize(sizes.len(), Vec::new());

    {
        let bv = &mut scratch.bar_val[n_layers];
        bv.clear();
        bv.push(bar_value);
        let bd = &mut scratch.bar_der[n_layers];
        bd.clear();
        // laplacian = ddx + ddy, so both second-derivative channels share it
        bd.extend_from_slice(&[bar_grad[0], bar_grad[1], bar_laplacian, bar_laplacian]);
    }

    for l in (0..n_layers).rev() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        // adjoint through the activation: bar(act[l+1]) -> bar(pre[l])
        {
            let bzv = &mut scratch.bar_pre_val[l];
            bzv.clear();
            bzv.resize(n_out, 0.0);
            let bzd = &mut scratch.bar_pre_der[l];
            bzd.clear();
            bzd.resize(n_out * DCH, 0.0);
            let bav = &scratch.bar_val[l + 1];
            let bad = &scratch.bar_der[l + 1];
            if l + 1 < n_layers {
                let val = &scratch.val[l + 1];
                let zd = &scratch.pre_der[l];
                for i in 0..n_out {
                    let t = val[i];
                    let s = 1.0 - t * t;
                    let ts = t * s;
                    let s13 = s * (1.0 - 3.0 * t * t);
                    let zdi = &zd[i * DCH..(i + 1) * DCH];
                    let badi = &bad[i * DCH..(i + 1) * DCH];
                    bzv[i] = s * bav[i]
                        - 2.0 * ts * (zdi[0] * badi[0] + zdi[1] * badi[1])
                        - (2.0 * ts * zdi[2] + 2.0 * s13 * zdi[0] * zdi[0]) * badi[2]
                        - (2.0 * ts * zdi[3] + 2.0 * s13 * zdi[1] * zdi[1]) * badi[3];
                    let bzdi = &mut bzd[i * DCH..(i + 1) * DCH];
                    bzdi[0] = s * badi[0] - 4.0 * ts * zdi[0] * badi[2];
                    bzdi[1] = s * badi[1] - 4.0 * ts * zdi[1] * badi[3];
                    bzdi[2] = s * badi[2];
                    bzdi[3] = s * badi[3];
                }
            } else {
                bzv.copy_from_slice(bav);
                bzd.copy_from_slice(bad);
            }
        }

        // parameter gradients and adjoint of the layer input
        let bzv = &scratch.bar_pre_val[l];
        let bzd = &scratch.bar_pre_der[l];
        let val_in = &scratch.val[l];
        let der_in = &scratch.der[l];
        let w = params.weight(l);
        let w_off = params.layer_offset(l);
        let b_off = w_off + n_in * n_out;
        for i in 0..n_out {
            let gv = bzv[i];
            let bzdi = &bzd[i * DCH..(i + 1) * DCH];
            let g_row = &mut grads[w_off + i * n_in..w_off + (i + 1) * n_in];
            for j in 0..n_in {
                let dj = &der_in[j * DCH..(j + 1) * DCH];
                let mut acc = gv.mul_add(val_in[j], 0.0);
                acc = bzdi[0].mul_add(dj[0], acc);
                acc = bzdi[1].mul_add(dj[1], acc);
                acc = bzdi[2].mul_add(dj[2], acc);
                acc = bzdi[3].mul_add(dj[3], acc);
                g_row[j] += acc;
            }
            grads[b_off + i] += gv;
        }
        if l > 0 {
            let (bar_val_prev, _) = scratch.bar_val.split_at_mut(l + 1);
            let bav_prev = &mut bar_val_prev[l];
            bav_prev.clear();
            bav_prev.resize(n_in, 0.0);
            let (bar_der_prev, _) = scratch.bar_der.split_at_mut(l + 1);
            let bad_prev = &mut bar_der_prev[l];
            bad_prev.clear();
            bad_prev.resize(n_in * DCH, 0.0);
            for i in 0..n_out {
                let gv = bzv[i];
                let bzdi = &bzd[i * DCH..(i + 1) * DCH];
                let row = &w[i * n_in..(i + 1) * n_in];
                for j in 0..n_in {
                    let wij = row[j];
                    bav_prev[j] = wij.mul_add(gv, bav_prev[j]);
                    let bdj = &mut bad_prev[j * DCH..(j + 1) * DCH];
                    bdj[0] = wij.mul_add(bzdi[0], bdj[0]);
                    bdj[1] = wij.mul_add(bzdi[1], bdj[1]);
                    bdj[2] = wij.mul_add(bzdi[2], bdj[2]);
                    bdj[3] = wij.mul_add(bzdi[3], bdj[3]);
                }
            }
        }
    }
}

/// Value-only forward cache for the cheap backward pass.
#[derive(Debug, Default)]
pub struct ValueScratch {
    act: Vec<Vec<f64>>,
    bar: Vec<f64>,
    bar_next: Vec<f64>,
}

/// Forward pass that stores per-layer activations; returns the outputs.
pub fn forward_cached<'a>(params: &MlpParams, input: &[f64], scratch: &'a mut ValueScratch) -> &'a [f64] {
    assert_eq!(input.len(), params.layer_sizes[0]);
    let n_layers = params.n_layers();
    scratch.act.resize(params.layer_sizes.len(), Vec::new());
    scratch.act[0].clear();
    scratch.act[0].extend_from_slice(input);
    for l in 0..n_layers {
        let (n_in, n_out) = (params.layer_sizes[l], params.layer_sizes[l + 1]);
        let w = params.weight(l);
        let b = params.bias(l);
        let (before, after) = scratch.act.split_at_mut(l + 1);
        let a_in = &before[l];
        let a_out = &mut after[0];
        a_out.clear();
        a_out.resize(n_out, 0.0);
        for i in 0..n_out {
            a_out[i] = dot(&w[i * n_in..(i + 1) * n_in], a_in) + b[i];
        }
        if l + 1 < n_layers {
            for v in a_out.iter_mut() {
                *v = v.tanh();
            }
        }
    }
    scratch.act.last().unwrap()
}

/// Accumulates into `grads` the gradient of `upstream . outputs(r)` with
/// respect to all parameters, using activations cached by `forward_cached`.
pub fn backward_cached(
    params: &MlpParams,
    scratch: &mut ValueScratch,
    upstream: &[f64],
    grads: &mut [f64],
) {
    let n_layers = params.n_layers();
    assert_eq!(upstream.len(), *params.layer_sizes.last().unwrap());
    assert_eq!(grads.len(), params.n_params());
    scratch.bar.clear();
    scratch.bar.extend_from_slice(upstream);
    for l in (0..n_layers).rev() {
        let (n_in, n_out) = (params.layer_sizes[l], params.layer_sizes[l + 1]);
        let w_off = params.layer_offset(l);
        let b_off = w_off + n_in * n_out;
        let a_in = &scratch.act[l];
        for i in 0..n_out {
            let g = scratch.bar[i];
            let g_row = &mut grads[w_off + i * n_in..w_off + (i + 1) * n_in];
            for j in 0..n_in {
                g_row[j] = g.mul_add(a_in[j], g_row[j]);
            }
            grads[b_off + i] += g;
        }
        if l > 0 {
            let w = params.weight(l);
            scratch.bar_next.clear();
            scratch.bar_next.resize(n_in, 0.0);
            for i in 0..n_out {
                let g = scratch.bar[i];
                let row = &w[i * n_in..(i + 1) * n_in];
                for j in 0..n_in {
                    scratch.bar_next[j] = g.mul_add(row[j], scratch.bar_next[j]);
                }
            }
            // a_in = tanh(z_{l-1}), so act' = 1 - a_in^2
            for j in 0..n_in {
                let a = a_in[j];
                scratch.bar_next[j] *= 1.0 - a * a;
            }
            std::mem::swap(&mut scratch.bar, &mut scratch.bar_next);
        }
    }
}

/// Gradients of `upstream * f(r)` with respect to all parameters.
pub fn backprop(params: &MlpParams, r: Point2, upstream: f64) -> Vec<f64> {
    assert_eq!(params.layer_sizes[0], 2);
    assert_eq!(*params.layer_sizes.last().unwrap(), 1);
    let mut scratch = ValueScratch::default();
    forward_cached(params, &[r.x, r.y], &mut scratch);
    let mut grads = vec![0.0; params.n_params()];
    backward_cached(params, &mut scratch, &[upstream], &mut grads);
    grads
}

/// Adam optimizer state; moments share the flat layout of the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zero moments with the standard defaults beta1 = 0.9, beta2 = 0.999,
    /// eps = 1e-8.
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update with bias correction, in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<(), NeuralError> {
    if params.len() != state.first_moment.len() {
        return Err(NeuralError::ShapeMismatch { expected: state.first_moment.len(), got: params.len() });
    }
    if grads.len() != params.len() {
        return Err(NeuralError::ShapeMismatch { expected: params.len(), got: grads.len() });
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let corr1 = 1.0 - state.beta1.powi(t);
    let corr2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        let m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        let v = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / corr1;
        let v_hat = v / corr2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Writes the checkpoint: one ASCII header line with the layer sizes, then
/// the flat parameter array as little-endian f64.
pub fn save_params(params: &MlpParams, path: &Path) -> Result<(), NeuralError> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = params.layer_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(file, "{}", header.join(" "))?;
    for v in &params.data {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_params(path: &Path) -> Result<MlpParams, NeuralError> {
    let mut file = io::BufReader::new(std::fs::File::open(path)?);
    let mut header = String::new();
    file.read_line(&mut header)?;
    let layer_sizes: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| NeuralError::InvalidCheckpoint(format!("bad header: {e}")))?;
    if layer_sizes.len() < 2 {
        return Err(NeuralError::InvalidCheckpoint("header needs at least two layer sizes".into()));
    }
    let n = count_params(&layer_sizes);
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(NeuralError::InvalidCheckpoint(format!(
            "expected {} bytes of parameters, got {}",
            n * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(MlpParams { layer_sizes, data })
}
