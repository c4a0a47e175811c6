//! Dense feed-forward networks with hand-written reverse mode.
//!
//! Hidden layers use ReLU, the output layer is linear. Weights are stored
//! row-major as `outputs x inputs`.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Layer activations from one forward pass; `activations[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub params: MlpParams,
    pub input: Vec<f64>,
}

impl MlpParams {
    /// Zero-initialized network with the given layer widths.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)`.
    pub fn init(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(dims)?;
        for layer in &mut p.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(p)
    }

    /// Input, hidden and output widths.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Parameters flattened in layer order, weights before bias.
    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape("flat parameters", self.num_params(), flat.len()));
        }
        for (p, v) in self.iter_mut().zip(flat) {
            *p = *v;
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    fn check_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(context, self.num_params(), other.num_params()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Self, scale: f64) -> Result<()> {
        self.check_shape(other, "add_scaled")?;
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::shape("mlp input", self.input_dim(), input.len()));
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(&activations[l], &mut out);
            if l != last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            activations.push(out);
        }
        let output = activations[last + 1].clone();
        Ok((output, ForwardCache { activations }))
    }

    /// Forward pass without keeping a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::shape("mlp input", self.input_dim(), input.len()));
        }
        let last = self.layers.len() - 1;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if l != last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        grads: &mut MlpParams,
    ) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::shape("output gradient", self.output_dim(), output_grad.len()));
        }
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                "forward cache",
                self.layers.len() + 1,
                cache.activations.len(),
            ));
        }
        self.check_shape(grads, "gradient buffer")?;
        let last = self.layers.len() - 1;
        let mut g = output_grad.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let out = &cache.activations[l + 1];
            if l != last {
                for (gi, &a) in g.iter_mut().zip(out) {
                    if a <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let x = &cache.activations[l];
            let gl = &mut grads.layers[l];
            let mut g_in = vec![0.0; layer.inputs];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                gl.bias[o] += go;
                let row = o * layer.inputs;
                let gw = &mut gl.weights[row..row + layer.inputs];
                let w = &layer.weights[row..row + layer.inputs];
                for i in 0..layer.inputs {
                    gw[i] += go * x[i];
                    g_in[i] += go * w[i];
                }
            }
            g = g_in;
        }
        Ok(g)
    }

    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<GradientBundle> {
        let mut params = self.zeros_like();
        let input = self.backward_into(cache, output_grad, &mut params)?;
        Ok(GradientBundle { params, input })
    }

    /// `self <- tau * online + (1 - tau) * self`
    pub fn soft_update(&mut self, online: &Self, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Config(format!("soft update weight {tau} not in (0, 1]")));
        }
        self.check_shape(online, "soft_update")?;
        for (t, o) in self.iter_mut().zip(online.iter()) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }

    /// Snapshot layout, all little-endian 8-byte words: version, layer count,
    /// `layer count + 1` widths, then every parameter as f64 in layer order
    /// (weights row-major, then bias).
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.dims();
        let mut out = Vec::with_capacity(8 * (2 + dims.len() + self.num_params()));
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u64).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in self.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::Checkpoint("length is not a multiple of 8".into()));
        }
        let mut words = bytes.chunks_exact(8).map(|c| {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            b
        });
        let mut next_u64 = |what: &str| {
            words
                .next()
                .map(u64::from_le_bytes)
                .ok_or_else(|| Error::Checkpoint(format!("truncated before {what}")))
        };
        let version = next_u64("version")?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let layers = next_u64("layer count")? as usize;
        if layers == 0 || layers > 64 {
            return Err(Error::Checkpoint(format!("implausible layer count {layers}")));
        }
        let dims = (0..=layers)
            .map(|_| next_u64("dims").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut p = Self::zeros(&dims).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let expected = 8 * (2 + dims.len() + p.num_params());
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let body = &bytes[8 * (2 + dims.len())..];
        for (v, c) in p.iter_mut().zip(body.chunks_exact(8)) {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            *v = f64::from_le_bytes(b);
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: MlpParams,
    v: MlpParams,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, lr: f64) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` using `grads`.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpParams) -> Result<()> {
        params.check_shape(grads, "adam gradients")?;
        params.check_shape(&self.m, "adam moments")?;
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let it = params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()));
        for ((p, &g), (m, v)) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
