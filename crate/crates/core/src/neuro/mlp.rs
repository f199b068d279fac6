//! Fully connected nets with tanh hidden activations, batched forward and
//! backward passes, and orthogonal initialization.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::{matmul_nn, matmul_nt, matmul_tn, Matrix};
use super::params::ParamSet;

/// One affine layer, `y = x W^T + b`, with gradient buffers alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub gw: Matrix,
    pub gb: Vec<f64>,
}

impl Dense {
    pub fn new(input: usize, output: usize, gain: f64, rng: &mut impl Rng) -> Self {
        Self {
            w: orthogonal(output, input, gain, rng),
            b: vec![0.0; output],
            gw: Matrix::zeros(output, input),
            gb: vec![0.0; output],
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = matmul_nt(x, &self.w);
        for r in 0..y.rows {
            for (v, b) in y.row_mut(r).iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        y
    }

    /// Accumulates parameter gradients and returns dL/dx.
    pub fn backward(&mut self, x: &Matrix, dout: &Matrix) -> Matrix {
        let gw = matmul_tn(dout, x);
        for (g, d) in self.gw.data.iter_mut().zip(&gw.data) {
            *g += d;
        }
        for r in 0..dout.rows {
            for (g, d) in self.gb.iter_mut().zip(dout.row(r)) {
                *g += d;
            }
        }
        matmul_nn(dout, &self.w)
    }
}

/// Orthogonal-ish init: Gaussian rows made orthonormal by Gram-Schmidt, then
/// scaled by `gain`. When there are more rows than columns the columns are
/// orthonormalized instead.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Matrix {
    if rows > cols {
        let t = orthogonal(cols, rows, gain, rng);
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, t.get(c, r));
            }
        }
        return m;
    }
    let mut m = Matrix::zeros(rows, cols);
    for v in &mut m.data {
        *v = StandardNormal.sample(rng);
    }
    for r in 0..rows {
        for prev in 0..r {
            let dot: f64 = m.row(r).iter().zip(m.row(prev)).map(|(a, b)| a * b).sum();
            let prev_row: Vec<f64> = m.row(prev).to_vec();
            for (v, p) in m.row_mut(r).iter_mut().zip(&prev_row) {
                *v -= dot * p;
            }
        }
        let norm: f64 = m.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
        // A degenerate draw is measure-zero; fall back to a unit vector.
        if norm < 1e-12 {
            let row = m.row_mut(r);
            row.iter_mut().for_each(|v| *v = 0.0);
            row[r % cols] = 1.0;
        } else {
            for v in m.row_mut(r) {
                *v /= norm;
            }
        }
    }
    for v in &mut m.data {
        *v *= gain;
    }
    m
}

/// Feed-forward net: tanh on every hidden layer, linear output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs captured during the forward pass (index i feeds layer i).
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub inputs: Vec<Matrix>,
}

pub const TANH_GAIN: f64 = 5.0 / 3.0;

impl Mlp {
    /// `dims` runs input -> hidden... -> output. The final layer is scaled
    /// down by `final_scale` so initial outputs start near zero.
    pub fn new(dims: &[usize], final_scale: f64, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for i in 0..dims.len() - 1 {
            let gain = if i + 2 == dims.len() { final_scale } else { TANH_GAIN };
            layers.push(Dense::new(dims[i], dims[i + 1], gain, rng));
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.rows
    }

    pub fn forward(&self, x: &Matrix) -> (Matrix, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            h = layer.forward(&h);
            if i + 1 < self.layers.len() {
                h.data.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        (h, MlpCache { inputs })
    }

    /// Backward through the whole stack; `activations` are rebuilt from the
    /// cached inputs. Returns dL/dx.
    pub fn backward(&mut self, cache: &MlpCache, dout: &Matrix) -> Matrix {
        let n = self.layers.len();
        let mut grad = dout.clone();
        for i in (0..n).rev() {
            if i + 1 < n {
                // The input cached for layer i+1 is tanh(pre-activation of
                // layer i); its derivative is 1 - y^2.
                let y = &cache.inputs[i + 1];
                for (g, &act) in grad.data.iter_mut().zip(&y.data) {
                    *g *= 1.0 - act * act;
                }
            }
            grad = self.layers[i].backward(&cache.inputs[i], &grad);
        }
        grad
    }
}

impl ParamSet for Mlp {
    fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        for layer in &mut self.layers {
            f(&mut layer.w.data, &mut layer.gw.data);
            f(&mut layer.b, &mut layer.gb);
        }
    }
}
