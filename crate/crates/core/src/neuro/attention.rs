//! Multi-head scaled dot-product attention over a set of agent feature
//! vectors. Each agent attends to every *other* agent (the diagonal is
//! masked), which keeps the aggregation permutation-equivariant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{matmul_nn, matmul_nt, matmul_tn, Matrix};
use super::mlp::Dense;
use super::params::ParamSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiHeadAttention {
    pub d_key: usize,
    pub d_val: usize,
    pub wq: Vec<Dense>,
    pub wk: Vec<Dense>,
    pub wv: Vec<Dense>,
    /// Output projection, heads * d_val -> out_dim.
    pub wo: Dense,
}

#[derive(Debug, Clone)]
pub struct AttnCache {
    input: Matrix,
    q: Vec<Matrix>,
    k: Vec<Matrix>,
    v: Vec<Matrix>,
    /// Row-stochastic attention weights with a zero diagonal, one per head.
    a: Vec<Matrix>,
    concat: Matrix,
}

impl MultiHeadAttention {
    pub fn new(
        feat_dim: usize,
        heads: usize,
        d_key: usize,
        d_val: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let proj = |rng: &mut _| Dense::new(feat_dim, d_key, 1.0, rng);
        Self {
            d_key,
            d_val,
            wq: (0..heads).map(|_| proj(rng)).collect(),
            wk: (0..heads).map(|_| proj(rng)).collect(),
            wv: (0..heads).map(|_| Dense::new(feat_dim, d_val, 1.0, rng)).collect(),
            wo: Dense::new(heads * d_val, out_dim, 1.0, rng),
        }
    }

    pub fn heads(&self) -> usize {
        self.wq.len()
    }

    pub fn out_dim(&self) -> usize {
        self.wo.w.rows
    }

    /// `features`: one row per agent. Returns one aggregated row per agent.
    pub fn forward(&self, features: &Matrix) -> (Matrix, AttnCache) {
        let n = features.rows;
        let heads = self.heads();
        let mut q = Vec::with_capacity(heads);
        let mut k = Vec::with_capacity(heads);
        let mut v = Vec::with_capacity(heads);
        let mut a = Vec::with_capacity(heads);
        let mut concat = Matrix::zeros(n, heads * self.d_val);
        let scale = 1.0 / (self.d_key as f64).sqrt();
        for h in 0..heads {
            let qh = self.wq[h].forward(features);
            let kh = self.wk[h].forward(features);
            let vh = self.wv[h].forward(features);
            let mut scores = matmul_nt(&qh, &kh);
            scores.data.iter_mut().for_each(|s| *s *= scale);
            let ah = masked_softmax(&scores);
            let out = matmul_nn(&ah, &vh);
            for i in 0..n {
                concat.row_mut(i)[h * self.d_val..(h + 1) * self.d_val]
                    .copy_from_slice(out.row(i));
            }
            q.push(qh);
            k.push(kh);
            v.push(vh);
            a.push(ah);
        }
        let out = self.wo.forward(&concat);
        (out, AttnCache { input: features.clone(), q, k, v, a, concat })
    }

    /// Accumulates parameter gradients and returns dL/dfeatures.
    pub fn backward(&mut self, cache: &AttnCache, dout: &Matrix) -> Matrix {
        let n = cache.input.rows;
        let heads = self.heads();
        let scale = 1.0 / (self.d_key as f64).sqrt();
        let d_concat = self.wo.backward(&cache.concat, dout);
        let mut d_features = Matrix::zeros(n, cache.input.cols);
        for h in 0..heads {
            let mut d_head = Matrix::zeros(n, self.d_val);
            for i in 0..n {
                d_head
                    .row_mut(i)
                    .copy_from_slice(&d_concat.row(i)[h * self.d_val..(h + 1) * self.d_val]);
            }
            let ah = &cache.a[h];
            let dv = matmul_tn(ah, &d_head);
            let da = matmul_nt(&d_head, &cache.v[h]);
            // Row-wise softmax backward; the zero diagonal stays zero.
            let mut ds = Matrix::zeros(n, n);
            for i in 0..n {
                let dot: f64 = ah.row(i).iter().zip(da.row(i)).map(|(a, d)| a * d).sum();
                for j in 0..n {
                    ds.set(i, j, ah.get(i, j) * (da.get(i, j) - dot) * scale);
                }
            }
            let dq = matmul_nn(&ds, &cache.k[h]);
            let dk = matmul_tn(&ds, &cache.q[h]);
            for dx in [
                self.wq[h].backward(&cache.input, &dq),
                self.wk[h].backward(&cache.input, &dk),
                self.wv[h].backward(&cache.input, &dv),
            ] {
                for (df, d) in d_features.data.iter_mut().zip(&dx.data) {
                    *df += d;
                }
            }
        }
        d_features
    }
}

/// Row softmax with the diagonal masked out. A single-row input (one agent,
/// nothing to attend to) yields all zeros.
fn masked_softmax(scores: &Matrix) -> Matrix {
    let n = scores.rows;
    let mut out = Matrix::zeros(n, n);
    if n < 2 {
        return out;
    }
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            if j != i {
                max = max.max(scores.get(i, j));
            }
        }
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                let e = (scores.get(i, j) - max).exp();
                out.set(i, j, e);
                sum += e;
            }
        }
        for j in 0..n {
            if j != i {
                out.set(i, j, out.get(i, j) / sum);
            }
        }
    }
    out
}

impl ParamSet for MultiHeadAttention {
    fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        for layer in
            self.wq.iter_mut().chain(self.wk.iter_mut()).chain(self.wv.iter_mut())
        {
            f(&mut layer.w.data, &mut layer.gw.data);
            f(&mut layer.b, &mut layer.gb);
        }
        f(&mut self.wo.w.data, &mut self.wo.gw.data);
        f(&mut self.wo.b, &mut self.wo.gb);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuro::gradcheck::max_rel_grad_error;
    use crate::neuro::params::zero_grads;
    use crate::rng::{stream, StreamTag};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn features(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = stream(seed, StreamTag::Init, 0, 0, 7);
        Matrix::from_rows(
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        )
    }

    #[test]
    fn attention_rows_are_stochastic_off_diagonal() {
        let mut rng = stream(1, StreamTag::Init, 0, 0, 0);
        let attn = MultiHeadAttention::new(5, 4, 3, 3, 6, &mut rng);
        let f = features(6, 5, 2);
        let (out, cache) = attn.forward(&f);
        assert_eq!((out.rows, out.cols), (6, 6));
        for a in &cache.a {
            for i in 0..6 {
                assert_eq!(a.get(i, i), 0.0);
                let sum: f64 = a.row(i).iter().sum();
                assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = stream(3, StreamTag::Init, 0, 0, 0);
        let attn = MultiHeadAttention::new(4, 2, 3, 3, 5, &mut rng);
        let f = features(5, 4, 4);
        let perm = [3usize, 0, 4, 1, 2];
        let permuted =
            Matrix::from_rows(perm.iter().map(|&i| f.row(i).to_vec()).collect());
        let (out, _) = attn.forward(&f);
        let (out_p, _) = attn.forward(&permuted);
        for (pos, &src) in perm.iter().enumerate() {
            for c in 0..5 {
                assert_relative_eq!(out_p.get(pos, c), out.get(src, c), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn single_agent_attends_to_nothing() {
        let mut rng = stream(5, StreamTag::Init, 0, 0, 0);
        let attn = MultiHeadAttention::new(4, 2, 3, 3, 5, &mut rng);
        let f = features(1, 4, 6);
        let (out, cache) = attn.forward(&f);
        assert!(cache.a.iter().all(|a| a.data.iter().all(|&v| v == 0.0)));
        // Output is the projection bias only.
        for c in 0..5 {
            assert_relative_eq!(out.get(0, c), attn.wo.b[c], max_relative = 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = stream(7, StreamTag::Init, 0, 0, 0);
        let mut attn = MultiHeadAttention::new(3, 2, 2, 2, 3, &mut rng);
        let f = features(4, 3, 8);
        let loss = |net: &mut MultiHeadAttention| {
            let (y, _) = net.forward(&f);
            y.data.iter().map(|v| v * v).sum::<f64>()
        };
        zero_grads(&mut attn);
        let (y, cache) = attn.forward(&f);
        let dout = y.map(|v| 2.0 * v);
        attn.backward(&cache, &dout);
        let err = max_rel_grad_error(&mut attn, loss, 1e-5);
        assert!(err < 1e-6, "max relative gradient error {err}");
    }

    #[test]
    fn feature_gradient_matches_central_differences() {
        let mut rng = stream(9, StreamTag::Init, 0, 0, 0);
        let mut attn = MultiHeadAttention::new(3, 2, 2, 2, 3, &mut rng);
        let f = features(4, 3, 10);
        zero_grads(&mut attn);
        let (y, cache) = attn.forward(&f);
        let df = attn.backward(&cache, &y.map(|v| 2.0 * v));
        let h = 1e-6;
        for r in 0..4 {
            for c in 0..3 {
                let mut hi = f.clone();
                let mut lo = f.clone();
                hi.set(r, c, f.get(r, c) + h);
                lo.set(r, c, f.get(r, c) - h);
                let lhi: f64 = attn.forward(&hi).0.data.iter().map(|v| v * v).sum();
                let llo: f64 = attn.forward(&lo).0.data.iter().map(|v| v * v).sum();
                let numeric = (lhi - llo) / (2.0 * h);
                assert_relative_eq!(df.get(r, c), numeric, max_relative = 1e-5);
            }
        }
    }
}
