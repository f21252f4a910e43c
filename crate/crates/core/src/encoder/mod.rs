//! Message-passing graph network with a scalar design-value head.
//!
//! ```text
//! h0_v     = tanh(W_enc x_v + b_enc)
//! m_vu     = tanh(W_msg [h_v; h_u; e_vu] + b_msg)      for each neighbour u
//! h'_v     = tanh(W_upd [h_v; mean_u m_vu] + b_upd)    K rounds, shared weights
//! g        = mean_v h_v
//! V(G)     = w_out . g + b_out                          (standardized units)
//! ```
//!
//! All parameters live in one flat vector so training, clipping, L2 and the
//! finite-difference check can treat them uniformly.

mod io;
mod train;

use rand::Rng;

use crate::design::{validate, DesignGraph};
use crate::error::Result;

pub use io::{load_net, read_net, save_net, write_net};
pub use train::{grad_check, train, train_final, Dataset, TrainConfig};

/// `[length / 0.1 m, fingertip one-hot (4), depth / 4, open flag]`
pub const NODE_FEATURES: usize = 7;
pub const EDGE_FEATURES: usize = 1;
pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_ROUNDS: usize = 3;

const LENGTH_UNIT_M: f64 = 0.1;

/// Node features and adjacency of one design, ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub features: Vec<[f64; NODE_FEATURES]>,
    /// Per node: `(neighbour, edge feature)`.
    pub neighbours: Vec<Vec<(usize, f64)>>,
}

impl GraphInput {
    pub fn from_design(design: &DesignGraph) -> GraphInput {
        let (nodes, edges) = design.nodes_and_edges();
        let features = nodes
            .iter()
            .map(|n| {
                let mut x = [0.0; NODE_FEATURES];
                if !n.open {
                    x[0] = n.length_m / LENGTH_UNIT_M;
                    if let Some(t) = n.fingertip {
                        x[1 + t.index()] = 1.0;
                    }
                    x[5] = n.depth as f64 / 4.0;
                } else {
                    x[6] = 1.0;
                }
                x
            })
            .collect();
        let mut neighbours = vec![Vec::new(); nodes.len()];
        for e in edges {
            let flag = if e.base_joint { 1.0 } else { 0.0 };
            neighbours[e.parent].push((e.child, flag));
            neighbours[e.child].push((e.parent, flag));
        }
        GraphInput { features, neighbours }
    }

    pub fn node_count(&self) -> usize {
        self.features.len()
    }

    /// Same graph with node indices relabelled by `perm` (new index of old node i is perm[i]).
    pub fn permuted(&self, perm: &[usize]) -> GraphInput {
        let n = self.node_count();
        let mut features = vec![[0.0; NODE_FEATURES]; n];
        let mut neighbours = vec![Vec::new(); n];
        for i in 0..n {
            features[perm[i]] = self.features[i];
            neighbours[perm[i]] = self.neighbours[i].iter().map(|&(u, e)| (perm[u], e)).collect();
        }
        GraphInput { features, neighbours }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    hidden: usize,
    enc_w: usize,
    enc_b: usize,
    msg_w: usize,
    msg_b: usize,
    upd_w: usize,
    upd_b: usize,
    out_w: usize,
    out_b: usize,
    len: usize,
}

impl Layout {
    fn new(h: usize) -> Layout {
        let enc_w = 0;
        let enc_b = enc_w + h * NODE_FEATURES;
        let msg_w = enc_b + h;
        let msg_b = msg_w + h * Self::msg_in(h);
        let upd_w = msg_b + h;
        let upd_b = upd_w + h * 2 * h;
        let out_w = upd_b + h;
        let out_b = out_w + h;
        Layout { hidden: h, enc_w, enc_b, msg_w, msg_b, upd_w, upd_b, out_w, out_b, len: out_b + 1 }
    }

    fn msg_in(h: usize) -> usize {
        2 * h + EDGE_FEATURES
    }

    /// Ranges holding weight matrices (regularized); biases are excluded.
    fn weight_ranges(&self) -> [std::ops::Range<usize>; 4] {
        [self.enc_w..self.enc_b, self.msg_w..self.msg_b, self.upd_w..self.upd_b, self.out_w..self.out_b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNet {
    layout: Layout,
    pub rounds: usize,
    pub params: Vec<f64>,
    /// Affine map from standardized outputs back to score units.
    pub target_mean: f64,
    pub target_std: f64,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Default)]
struct Trace {
    /// `h[k]` is `n x H`, k = 0..=rounds
    h: Vec<Vec<f64>>,
    /// messages per round, in neighbour-list order, each `H`
    m: Vec<Vec<f64>>,
    /// aggregated messages per round, `n x H`
    a: Vec<Vec<f64>>,
    g: Vec<f64>,
}

/// `tanh` through one `exp`; accurate to a few ulps away from 0, where the
/// absolute error stays near machine epsilon.
#[inline]
fn tanh(x: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn matvec_tanh(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = tanh(b[r] + dot(&w[r * cols..(r + 1) * cols], x));
    }
}

/// `out[v] = W[:, cols] h_v` for every node, where `cols` selects a block of
/// columns of the row-major `w` with `stride` columns.
fn project(w: &[f64], stride: usize, offset: usize, hs: &[f64], h: usize, out: &mut Vec<f64>) {
    out.clear();
    for hv in hs.chunks_exact(h) {
        for r in 0..h {
            let start = r * stride + offset;
            out.push(dot(&w[start..start + h], hv));
        }
    }
}

/// `grad_w += dz (x) x`, `grad_b += dz`, `dx += W^T dz`.
fn backprop_layer(w: &[f64], x: &[f64], dz: &[f64], gw: &mut [f64], gb: &mut [f64], dx: Option<&mut [f64]>) {
    let cols = x.len();
    for (r, &d) in dz.iter().enumerate() {
        gb[r] += d;
        if d == 0.0 {
            continue;
        }
        let grow = &mut gw[r * cols..(r + 1) * cols];
        for (g, xi) in grow.iter_mut().zip(x) {
            *g += d * xi;
        }
    }
    if let Some(dx) = dx {
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &w[r * cols..(r + 1) * cols];
            for (o, wi) in dx.iter_mut().zip(row) {
                *o += d * wi;
            }
        }
    }
}

impl GraphNet {
    /// All-zero parameters: every embedding is zero and the value is the readout bias.
    pub fn zeros(hidden: usize, rounds: usize) -> GraphNet {
        let layout = Layout::new(hidden);
        GraphNet { layout, rounds, params: vec![0.0; layout.len], target_mean: 0.0, target_std: 1.0 }
    }

    /// Uniform initialization in `±1/sqrt(fan_in)`, zero biases.
    pub fn random<R: Rng + ?Sized>(hidden: usize, rounds: usize, rng: &mut R) -> GraphNet {
        let mut net = GraphNet::zeros(hidden, rounds);
        let l = net.layout;
        let fill = |p: &mut [f64], fan_in: usize, rng: &mut R| {
            let s = 1.0 / (fan_in as f64).sqrt();
            p.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
        };
        fill(&mut net.params[l.enc_w..l.enc_b], NODE_FEATURES, rng);
        fill(&mut net.params[l.msg_w..l.msg_b], Layout::msg_in(hidden), rng);
        fill(&mut net.params[l.upd_w..l.upd_b], 2 * hidden, rng);
        fill(&mut net.params[l.out_w..l.out_b], hidden, rng);
        net
    }

    pub fn new_default<R: Rng + ?Sized>(rng: &mut R) -> GraphNet {
        GraphNet::random(DEFAULT_HIDDEN, DEFAULT_ROUNDS, rng)
    }

    pub fn hidden(&self) -> usize {
        self.layout.hidden
    }

    pub fn param_count(&self) -> usize {
        self.layout.len
    }

    pub fn readout_bias(&self) -> f64 {
        self.params[self.layout.out_b]
    }

    pub(crate) fn weight_sq_norm(&self) -> f64 {
        self.layout
            .weight_ranges()
            .into_iter()
            .flat_map(|r| self.params[r].iter())
            .map(|x| x * x)
            .sum()
    }

    pub(crate) fn add_weight_decay_grad(&self, l2: f64, grad: &mut [f64]) {
        for r in self.layout.weight_ranges() {
            for i in r {
                grad[i] += 2.0 * l2 * self.params[i];
            }
        }
    }

    fn forward(&self, g: &GraphInput, trace: &mut Trace) -> f64 {
        let l = self.layout;
        let h = l.hidden;
        let n = g.node_count();
        let p = &self.params;
        trace.h.resize_with(self.rounds + 1, Vec::new);
        trace.a.resize_with(self.rounds, Vec::new);
        trace.m.resize_with(self.rounds, Vec::new);

        let h0 = &mut trace.h[0];
        h0.clear();
        h0.resize(n * h, 0.0);
        for (v, x) in g.features.iter().enumerate() {
            matvec_tanh(&p[l.enc_w..l.enc_b], &p[l.enc_b..l.msg_w], x, &mut h0[v * h..(v + 1) * h]);
        }

        let stride = Layout::msg_in(h);
        let w_msg = &p[l.msg_w..l.msg_b];
        let b_msg = &p[l.msg_b..l.upd_w];
        let (mut own, mut other) = (Vec::new(), Vec::new());
        let mut upd_in = vec![0.0; 2 * h];
        for k in 0..self.rounds {
            let (before, after) = trace.h.split_at_mut(k + 1);
            let hk = &before[k];
            let hn = &mut after[0];
            hn.clear();
            hn.resize(n * h, 0.0);
            let mk = &mut trace.m[k];
            mk.clear();
            let ak = &mut trace.a[k];
            ak.clear();
            ak.resize(n * h, 0.0);
            project(w_msg, stride, 0, hk, h, &mut own);
            project(w_msg, stride, h, hk, h, &mut other);
            for v in 0..n {
                let agg = &mut ak[v * h..(v + 1) * h];
                let deg = g.neighbours[v].len();
                for &(u, e) in &g.neighbours[v] {
                    for i in 0..h {
                        let z = own[v * h + i] + other[u * h + i] + w_msg[i * stride + 2 * h] * e + b_msg[i];
                        let m = tanh(z);
                        agg[i] += m;
                        mk.push(m);
                    }
                }
                if deg > 0 {
                    let inv = 1.0 / deg as f64;
                    agg.iter_mut().for_each(|s| *s *= inv);
                }
                upd_in[..h].copy_from_slice(&hk[v * h..(v + 1) * h]);
                upd_in[h..].copy_from_slice(agg);
                matvec_tanh(&p[l.upd_w..l.upd_b], &p[l.upd_b..l.out_w], &upd_in, &mut hn[v * h..(v + 1) * h]);
            }
        }

        let last = &trace.h[self.rounds];
        trace.g.clear();
        trace.g.resize(h, 0.0);
        for v in 0..n {
            for (gi, hv) in trace.g.iter_mut().zip(&last[v * h..(v + 1) * h]) {
                *gi += hv;
            }
        }
        let inv_n = 1.0 / n as f64;
        trace.g.iter_mut().for_each(|x| *x *= inv_n);
        let w_out = &p[l.out_w..l.out_b];
        p[l.out_b] + w_out.iter().zip(&trace.g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Accumulates `d_out * dV/dθ` into `grad`.
    fn backward(&self, g: &GraphInput, trace: &Trace, d_out: f64, grad: &mut [f64]) {
        let l = self.layout;
        let h = l.hidden;
        let n = g.node_count();
        let p = &self.params;

        grad[l.out_b] += d_out;
        for i in 0..h {
            grad[l.out_w + i] += d_out * trace.g[i];
        }
        let inv_n = 1.0 / n as f64;
        let mut dh: Vec<f64> = (0..n * h).map(|i| d_out * p[l.out_w + i % h] * inv_n).collect();

        let (gw_part, rest) = grad.split_at_mut(l.msg_w);
        let (g_enc_w, g_enc_b) = gw_part.split_at_mut(l.enc_b);
        let (g_msg, rest) = rest.split_at_mut(l.upd_w - l.msg_w);
        let (g_msg_w, g_msg_b) = g_msg.split_at_mut(l.msg_b - l.msg_w);
        let (g_upd, _) = rest.split_at_mut(l.out_w - l.upd_w);
        let (g_upd_w, g_upd_b) = g_upd.split_at_mut(l.upd_b - l.upd_w);

        let stride = Layout::msg_in(h);
        let w_msg = &p[l.msg_w..l.msg_b];
        let mut upd_in = vec![0.0; 2 * h];
        let mut d_upd_in = vec![0.0; 2 * h];
        let mut dz = vec![0.0; h];
        // per node: summed message pre-activation gradients as sender-side and neighbour-side input
        let mut d_own = vec![0.0; n * h];
        let mut d_other = vec![0.0; n * h];
        for k in (0..self.rounds).rev() {
            let hk = &trace.h[k];
            let hn = &trace.h[k + 1];
            let ak = &trace.a[k];
            let mk = &trace.m[k];
            let mut dprev = vec![0.0; n * h];
            d_own.iter_mut().for_each(|x| *x = 0.0);
            d_other.iter_mut().for_each(|x| *x = 0.0);
            let mut msg_offset = 0;
            for v in 0..n {
                for i in 0..h {
                    let y = hn[v * h + i];
                    dz[i] = dh[v * h + i] * (1.0 - y * y);
                }
                upd_in[..h].copy_from_slice(&hk[v * h..(v + 1) * h]);
                upd_in[h..].copy_from_slice(&ak[v * h..(v + 1) * h]);
                d_upd_in.iter_mut().for_each(|x| *x = 0.0);
                backprop_layer(&p[l.upd_w..l.upd_b], &upd_in, &dz, g_upd_w, g_upd_b, Some(&mut d_upd_in));
                for i in 0..h {
                    dprev[v * h + i] += d_upd_in[i];
                }
                let deg = g.neighbours[v].len();
                if deg == 0 {
                    continue;
                }
                let inv = 1.0 / deg as f64;
                for &(u, e) in &g.neighbours[v] {
                    let m = &mk[msg_offset..msg_offset + h];
                    msg_offset += h;
                    for i in 0..h {
                        let d = d_upd_in[h + i] * inv * (1.0 - m[i] * m[i]);
                        d_own[v * h + i] += d;
                        d_other[u * h + i] += d;
                        g_msg_w[i * stride + 2 * h] += d * e;
                        g_msg_b[i] += d;
                    }
                }
            }
            for v in 0..n {
                let hv = &hk[v * h..(v + 1) * h];
                let dv = &mut dprev[v * h..(v + 1) * h];
                for r in 0..h {
                    let (a, b) = (d_own[v * h + r], d_other[v * h + r]);
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    let row = r * stride;
                    for j in 0..h {
                        g_msg_w[row + j] += a * hv[j];
                        g_msg_w[row + h + j] += b * hv[j];
                        dv[j] += a * w_msg[row + j] + b * w_msg[row + h + j];
                    }
                }
            }
            dh = dprev;
        }

        let h0 = &trace.h[0];
        for (v, x) in g.features.iter().enumerate() {
            for i in 0..h {
                let y = h0[v * h + i];
                dz[i] = dh[v * h + i] * (1.0 - y * y);
            }
            backprop_layer(&p[l.enc_w..l.enc_b], x, &dz, g_enc_w, g_enc_b, None);
        }
    }

    /// Output in standardized units for a prepared graph.
    pub fn forward_input(&self, g: &GraphInput) -> f64 {
        self.forward(g, &mut Trace::default())
    }

    /// Pooled graph embedding for a prepared graph.
    pub fn embed_input(&self, g: &GraphInput) -> Vec<f64> {
        let mut t = Trace::default();
        self.forward(g, &mut t);
        t.g
    }

    /// Loss `(V(G) - target)^2` in standardized units and its gradient.
    pub(crate) fn loss_and_grad(&self, g: &GraphInput, target: f64, grad: &mut [f64]) -> f64 {
        let mut t = Trace::default();
        let y = self.forward(g, &mut t);
        let r = y - target;
        self.backward(g, &t, 2.0 * r, grad);
        r * r
    }

    pub fn encode(&self, design: &DesignGraph) -> Result<Vec<f64>> {
        validate(design).into_result()?;
        Ok(self.embed_input(&GraphInput::from_design(design)))
    }

    /// Prediction in standardized units (before the inverse target transform).
    pub fn predict_standardized(&self, design: &DesignGraph) -> Result<f64> {
        validate(design).into_result()?;
        Ok(self.forward_input(&GraphInput::from_design(design)))
    }

    pub fn predict_value(&self, design: &DesignGraph) -> Result<f64> {
        Ok(self.target_mean + self.target_std * self.predict_standardized(design)?)
    }
}

pub fn encode(net: &GraphNet, design: &DesignGraph) -> Result<Vec<f64>> {
    net.encode(design)
}

pub fn predict_value(net: &GraphNet, design: &DesignGraph) -> Result<f64> {
    net.predict_value(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::test_support::symmetric;
    use crate::design::FingertipType::*;
    use crate::design::{canonical_form, FingertipType};
    use crate::grammar::{generate_hand, GenParams};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_design() -> DesignGraph {
        symmetric(&[(3, 4, 7, Standard), (2, 1, 9, Thin), (3, 5, 5, Rounded)])
    }

    #[test]
    fn zero_net_zero_embedding() {
        let net = GraphNet::zeros(16, 3);
        let e = net.encode(&sample_design()).unwrap();
        assert_eq!(e.len(), 16);
        assert!(e.iter().all(|&x| x == 0.0));
        let mut biased = net.clone();
        let l = biased.layout;
        biased.params[l.out_b] = 0.25;
        assert_eq!(biased.predict_value(&sample_design()).unwrap(), 0.25);
    }

    #[test]
    fn listing_order_does_not_change_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = GraphNet::random(16, 3, &mut rng);
        let d = sample_design();
        let mut r = d.clone();
        r.fingers.reverse();
        r.palm.slot_angles.reverse();
        let (a, b) = (net.encode(&d).unwrap(), net.encode(&r).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let canon = (net.encode(&canonical_form(&d)).unwrap(), net.encode(&canonical_form(&r)).unwrap());
        assert_eq!(canon.0, canon.1);
    }

    #[test]
    fn node_relabelling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = GraphNet::random(16, 3, &mut rng);
        let params = GenParams { finger_counts: vec![3], joint_counts: vec![2], ..GenParams::default() };
        for _ in 0..50 {
            let d = generate_hand(&params, &mut rng).unwrap();
            let g = GraphInput::from_design(&d);
            assert!(g.node_count() <= 8);
            let mut perm: Vec<usize> = (0..g.node_count()).collect();
            perm.shuffle(&mut rng);
            let (a, b) = (net.embed_input(&g), net.embed_input(&g.permuted(&perm)));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fingertip_changes_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = GraphNet::random(16, 3, &mut rng);
        let a = sample_design();
        let mut b = a.clone();
        b.fingers[0].fingertip = FingertipType::Wedged;
        assert_ne!(net.encode(&a).unwrap(), net.encode(&b).unwrap());
    }

    #[test]
    fn invalid_design_rejected() {
        let net = GraphNet::zeros(4, 1);
        let bad = symmetric(&[(3, 1, 1, Standard); 6]);
        assert!(net.encode(&bad).is_err());
        assert!(net.predict_value(&bad).is_err());
    }

    #[test]
    fn zero_net_zero_target_is_stationary() {
        let net = GraphNet::zeros(8, 3);
        let g = GraphInput::from_design(&sample_design());
        let mut grad = vec![0.0; net.param_count()];
        let loss = net.loss_and_grad(&g, 0.0, &mut grad);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&x| x == 0.0));
    }
}
