//! Recorded-tape reverse-mode differentiation over dense matrix ops.
//!
//! A forward pass appends nodes (op + value) to the tape; `backward` walks
//! the tape in reverse, pushing the loss gradient through each op and
//! accumulating into the [`ParamStore`] gradient buffers. Ops are tensor
//! granular (matmul, activation, blend), not per-scalar, so the tape stays
//! short even for large batches.

use crate::error::{Error, Result};
use crate::nn::param::{ParamId, ParamStore};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Silu,
    Linear,
}

impl Activation {
    pub fn tag(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Silu => "silu",
            Activation::Linear => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "tanh" => Ok(Activation::Tanh),
            "silu" => Ok(Activation::Silu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::format(format!("unknown activation `{other}`"))),
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Silu => x * sigmoid(x),
            Activation::Linear => x,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum Op {
    /// Input data / targets; no gradient flows past it.
    Constant,
    /// Copy of a parameter tensor; backward accumulates into the store.
    Param(ParamId),
    MatMul(NodeId, NodeId),
    /// rows x f plus a 1 x f bias broadcast over rows.
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Silu(NodeId),
    SliceCols(NodeId, usize),
    /// out = pod (1 - w) + nn w, with `w` a 1 x cols parameter row
    /// broadcast over rows.
    BlendRows { pod: NodeId, nn: NodeId, weights: NodeId },
    /// Same blend with `w` of length q broadcast along the component axis
    /// of a flattened (cell, component) feature layout.
    BlendComponents { pod: NodeId, nn: NodeId, weights: NodeId },
    /// [cos(w_j t_i) | sin(w_j t_i)] features; `times` is rows x 1.
    KoopmanFeatures { times: NodeId, omega: NodeId },
    /// (1/rows) * sum of squared entries of (pred - target).
    MeanRowSqError { pred: NodeId, target: NodeId },
}

#[derive(Debug, Clone)]
struct Node {
    value: DenseMatrix,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, id: NodeId) -> &DenseMatrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: DenseMatrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: DenseMatrix) -> NodeId {
        self.push(value, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value);
        self.push(value, Op::MatMul(a, b))
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let bv = &self.nodes[bias.0].value;
        assert_eq!(bv.rows(), 1, "bias must be a row vector");
        assert_eq!(xv.cols(), bv.cols(), "bias width mismatch");
        let mut out = xv.clone();
        let brow = bv.row(0).to_vec();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(&brow) {
                *o += b;
            }
        }
        self.push(out, Op::AddBias(x, bias))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.add(&self.nodes[b.0].value);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.sub(&self.nodes[b.0].value);
        self.push(value, Op::Sub(a, b))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.hadamard(&self.nodes[b.0].value);
        self.push(value, Op::Hadamard(a, b))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let value = self.nodes[a.0].value.scale(s);
        self.push(value, Op::Scale(a, s))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.map(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn sigmoid_node(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.map(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn silu(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a.0].value.map(|x| x * sigmoid(x));
        self.push(value, Op::Silu(a))
    }

    pub fn activation(&mut self, a: NodeId, kind: Activation) -> NodeId {
        match kind {
            Activation::Tanh => self.tanh(a),
            Activation::Silu => self.silu(a),
            Activation::Linear => a,
        }
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let av = &self.nodes[a.0].value;
        assert!(start + len <= av.cols(), "slice out of range");
        let mut out = DenseMatrix::zeros(av.rows(), len);
        for r in 0..av.rows() {
            out.row_mut(r).copy_from_slice(&av.row(r)[start..start + len]);
        }
        self.push(out, Op::SliceCols(a, start))
    }

    pub fn blend_rows(&mut self, pod: NodeId, nn: NodeId, weights: NodeId) -> NodeId {
        let pv = &self.nodes[pod.0].value;
        let nv = &self.nodes[nn.0].value;
        let wv = &self.nodes[weights.0].value;
        assert_eq!(pv.shape(), nv.shape(), "blend_rows operand mismatch");
        assert_eq!(wv.rows(), 1, "blend weights must be a row vector");
        assert_eq!(wv.cols(), pv.cols(), "blend weight width mismatch");
        let w = wv.row(0).to_vec();
        let mut out = DenseMatrix::zeros(pv.rows(), pv.cols());
        for r in 0..pv.rows() {
            let prow = pv.row(r);
            let nrow = nv.row(r);
            for (c, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = prow[c] * (1.0 - w[c]) + nrow[c] * w[c];
            }
        }
        self.push(out, Op::BlendRows { pod, nn, weights })
    }

    pub fn blend_components(&mut self, pod: NodeId, nn: NodeId, weights: NodeId) -> NodeId {
        let pv = &self.nodes[pod.0].value;
        let nv = &self.nodes[nn.0].value;
        let wv = &self.nodes[weights.0].value;
        assert_eq!(pv.shape(), nv.shape(), "blend_components operand mismatch");
        assert_eq!(wv.rows(), 1, "blend weights must be a row vector");
        let q = wv.cols();
        assert!(q > 0 && pv.cols() % q == 0, "feature count not divisible by q");
        let w = wv.row(0).to_vec();
        let mut out = DenseMatrix::zeros(pv.rows(), pv.cols());
        for r in 0..pv.rows() {
            let prow = pv.row(r);
            let nrow = nv.row(r);
            for (c, o) in out.row_mut(r).iter_mut().enumerate() {
                let wq = w[c % q];
                *o = prow[c] * (1.0 - wq) + nrow[c] * wq;
            }
        }
        self.push(out, Op::BlendComponents { pod, nn, weights })
    }

    pub fn koopman_features(&mut self, times: NodeId, omega: NodeId) -> NodeId {
        let tv = &self.nodes[times.0].value;
        let ov = &self.nodes[omega.0].value;
        assert_eq!(tv.cols(), 1, "times must be a column vector");
        assert_eq!(ov.rows(), 1, "omega must be a row vector");
        let nf = ov.cols();
        let mut out = DenseMatrix::zeros(tv.rows(), 2 * nf);
        for r in 0..tv.rows() {
            let t = tv.get(r, 0);
            let row = out.row_mut(r);
            for j in 0..nf {
                let arg = ov.get(0, j) * t;
                row[j] = arg.cos();
                row[nf + j] = arg.sin();
            }
        }
        self.push(out, Op::KoopmanFeatures { times, omega })
    }

    pub fn mean_row_sq_error(&mut self, pred: NodeId, target: NodeId) -> NodeId {
        let pv = &self.nodes[pred.0].value;
        let tv = &self.nodes[target.0].value;
        assert_eq!(pv.shape(), tv.shape(), "loss operand mismatch");
        let rows = pv.rows().max(1);
        let mut acc = 0.0;
        for (p, t) in pv.as_slice().iter().zip(tv.as_slice()) {
            let d = p - t;
            acc += d * d;
        }
        let value = DenseMatrix::from_vec(1, 1, vec![acc / rows as f64]);
        self.push(value, Op::MeanRowSqError { pred, target })
    }

    /// Reverse pass from a scalar loss node, accumulating parameter
    /// gradients into `store`.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::state("backward called on an empty tape (no forward recorded)"));
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::state("backward called with a node not on this tape"));
        }
        let lv = &self.nodes[loss.0].value;
        if lv.shape() != (1, 1) {
            return Err(Error::state("loss node is not a scalar"));
        }
        if !lv.get(0, 0).is_finite() {
            return Err(Error::state("loss is not finite"));
        }

        let mut grads: Vec<Option<DenseMatrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(DenseMatrix::from_vec(1, 1, vec![1.0]));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Constant => {}
                Op::Param(pid) => store.accumulate_grad(*pid, &g),
                Op::MatMul(a, b) => {
                    let da = g.matmul_nt(&self.nodes[b.0].value);
                    let db = self.nodes[a.0].value.matmul_tn(&g);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::AddBias(x, bias) => {
                    let mut db = DenseMatrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, v) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, *bias, db);
                    accumulate(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.scale(-1.0));
                    accumulate(&mut grads, *a, g);
                }
                Op::Hadamard(a, b) => {
                    let da = g.hadamard(&self.nodes[b.0].value);
                    let db = g.hadamard(&self.nodes[a.0].value);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Scale(a, s) => {
                    accumulate(&mut grads, *a, g.scale(*s));
                }
                Op::Tanh(a) => {
                    let y = &self.nodes[idx].value;
                    let mut da = g;
                    for (d, yv) in da.as_mut_slice().iter_mut().zip(y.as_slice()) {
                        *d *= 1.0 - yv * yv;
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::Sigmoid(a) => {
                    let y = &self.nodes[idx].value;
                    let mut da = g;
                    for (d, yv) in da.as_mut_slice().iter_mut().zip(y.as_slice()) {
                        *d *= yv * (1.0 - yv);
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::Silu(a) => {
                    let x = &self.nodes[a.0].value;
                    let mut da = g;
                    for (d, xv) in da.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        let s = sigmoid(*xv);
                        *d *= s * (1.0 + xv * (1.0 - s));
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::SliceCols(a, start) => {
                    let av = &self.nodes[a.0].value;
                    let mut da = DenseMatrix::zeros(av.rows(), av.cols());
                    for r in 0..g.rows() {
                        let grow = g.row(r);
                        let drow = da.row_mut(r);
                        drow[*start..*start + grow.len()].copy_from_slice(grow);
                    }
                    accumulate(&mut grads, *a, da);
                }
                Op::BlendRows { pod, nn, weights } => {
                    let pv = &self.nodes[pod.0].value;
                    let nv = &self.nodes[nn.0].value;
                    let wv = &self.nodes[weights.0].value;
                    let w = wv.row(0);
                    let mut dp = DenseMatrix::zeros(pv.rows(), pv.cols());
                    let mut dn = DenseMatrix::zeros(pv.rows(), pv.cols());
                    let mut dw = DenseMatrix::zeros(1, w.len());
                    for r in 0..g.rows() {
                        let grow = g.row(r);
                        let prow = pv.row(r);
                        let nrow = nv.row(r);
                        let dprow = dp.row_mut(r);
                        for c in 0..grow.len() {
                            dprow[c] = grow[c] * (1.0 - w[c]);
                        }
                        let dnrow = dn.row_mut(r);
                        for c in 0..grow.len() {
                            dnrow[c] = grow[c] * w[c];
                        }
                        let dwrow = dw.row_mut(0);
                        for c in 0..grow.len() {
                            dwrow[c] += grow[c] * (nrow[c] - prow[c]);
                        }
                    }
                    accumulate(&mut grads, *pod, dp);
                    accumulate(&mut grads, *nn, dn);
                    accumulate(&mut grads, *weights, dw);
                }
                Op::BlendComponents { pod, nn, weights } => {
                    let pv = &self.nodes[pod.0].value;
                    let nv = &self.nodes[nn.0].value;
                    let wv = &self.nodes[weights.0].value;
                    let q = wv.cols();
                    let w = wv.row(0);
                    let mut dp = DenseMatrix::zeros(pv.rows(), pv.cols());
                    let mut dn = DenseMatrix::zeros(pv.rows(), pv.cols());
                    let mut dw = DenseMatrix::zeros(1, q);
                    for r in 0..g.rows() {
                        let grow = g.row(r);
                        let prow = pv.row(r);
                        let nrow = nv.row(r);
                        let dprow = dp.row_mut(r);
                        for c in 0..grow.len() {
                            dprow[c] = grow[c] * (1.0 - w[c % q]);
                        }
                        let dnrow = dn.row_mut(r);
                        for c in 0..grow.len() {
                            dnrow[c] = grow[c] * w[c % q];
                        }
                        let dwrow = dw.row_mut(0);
                        for c in 0..grow.len() {
                            dwrow[c % q] += grow[c] * (nrow[c] - prow[c]);
                        }
                    }
                    accumulate(&mut grads, *pod, dp);
                    accumulate(&mut grads, *nn, dn);
                    accumulate(&mut grads, *weights, dw);
                }
                Op::KoopmanFeatures { times, omega } => {
                    let tv = &self.nodes[times.0].value;
                    let ov = &self.nodes[omega.0].value;
                    let nf = ov.cols();
                    let y = &self.nodes[idx].value;
                    let mut domega = DenseMatrix::zeros(1, nf);
                    for r in 0..g.rows() {
                        let t = tv.get(r, 0);
                        let grow = g.row(r);
                        let yrow = y.row(r);
                        let drow = domega.row_mut(0);
                        for j in 0..nf {
                            // d cos(wt)/dw = -t sin(wt); d sin(wt)/dw = t cos(wt)
                            drow[j] += t * (grow[nf + j] * yrow[j] - grow[j] * yrow[nf + j]);
                        }
                    }
                    accumulate(&mut grads, *omega, domega);
                    // no gradient into times (data)
                }
                Op::MeanRowSqError { pred, target } => {
                    let pv = &self.nodes[pred.0].value;
                    let tv = &self.nodes[target.0].value;
                    let scale = 2.0 * g.get(0, 0) / pv.rows().max(1) as f64;
                    let mut dp = DenseMatrix::zeros(pv.rows(), pv.cols());
                    for ((d, p), t) in dp
                        .as_mut_slice()
                        .iter_mut()
                        .zip(pv.as_slice())
                        .zip(tv.as_slice())
                    {
                        *d = scale * (p - t);
                    }
                    accumulate(&mut grads, *pred, dp);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<DenseMatrix>], id: NodeId, delta: DenseMatrix) {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&delta),
        slot @ None => *slot = Some(delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::ParamGroup;

    #[test]
    fn backward_on_empty_tape_is_state_error() {
        let tape = Tape::new();
        let mut store = ParamStore::new();
        let err = tape.backward(NodeId(0), &mut store);
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn constant_loss_gives_zero_gradients() {
        let mut store = ParamStore::new();
        let w = store
            .insert("w", ParamGroup::Network, DenseMatrix::from_vec(1, 1, vec![2.0]))
            .unwrap();
        let mut tape = Tape::new();
        let _wn = tape.param(&store, w);
        let c = tape.constant(DenseMatrix::from_vec(1, 1, vec![5.0]));
        let zero = tape.constant(DenseMatrix::from_vec(1, 1, vec![5.0]));
        let loss = tape.mean_row_sq_error(c, zero);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad(w).get(0, 0), 0.0);
    }

    #[test]
    fn quadratic_form_gradient() {
        // loss = 1/2 ||W x||^2 with W = I2, x = [1, 2] => dL/dW = x x^T projections
        let mut store = ParamStore::new();
        let w = store
            .insert(
                "w",
                ParamGroup::Network,
                DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            )
            .unwrap();
        let mut tape = Tape::new();
        let wn = tape.param(&store, w);
        let x = tape.constant(DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]));
        // row-vector convention: y = x W, ||y||^2 = x W W^T x^T; with W
        // symmetric this matches 1/2||W x||^2 after the 1/2 scale
        let y = tape.matmul(x, wn);
        let zero = tape.constant(DenseMatrix::zeros(1, 2));
        let mse = tape.mean_row_sq_error(y, zero); // = ||y||^2 (single row)
        let loss = tape.scale(mse, 0.5);
        tape.backward(loss, &mut store).unwrap();
        // dL/dW = x^T y = x^T x (W = I): [[1,2],[2,4]]
        let g = store.grad(w);
        assert_eq!(g.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn gradient_linearity_in_loss_scale() {
        let mut store = ParamStore::new();
        let w = store
            .insert("w", ParamGroup::Network, DenseMatrix::from_vec(1, 3, vec![0.3, -0.2, 0.9]))
            .unwrap();
        let target = DenseMatrix::from_vec(2, 3, vec![0.1; 6]);
        let x = DenseMatrix::from_vec(2, 1, vec![1.0, -2.0]);

        let run = |alpha: f64, store: &mut ParamStore| -> Vec<f64> {
            store.zero_grads();
            let mut tape = Tape::new();
            let wn = tape.param(store, w);
            let xn = tape.constant(x.clone());
            let y = tape.matmul(xn, wn);
            let tn = tape.constant(target.clone());
            let mse = tape.mean_row_sq_error(y, tn);
            let loss = tape.scale(mse, alpha);
            tape.backward(loss, store).unwrap();
            store.grad(w).as_slice().to_vec()
        };

        let g1 = run(1.0, &mut store);
        let g2 = run(2.0, &mut store);
        let gneg = run(-1.0, &mut store);
        for i in 0..3 {
            assert_eq!(g2[i], 2.0 * g1[i]);
            assert_eq!(gneg[i], -g1[i]);
        }
    }
}
