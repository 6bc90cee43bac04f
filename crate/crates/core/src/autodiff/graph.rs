//! Tape-based computation graph with reverse-mode differentiation.
//!
//! Nodes are appended in creation order and evaluated eagerly, so the tape is
//! its own topological order and cannot contain cycles. `backward` walks the
//! tape in reverse and accumulates into each parent left to right.

use crate::autodiff::Tensor;
use crate::error::{shape_err, Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How the two trailing axes of a `[N, C, H, W]` tensor are interpreted.
///
/// `Line` stores one-dimensional signals with `H = 1`; pooling and
/// upsampling then act on the width axis only.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    Line,
    Grid,
}

impl Layout {
    fn factors(self) -> (usize, usize) {
        match self {
            Layout::Line => (1, 2),
            Layout::Grid => (2, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Input,
    Param,
    Linear,
    Conv2d,
    Relu,
    AvgPool2x2(Layout),
    Upsample2x(Layout),
    Add,
    Scale(f64),
    ConcatChannels,
    MseLoss,
    FrobeniusNorm,
    Sum,
}

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub op: Op,
    pub parents: Vec<NodeId>,
    pub value: Tensor,
    pub requires_grad: bool,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.0).and_then(Option::take)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<GraphNode>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &GraphNode {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Constant leaf; never receives a gradient.
    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Input, vec![], t, false)
    }

    /// Trainable leaf.
    pub fn param(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Param, vec![], t, true)
    }

    fn push(&mut self, op: Op, parents: Vec<NodeId>, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(GraphNode {
            op,
            parents,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn derived(&mut self, op: Op, parents: Vec<NodeId>, value: Tensor) -> NodeId {
        let rg = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.push(op, parents, value, rg)
    }

    /// `x · Wᵀ + b` for `x: [N, in]`, `W: [out, in]`, `b: [out]`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let value = linear_forward(self.value(x), self.value(w), self.value(b))?;
        Ok(self.derived(Op::Linear, vec![x, w, b], value))
    }

    /// Stride-1 convolution with zero padding of `k / 2` on each side.
    ///
    /// `x: [N, C, H, W]`, `w: [O, C, k, k]` with odd `k`, `b: [O]`.
    pub fn conv2d(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let value = conv_forward(self.value(x), self.value(w), self.value(b))?;
        Ok(self.derived(Op::Conv2d, vec![x, w, b], value))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v.max(0.0));
        self.derived(Op::Relu, vec![x], value)
    }

    pub fn avg_pool_2x2(&mut self, x: NodeId, layout: Layout) -> Result<NodeId> {
        let value = pool_forward(self.value(x), layout)?;
        Ok(self.derived(Op::AvgPool2x2(layout), vec![x], value))
    }

    pub fn upsample_2x(&mut self, x: NodeId, layout: Layout) -> Result<NodeId> {
        let value = upsample_forward(self.value(x), layout)?;
        Ok(self.derived(Op::Upsample2x(layout), vec![x], value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err("add", format!("{:?} vs {:?}", va.shape(), vb.shape())));
        }
        let mut value = va.clone();
        value.add_assign(vb);
        Ok(self.derived(Op::Add, vec![a, b], value))
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let value = self.value(x).map(|v| v * s);
        self.derived(Op::Scale(s), vec![x], value)
    }

    /// Concatenates two `[N, C, H, W]` tensors along the channel axis.
    pub fn concat_channels(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = concat_forward(self.value(a), self.value(b))?;
        Ok(self.derived(Op::ConcatChannels, vec![a, b], value))
    }

    /// Mean squared difference over all entries.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(shape_err("mse_loss", format!("{:?} vs {:?}", p.shape(), t.shape())));
        }
        let n = p.len() as f64;
        let s: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.derived(Op::MseLoss, vec![pred, target], Tensor::scalar(s / n)))
    }

    pub fn frobenius_norm(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).frobenius_norm());
        self.derived(Op::FrobeniusNorm, vec![x], value)
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.derived(Op::Sum, vec![x], value)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let root = self.value(loss);
        if !root.is_scalar() {
            return Err(Error::NonScalarLoss(root.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(root.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad && !node.parents.is_empty() {
                let contributions = self.local_grads(node, &g)?;
                for (parent, contrib) in node.parents.iter().zip(contributions) {
                    if !self.nodes[parent.0].requires_grad {
                        continue;
                    }
                    match &mut grads[parent.0] {
                        Some(acc) => acc.add_assign(&contrib),
                        slot @ None => *slot = Some(contrib),
                    }
                }
            }
            grads[idx] = Some(g);
        }
        // Only nodes that take part in differentiation keep a gradient.
        for (idx, slot) in grads.iter_mut().enumerate() {
            if !self.nodes[idx].requires_grad {
                *slot = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn local_grads(&self, node: &GraphNode, g: &Tensor) -> Result<Vec<Tensor>> {
        let val = |i: usize| self.value(node.parents[i]);
        Ok(match &node.op {
            Op::Input | Op::Param => vec![],
            Op::Linear => linear_backward(val(0), val(1), g),
            Op::Conv2d => conv_backward(val(0), val(1), g),
            Op::Relu => {
                let x = val(0);
                let data = x.data().iter().zip(g.data()).map(|(&v, &d)| if v > 0.0 { d } else { 0.0 }).collect();
                vec![Tensor::new(x.shape().to_vec(), data)?]
            }
            Op::AvgPool2x2(layout) => {
                let (fh, fw) = layout.factors();
                let mut up = upsample_forward(g, *layout)?;
                let inv = 1.0 / (fh * fw) as f64;
                up.data_mut().iter_mut().for_each(|v| *v *= inv);
                vec![up]
            }
            Op::Upsample2x(layout) => {
                let (fh, fw) = layout.factors();
                let mut down = pool_forward(g, *layout)?;
                let k = (fh * fw) as f64;
                down.data_mut().iter_mut().for_each(|v| *v *= k);
                vec![down]
            }
            Op::Add => vec![g.clone(), g.clone()],
            Op::Scale(s) => vec![g.map(|v| v * s)],
            Op::ConcatChannels => concat_backward(val(0), val(1), g),
            Op::MseLoss => {
                let (p, t) = (val(0), val(1));
                let k = 2.0 * g.item() / p.len() as f64;
                let dp: Vec<f64> = p.data().iter().zip(t.data()).map(|(a, b)| k * (a - b)).collect();
                let dt = dp.iter().map(|v| -v).collect();
                vec![
                    Tensor::new(p.shape().to_vec(), dp)?,
                    Tensor::new(t.shape().to_vec(), dt)?,
                ]
            }
            Op::FrobeniusNorm => {
                let x = val(0);
                let n = node.value.item();
                if n == 0.0 {
                    vec![Tensor::zeros(x.shape())]
                } else {
                    let k = g.item() / n;
                    vec![x.map(|v| v * k)]
                }
            }
            Op::Sum => vec![Tensor::full(val(0).shape(), g.item())],
        })
    }
}

fn linear_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, fin) = match x.shape() {
        [n, f] => (*n, *f),
        s => return Err(shape_err("linear", format!("input must be [N, in], got {s:?}"))),
    };
    let fout = match w.shape() {
        [o, i] if *i == fin => *o,
        s => return Err(shape_err("linear", format!("weight {s:?} incompatible with input {:?}", x.shape()))),
    };
    if b.shape() != [fout] {
        return Err(shape_err("linear", format!("bias {:?} for {fout} outputs", b.shape())));
    }
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    let mut out = vec![0.0; n * fout];
    for r in 0..n {
        let xr = &xd[r * fin..(r + 1) * fin];
        for o in 0..fout {
            let wr = &wd[o * fin..(o + 1) * fin];
            let mut acc = bd[o];
            for k in 0..fin {
                acc += xr[k] * wr[k];
            }
            out[r * fout + o] = acc;
        }
    }
    Tensor::new(vec![n, fout], out)
}

fn linear_backward(x: &Tensor, w: &Tensor, g: &Tensor) -> Vec<Tensor> {
    let (n, fin) = (x.shape()[0], x.shape()[1]);
    let fout = w.shape()[0];
    let (xd, wd, gd) = (x.data(), w.data(), g.data());
    let mut dx = vec![0.0; n * fin];
    let mut dw = vec![0.0; fout * fin];
    let mut db = vec![0.0; fout];
    for r in 0..n {
        for o in 0..fout {
            let go = gd[r * fout + o];
            db[o] += go;
            for k in 0..fin {
                dx[r * fin + k] += go * wd[o * fin + k];
                dw[o * fin + k] += go * xd[r * fin + k];
            }
        }
    }
    vec![
        Tensor::new(x.shape().to_vec(), dx).expect("shape preserved"),
        Tensor::new(w.shape().to_vec(), dw).expect("shape preserved"),
        Tensor::new(vec![fout], db).expect("shape preserved"),
    ]
}

fn conv_dims(x: &Tensor, w: &Tensor) -> Result<([usize; 4], usize, usize)> {
    let [n, c, h, wd] = x.dims4("conv2d")?;
    let [o, ci, kh, kw] = w.dims4("conv2d")?;
    if ci != c || kh != kw || kh % 2 == 0 {
        return Err(shape_err(
            "conv2d",
            format!("weight {:?} incompatible with input {:?} (need [O, C, k, k], k odd)", w.shape(), x.shape()),
        ));
    }
    Ok(([n, c, h, wd], o, kh))
}

fn conv_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let ([n, c, h, wid], o, k) = conv_dims(x, w)?;
    if b.shape() != [o] {
        return Err(shape_err("conv2d", format!("bias {:?} for {o} output channels", b.shape())));
    }
    let p = (k / 2) as isize;
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    let mut out = vec![0.0; n * o * h * wid];
    for ni in 0..n {
        for oc in 0..o {
            let obase = (ni * o + oc) * h * wid;
            for y in 0..h {
                for xx in 0..wid {
                    let mut acc = bd[oc];
                    for ic in 0..c {
                        let ibase = (ni * c + ic) * h * wid;
                        let wbase = (oc * c + ic) * k * k;
                        for ky in 0..k {
                            let sy = y as isize + ky as isize - p;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let sx = xx as isize + kx as isize - p;
                                if sx < 0 || sx >= wid as isize {
                                    continue;
                                }
                                acc += xd[ibase + sy as usize * wid + sx as usize] * wd[wbase + ky * k + kx];
                            }
                        }
                    }
                    out[obase + y * wid + xx] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, o, h, wid], out)
}

fn conv_backward(x: &Tensor, w: &Tensor, g: &Tensor) -> Vec<Tensor> {
    let ([n, c, h, wid], o, k) = conv_dims(x, w).expect("validated in forward");
    let p = (k / 2) as isize;
    let (xd, wd, gd) = (x.data(), w.data(), g.data());
    let mut dx = vec![0.0; xd.len()];
    let mut dw = vec![0.0; wd.len()];
    let mut db = vec![0.0; o];
    for ni in 0..n {
        for oc in 0..o {
            let obase = (ni * o + oc) * h * wid;
            for y in 0..h {
                for xx in 0..wid {
                    let go = gd[obase + y * wid + xx];
                    db[oc] += go;
                    if go == 0.0 {
                        continue;
                    }
                    for ic in 0..c {
                        let ibase = (ni * c + ic) * h * wid;
                        let wbase = (oc * c + ic) * k * k;
                        for ky in 0..k {
                            let sy = y as isize + ky as isize - p;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let sx = xx as isize + kx as isize - p;
                                if sx < 0 || sx >= wid as isize {
                                    continue;
                                }
                                let xi = ibase + sy as usize * wid + sx as usize;
                                let wi = wbase + ky * k + kx;
                                dx[xi] += go * wd[wi];
                                dw[wi] += go * xd[xi];
                            }
                        }
                    }
                }
            }
        }
    }
    vec![
        Tensor::new(x.shape().to_vec(), dx).expect("shape preserved"),
        Tensor::new(w.shape().to_vec(), dw).expect("shape preserved"),
        Tensor::new(vec![o], db).expect("shape preserved"),
    ]
}

fn pool_forward(x: &Tensor, layout: Layout) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4("avg_pool_2x2")?;
    let (fh, fw) = layout.factors();
    if layout == Layout::Line && h != 1 {
        return Err(shape_err("avg_pool_2x2", format!("line layout needs H = 1, got {:?}", x.shape())));
    }
    if h % fh != 0 || w % fw != 0 {
        return Err(shape_err("avg_pool_2x2", format!("odd spatial extent in {:?}", x.shape())));
    }
    let (oh, ow) = (h / fh, w / fw);
    let inv = 1.0 / (fh * fw) as f64;
    let xd = x.data();
    let mut out = vec![0.0; n * c * oh * ow];
    for plane in 0..n * c {
        let ib = plane * h * w;
        let ob = plane * oh * ow;
        for y in 0..oh {
            for xx in 0..ow {
                let mut acc = 0.0;
                for dy in 0..fh {
                    for dx in 0..fw {
                        acc += xd[ib + (y * fh + dy) * w + xx * fw + dx];
                    }
                }
                out[ob + y * ow + xx] = acc * inv;
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], out)
}

fn upsample_forward(x: &Tensor, layout: Layout) -> Result<Tensor> {
    let [n, c, h, w] = x.dims4("upsample_2x")?;
    let (fh, fw) = layout.factors();
    if layout == Layout::Line && h != 1 {
        return Err(shape_err("upsample_2x", format!("line layout needs H = 1, got {:?}", x.shape())));
    }
    let (oh, ow) = (h * fh, w * fw);
    let xd = x.data();
    let mut out = vec![0.0; n * c * oh * ow];
    for plane in 0..n * c {
        let ib = plane * h * w;
        let ob = plane * oh * ow;
        for y in 0..oh {
            for xx in 0..ow {
                out[ob + y * ow + xx] = xd[ib + (y / fh) * w + xx / fw];
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], out)
}

fn concat_forward(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let [n, ca, h, w] = a.dims4("concat_channels")?;
    let [nb, cb, hb, wb] = b.dims4("concat_channels")?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(shape_err("concat_channels", format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(n * (ca + cb) * plane);
    for ni in 0..n {
        out.extend_from_slice(&a.data()[ni * ca * plane..(ni + 1) * ca * plane]);
        out.extend_from_slice(&b.data()[ni * cb * plane..(ni + 1) * cb * plane]);
    }
    Tensor::new(vec![n, ca + cb, h, w], out)
}

fn concat_backward(a: &Tensor, b: &Tensor, g: &Tensor) -> Vec<Tensor> {
    let [n, ca, h, w] = a.shape().try_into().expect("rank 4");
    let cb = b.shape()[1];
    let plane = h * w;
    let mut da = Vec::with_capacity(a.len());
    let mut db = Vec::with_capacity(b.len());
    let gd = g.data();
    for ni in 0..n {
        let base = ni * (ca + cb) * plane;
        da.extend_from_slice(&gd[base..base + ca * plane]);
        db.extend_from_slice(&gd[base + ca * plane..base + (ca + cb) * plane]);
    }
    vec![
        Tensor::new(a.shape().to_vec(), da).expect("shape preserved"),
        Tensor::new(b.shape().to_vec(), db).expect("shape preserved"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn linear_identity() {
        let mut g = Graph::new();
        let x = g.input(t(&[2, 3], &[1., 2., 3., 4., 5., 6.]));
        let w = g.param(t(&[3, 3], &[1., 0., 0., 0., 1., 0., 0., 0., 1.]));
        let b = g.param(Tensor::zeros(&[3]));
        let y = g.linear(x, w, b).unwrap();
        assert_eq!(g.value(y), g.value(x));
    }

    #[test]
    fn relu_values() {
        let mut g = Graph::new();
        let x = g.input(t(&[3], &[-1., 0., 2.]));
        let y = g.relu(x);
        assert_eq!(g.value(y).data(), &[0., 0., 2.]);
    }

    #[test]
    fn pool_block_mean() {
        let mut g = Graph::new();
        let x = g.input(t(&[1, 1, 2, 2], &[1., 3., 5., 7.]));
        let y = g.avg_pool_2x2(x, Layout::Grid).unwrap();
        assert_eq!(g.value(y).data(), &[4.]);
    }

    #[test]
    fn mse_self_has_zero_grad() {
        let mut g = Graph::new();
        let x = g.param(t(&[4], &[0.3, -1.0, 2.0, 5.0]));
        let l = g.mse_loss(x, x).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.get(x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scale_grad_is_factor() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(1.7));
        let l = g.scale(x, 3.0);
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(x).unwrap().item(), 3.0);
        assert_eq!(grads.get(l).unwrap().item(), 1.0);
    }

    #[test]
    fn squared_frobenius_grad_is_twice_weight() {
        // d/dW ||W||^2 = 2W; ||W||^2 built as ||W|| * ||W|| via mse against zero:
        // mse(W, 0) = ||W||^2 / 4 for a 2x2 matrix.
        let mut g = Graph::new();
        let w = g.param(t(&[2, 2], &[1., 2., 3., 4.]));
        let zero = g.input(Tensor::zeros(&[2, 2]));
        let m = g.mse_loss(w, zero).unwrap();
        let l = g.scale(m, 4.0);
        assert!((g.value(l).item() - 30.0).abs() < 1e-12);
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[2., 4., 6., 8.]);

        // And through the norm primitive: d||W||/dW = W / ||W||.
        let mut g = Graph::new();
        let w = g.param(t(&[2, 2], &[1., 2., 3., 4.]));
        let n = g.frobenius_norm(w);
        let grads = g.backward(n).unwrap();
        let norm = 30f64.sqrt();
        for (gv, wv) in grads.get(w).unwrap().data().iter().zip([1., 2., 3., 4.]) {
            // chain rule: d(n^2) = 2 n dn = 2W
            assert!((2.0 * norm * gv - 2.0 * wv).abs() < 1e-12);
        }
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g = Graph::new();
        let x = g.param(t(&[2], &[1., 2.]));
        assert!(matches!(g.backward(x), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn shape_errors_name_the_op() {
        let mut g = Graph::new();
        let a = g.input(Tensor::zeros(&[2]));
        let b = g.input(Tensor::zeros(&[3]));
        let err = g.add(a, b).unwrap_err().to_string();
        assert!(err.contains("add") && err.contains("[2]") && err.contains("[3]"), "{err}");
        let x = g.input(Tensor::zeros(&[1, 2]));
        let w = g.input(Tensor::zeros(&[3, 4]));
        let bias = g.input(Tensor::zeros(&[3]));
        assert!(g.linear(x, w, bias).unwrap_err().to_string().contains("linear"));
    }

    #[test]
    fn upsample_then_pool_is_identity() {
        for layout in [Layout::Line, Layout::Grid] {
            let h = if layout == Layout::Line { 1 } else { 3 };
            let data: Vec<f64> = (0..2 * 2 * h * 5).map(|v| (v as f64).sin()).collect();
            let mut g = Graph::new();
            let x = g.input(t(&[2, 2, h, 5], &data));
            let u = g.upsample_2x(x, layout).unwrap();
            let p = g.avg_pool_2x2(u, layout).unwrap();
            assert_eq!(g.value(p), g.value(x));
        }
    }

    #[test]
    fn concat_splits_gradient() {
        let mut g = Graph::new();
        let a = g.param(Tensor::full(&[1, 1, 1, 2], 1.0));
        let b = g.param(Tensor::full(&[1, 2, 1, 2], 2.0));
        let c = g.concat_channels(a, b).unwrap();
        assert_eq!(g.value(c).shape(), &[1, 3, 1, 2]);
        let s = g.sum(c);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(a).unwrap().shape(), &[1, 1, 1, 2]);
        assert_eq!(grads.get(b).unwrap().shape(), &[1, 2, 1, 2]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(2.0));
        let w = g.param(Tensor::scalar(3.0));
        let s = g.add(x, w).unwrap();
        let grads = g.backward(s).unwrap();
        assert!(grads.get(x).is_none());
        assert_eq!(grads.get(w).unwrap().item(), 1.0);
    }
}
