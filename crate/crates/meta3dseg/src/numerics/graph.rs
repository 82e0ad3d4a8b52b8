//! Reverse-mode autodiff on an append-only tape.
//!
//! Forward values are computed eagerly as nodes are appended; `backward`
//! walks the tape in reverse insertion order and accumulates gradients in a
//! fixed order, so repeated runs produce bit-identical results. Gradients
//! flow only into subgraphs rooted at leaves created with `needs_grad`.

use crate::numerics::tensor::{matmul, matmul_at, matmul_bt, Scalar, Tensor};
use crate::{Error, Result};

/// Handle to a node on a [`Graph`] tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Tape operations. Attribute-free ops recover everything they need from
/// their stored input and output values during the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar(f64),
    Relu,
    Sigmoid,
    Exp,
    /// All elements to a `[1]` tensor.
    Sum,
    /// `[r, c]` to `[c]`, column means.
    MeanRows,
    /// `[r, c]` to `[r]`, per-row maximum (ties break to the lowest index).
    RowMax,
    /// k tensors of shape `[n]` to `[k, n]`.
    StackRows,
    /// `x [n] | [B, n]`, `w [m, n]`, `b [m]` to `[m] | [B, m]`.
    Linear,
    Conv3d {
        stride: usize,
        padding: usize,
    },
    Reshape,
    Slice {
        start: usize,
        len: usize,
    },
    /// `f [m]`, `p [B, 3]` to `[B, m + 3]`: each row is `[f ; p_i]`.
    PointFeatures,
}

struct Node<T> {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor<T>,
    needs_grad: bool,
}

/// Append-only computation tape.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    checked: bool,
}

/// Gradients keyed by [`NodeId`], produced by [`Graph::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss with respect to a node, if any flowed into it.
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            checked: cfg!(debug_assertions),
        }
    }

    /// Toggle per-op finiteness validation (on by default in debug builds).
    pub fn with_checked(mut self, checked: bool) -> Self {
        self.checked = checked;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn leaf(&mut self, value: Tensor<T>, needs_grad: bool) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value,
            needs_grad,
        });
        id
    }

    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.leaf(value, false)
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor<T>) -> Result<NodeId> {
        if self.checked && !value.is_finite() {
            return Err(Error::NonFinite(format!("{op:?} produced a non-finite value")));
        }
        let needs_grad = inputs.iter().any(|&i| self.nodes[i.0].needs_grad);
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op,
            inputs,
            value,
            needs_grad,
        });
        Ok(id)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, op: &str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::ShapeMismatch(format!("{op}: {sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let out = zip(self.value(a), self.value(b), |x, y| x + y);
        self.push(Op::Add, vec![a, b], out)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "sub")?;
        let out = zip(self.value(a), self.value(b), |x, y| x - y);
        self.push(Op::Sub, vec![a, b], out)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "mul")?;
        let out = zip(self.value(a), self.value(b), |x, y| x * y);
        self.push(Op::Mul, vec![a, b], out)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let cv = T::from_f64(c);
        let out = map(self.value(x), |v| v * cv);
        self.push(Op::Scale(c), vec![x], out)
    }

    pub fn add_scalar(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let cv = T::from_f64(c);
        let out = map(self.value(x), |v| v + cv);
        self.push(Op::AddScalar(c), vec![x], out)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let out = map(self.value(x), |v| if v > T::zero() { v } else { T::zero() });
        self.push(Op::Relu, vec![x], out)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let out = map(self.value(x), sigmoid_stable);
        self.push(Op::Sigmoid, vec![x], out)
    }

    pub fn exp(&mut self, x: NodeId) -> Result<NodeId> {
        let out = map(self.value(x), |v| v.exp());
        self.push(Op::Exp, vec![x], out)
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let mut acc = T::zero();
        for &v in self.value(x).data() {
            acc = acc + v;
        }
        self.push(Op::Sum, vec![x], Tensor::scalar(acc))
    }

    pub fn mean_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let (r, c) = as_2d(self.value(x), "mean_rows")?;
        let data = self.value(x).data();
        let inv = T::from_f64(1.0 / r as f64);
        let mut out = vec![T::zero(); c];
        for i in 0..r {
            for j in 0..c {
                out[j] = out[j] + data[i * c + j];
            }
        }
        for v in &mut out {
            *v = *v * inv;
        }
        self.push(Op::MeanRows, vec![x], Tensor::from_vec(&[c], out)?)
    }

    pub fn row_max(&mut self, x: NodeId) -> Result<NodeId> {
        let (r, c) = as_2d(self.value(x), "row_max")?;
        let data = self.value(x).data();
        let mut out = vec![T::zero(); r];
        for i in 0..r {
            out[i] = data[i * c + row_argmax(&data[i * c..(i + 1) * c])];
        }
        self.push(Op::RowMax, vec![x], Tensor::from_vec(&[r], out)?)
    }

    pub fn stack_rows(&mut self, rows: &[NodeId]) -> Result<NodeId> {
        if rows.is_empty() {
            return Err(Error::ShapeMismatch("stack_rows: no inputs".into()));
        }
        let n = match self.value(rows[0]).shape() {
            [n] => *n,
            s => return Err(Error::ShapeMismatch(format!("stack_rows: input shape {s:?}"))),
        };
        let mut data = Vec::with_capacity(rows.len() * n);
        for &row in rows {
            if self.value(row).shape() != [n] {
                return Err(Error::ShapeMismatch(format!(
                    "stack_rows: {:?} vs [{n}]",
                    self.value(row).shape()
                )));
            }
            data.extend_from_slice(self.value(row).data());
        }
        let out = Tensor::from_vec(&[rows.len(), n], data)?;
        self.push(Op::StackRows, rows.to_vec(), out)
    }

    /// `x wᵀ + b` for a single vector or a batch of rows.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (batch, n) = match *self.value(x).shape() {
            [n] => (None, n),
            [r, n] => (Some(r), n),
            ref s => return Err(Error::ShapeMismatch(format!("linear: input shape {s:?}"))),
        };
        let (m, wn) = as_2d(self.value(w), "linear weight")?;
        if wn != n {
            return Err(Error::ShapeMismatch(format!(
                "linear: input width {n} vs weight {:?}",
                self.value(w).shape()
            )));
        }
        if self.value(b).shape() != [m] {
            return Err(Error::ShapeMismatch(format!(
                "linear: bias {:?} vs [{m}]",
                self.value(b).shape()
            )));
        }
        let rows = batch.unwrap_or(1);
        let mut out = matmul_bt(self.value(x).data(), self.value(w).data(), rows, n, m);
        let bias = self.value(b).data();
        for i in 0..rows {
            for j in 0..m {
                out[i * m + j] = out[i * m + j] + bias[j];
            }
        }
        let shape: Vec<usize> = match batch {
            None => vec![m],
            Some(r) => vec![r, m],
        };
        let out = Tensor::from_vec(&shape, out)?;
        self.push(Op::Linear, vec![x, w, b], out)
    }

    /// 3-D convolution: `x [ci, d, h, w]`, `w [co, ci, k, k, k]`, `b [co]`.
    pub fn conv3d(
        &mut self,
        x: NodeId,
        w: NodeId,
        b: NodeId,
        stride: usize,
        padding: usize,
    ) -> Result<NodeId> {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        let (ci, d, h, wd) = match xs[..] {
            [ci, d, h, wd] => (ci, d, h, wd),
            _ => return Err(Error::ShapeMismatch(format!("conv3d: input shape {xs:?}"))),
        };
        let (co, wci, k) = match ws[..] {
            [co, wci, k1, k2, k3] if k1 == k2 && k2 == k3 => (co, wci, k1),
            _ => return Err(Error::ShapeMismatch(format!("conv3d: weight shape {ws:?}"))),
        };
        if wci != ci {
            return Err(Error::ShapeMismatch(format!(
                "conv3d: input channels {ci} vs weight {wci}"
            )));
        }
        if self.value(b).shape() != [co] {
            return Err(Error::ShapeMismatch(format!(
                "conv3d: bias {:?} vs [{co}]",
                self.value(b).shape()
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv3d: stride must be positive".into()));
        }
        let out_dim = |n: usize| -> Result<usize> {
            let padded = n + 2 * padding;
            if padded < k {
                return Err(Error::ShapeMismatch(format!(
                    "conv3d: kernel {k} exceeds padded extent {padded}"
                )));
            }
            Ok((padded - k) / stride + 1)
        };
        let (od, oh, ow) = (out_dim(d)?, out_dim(h)?, out_dim(wd)?);

        let xv = self.value(x).data();
        let wv = self.value(w).data();
        let bv = self.value(b).data();
        let mut out = vec![T::zero(); co * od * oh * ow];
        for c_out in 0..co {
            for zo in 0..od {
                for yo in 0..oh {
                    for xo in 0..ow {
                        let mut acc = bv[c_out];
                        for c_in in 0..ci {
                            for kz in 0..k {
                                let zi = (zo * stride + kz) as isize - padding as isize;
                                if zi < 0 || zi as usize >= d {
                                    continue;
                                }
                                for ky in 0..k {
                                    let yi = (yo * stride + ky) as isize - padding as isize;
                                    if yi < 0 || yi as usize >= h {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let xi =
                                            (xo * stride + kx) as isize - padding as isize;
                                        if xi < 0 || xi as usize >= wd {
                                            continue;
                                        }
                                        let xidx = ((c_in * d + zi as usize) * h
                                            + yi as usize)
                                            * wd
                                            + xi as usize;
                                        let widx = (((c_out * ci + c_in) * k + kz) * k + ky)
                                            * k
                                            + kx;
                                        acc = acc + xv[xidx] * wv[widx];
                                    }
                                }
                            }
                        }
                        out[((c_out * od + zo) * oh + yo) * ow + xo] = acc;
                    }
                }
            }
        }
        let out = Tensor::from_vec(&[co, od, oh, ow], out)?;
        self.push(Op::Conv3d { stride, padding }, vec![x, w, b], out)
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let out = Tensor::from_vec(shape, self.value(x).data().to_vec())?;
        self.push(Op::Reshape, vec![x], out)
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let n = match *self.value(x).shape() {
            [n] => n,
            ref s => return Err(Error::ShapeMismatch(format!("slice: input shape {s:?}"))),
        };
        if len == 0 || start + len > n {
            return Err(Error::ShapeMismatch(format!(
                "slice: [{start}, {start}+{len}) out of [0, {n})"
            )));
        }
        let out = Tensor::from_vec(&[len], self.value(x).data()[start..start + len].to_vec())?;
        self.push(Op::Slice { start, len }, vec![x], out)
    }

    /// Tile a feature vector next to every point: rows are `[f ; p_i]`.
    pub fn point_features(&mut self, f: NodeId, p: NodeId) -> Result<NodeId> {
        let m = match *self.value(f).shape() {
            [m] => m,
            ref s => {
                return Err(Error::ShapeMismatch(format!(
                    "point_features: feature shape {s:?}"
                )))
            }
        };
        let (rows, cols) = as_2d(self.value(p), "point_features")?;
        if cols != 3 {
            return Err(Error::ShapeMismatch(format!(
                "point_features: points must be [n, 3], got {:?}",
                self.value(p).shape()
            )));
        }
        let fv = self.value(f).data();
        let pv = self.value(p).data();
        let width = m + 3;
        let mut out = Vec::with_capacity(rows * width);
        for i in 0..rows {
            out.extend_from_slice(fv);
            out.extend_from_slice(&pv[i * 3..(i + 1) * 3]);
        }
        let out = Tensor::from_vec(&[rows, width], out)?;
        self.push(Op::PointFeatures, vec![f, p], out)
    }

    /// Backpropagate from a `[1]`-shaped loss node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>> {
        if self.value(loss).numel() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "backward: loss must be a single element, got {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = grads[i].clone() else { continue };
            self.propagate(i, &g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let node = &self.nodes[i];
        let ins = &node.inputs;
        let gd = g.data();
        match node.op {
            Op::Leaf => {}
            Op::Add => {
                self.accumulate(grads, ins[0], gd);
                self.accumulate(grads, ins[1], gd);
            }
            Op::Sub => {
                self.accumulate(grads, ins[0], gd);
                let neg: Vec<T> = gd.iter().map(|&v| -v).collect();
                self.accumulate(grads, ins[1], &neg);
            }
            Op::Mul => {
                let (a, b) = (self.value(ins[0]).data(), self.value(ins[1]).data());
                let da: Vec<T> = gd.iter().zip(b).map(|(&g, &y)| g * y).collect();
                let db: Vec<T> = gd.iter().zip(a).map(|(&g, &x)| g * x).collect();
                self.accumulate(grads, ins[0], &da);
                self.accumulate(grads, ins[1], &db);
            }
            Op::Scale(c) => {
                let cv = T::from_f64(c);
                let dx: Vec<T> = gd.iter().map(|&v| v * cv).collect();
                self.accumulate(grads, ins[0], &dx);
            }
            Op::AddScalar(_) => self.accumulate(grads, ins[0], gd),
            Op::Relu => {
                let x = self.value(ins[0]).data();
                let dx: Vec<T> = gd
                    .iter()
                    .zip(x)
                    .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
                    .collect();
                self.accumulate(grads, ins[0], &dx);
            }
            Op::Sigmoid => {
                let y = node.value.data();
                let dx: Vec<T> = gd
                    .iter()
                    .zip(y)
                    .map(|(&g, &y)| g * y * (T::one() - y))
                    .collect();
                self.accumulate(grads, ins[0], &dx);
            }
            Op::Exp => {
                let y = node.value.data();
                let dx: Vec<T> = gd.iter().zip(y).map(|(&g, &y)| g * y).collect();
                self.accumulate(grads, ins[0], &dx);
            }
            Op::Sum => {
                let dx = vec![gd[0]; self.value(ins[0]).numel()];
                self.accumulate(grads, ins[0], &dx);
            }
            Op::MeanRows => {
                let (r, c) = as_2d(self.value(ins[0]), "mean_rows grad")?;
                let inv = T::from_f64(1.0 / r as f64);
                let mut dx = vec![T::zero(); r * c];
                for i in 0..r {
                    for j in 0..c {
                        dx[i * c + j] = gd[j] * inv;
                    }
                }
                self.accumulate(grads, ins[0], &dx);
            }
            Op::RowMax => {
                let (r, c) = as_2d(self.value(ins[0]), "row_max grad")?;
                let x = self.value(ins[0]).data();
                let mut dx = vec![T::zero(); r * c];
                for i in 0..r {
                    let j = row_argmax(&x[i * c..(i + 1) * c]);
                    dx[i * c + j] = gd[i];
                }
                self.accumulate(grads, ins[0], &dx);
            }
            Op::StackRows => {
                let n = self.value(ins[0]).numel();
                for (row, &input) in ins.iter().enumerate() {
                    self.accumulate(grads, input, &gd[row * n..(row + 1) * n]);
                }
            }
            Op::Linear => {
                let (x, w) = (self.value(ins[0]), self.value(ins[1]));
                let n = *x.shape().last().unwrap();
                let rows = x.numel() / n;
                let m = w.shape()[0];
                // dX = G W, dW = Gᵀ X, db = column sums of G.
                let dx = matmul(gd, w.data(), rows, m, n);
                let dw = matmul_at(gd, x.data(), m, rows, n);
                let mut db = vec![T::zero(); m];
                for i in 0..rows {
                    for j in 0..m {
                        db[j] = db[j] + gd[i * m + j];
                    }
                }
                self.accumulate(grads, ins[0], &dx);
                self.accumulate(grads, ins[1], &dw);
                self.accumulate(grads, ins[2], &db);
            }
            Op::Conv3d { stride, padding } => {
                self.conv3d_backward(ins, &node.value, gd, stride, padding, grads)?;
            }
            Op::Reshape => self.accumulate(grads, ins[0], gd),
            Op::Slice { start, len } => {
                let mut dx = vec![T::zero(); self.value(ins[0]).numel()];
                dx[start..start + len].copy_from_slice(gd);
                self.accumulate(grads, ins[0], &dx);
            }
            Op::PointFeatures => {
                let m = self.value(ins[0]).numel();
                let rows = self.value(ins[1]).shape()[0];
                let width = m + 3;
                let mut df = vec![T::zero(); m];
                let mut dp = vec![T::zero(); rows * 3];
                for i in 0..rows {
                    for j in 0..m {
                        df[j] = df[j] + gd[i * width + j];
                    }
                    dp[i * 3..(i + 1) * 3].copy_from_slice(&gd[i * width + m..(i + 1) * width]);
                }
                self.accumulate(grads, ins[0], &df);
                self.accumulate(grads, ins[1], &dp);
            }
        }
        Ok(())
    }

    fn conv3d_backward(
        &self,
        ins: &[NodeId],
        out: &Tensor<T>,
        gd: &[T],
        stride: usize,
        padding: usize,
        grads: &mut [Option<Tensor<T>>],
    ) -> Result<()> {
        let (xv, wv) = (self.value(ins[0]), self.value(ins[1]));
        let (ci, d, h, wd) = match *xv.shape() {
            [a, b, c, e] => (a, b, c, e),
            _ => unreachable!("validated at forward"),
        };
        let (co, k) = (wv.shape()[0], wv.shape()[2]);
        let (od, oh, ow) = (out.shape()[1], out.shape()[2], out.shape()[3]);
        let (x, w) = (xv.data(), wv.data());
        let mut dx = vec![T::zero(); x.len()];
        let mut dw = vec![T::zero(); w.len()];
        let mut db = vec![T::zero(); co];
        for c_out in 0..co {
            for zo in 0..od {
                for yo in 0..oh {
                    for xo in 0..ow {
                        let g = gd[((c_out * od + zo) * oh + yo) * ow + xo];
                        db[c_out] = db[c_out] + g;
                        for c_in in 0..ci {
                            for kz in 0..k {
                                let zi = (zo * stride + kz) as isize - padding as isize;
                                if zi < 0 || zi as usize >= d {
                                    continue;
                                }
                                for ky in 0..k {
                                    let yi = (yo * stride + ky) as isize - padding as isize;
                                    if yi < 0 || yi as usize >= h {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let xi =
                                            (xo * stride + kx) as isize - padding as isize;
                                        if xi < 0 || xi as usize >= wd {
                                            continue;
                                        }
                                        let xidx = ((c_in * d + zi as usize) * h
                                            + yi as usize)
                                            * wd
                                            + xi as usize;
                                        let widx = (((c_out * ci + c_in) * k + kz) * k + ky)
                                            * k
                                            + kx;
                                        dx[xidx] = dx[xidx] + g * w[widx];
                                        dw[widx] = dw[widx] + g * x[xidx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.accumulate(grads, ins[0], &dx);
        self.accumulate(grads, ins[1], &dw);
        self.accumulate(grads, ins[2], &db);
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], id: NodeId, contribution: &[T]) {
        if !self.nodes[id.0].needs_grad {
            return;
        }
        match &mut grads[id.0] {
            Some(existing) => {
                for (dst, &src) in existing.data_mut().iter_mut().zip(contribution) {
                    *dst = *dst + src;
                }
            }
            slot @ None => {
                let shape = self.nodes[id.0].value.shape().to_vec();
                *slot = Some(
                    Tensor::from_vec(&shape, contribution.to_vec())
                        .expect("gradient matches value shape"),
                );
            }
        }
    }
}

fn map<T: Scalar>(x: &Tensor<T>, f: impl Fn(T) -> T) -> Tensor<T> {
    Tensor::from_vec(x.shape(), x.data().iter().map(|&v| f(v)).collect())
        .expect("map preserves shape")
}

fn zip<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.shape(), data).expect("zip preserves shape")
}

fn as_2d<T: Scalar>(t: &Tensor<T>, op: &str) -> Result<(usize, usize)> {
    match *t.shape() {
        [r, c] => Ok((r, c)),
        ref s => Err(Error::ShapeMismatch(format!("{op}: expected 2-D, got {s:?}"))),
    }
}

/// First index of the row maximum, so ties resolve deterministically.
fn row_argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Overflow-safe logistic function.
fn sigmoid_stable<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
