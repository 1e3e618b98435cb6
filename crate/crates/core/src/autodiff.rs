//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! Operations are recorded on a [`Tape`] in execution order, so the tape is
//! always topologically sorted and [`Tape::backward`] is a single reverse
//! sweep. Gradients accumulate (`+=`) when a node feeds several consumers.
//!
//! Every forward op checks its output for NaN/Inf and fails immediately.

use rand::Rng;

use crate::error::TensorError;
use crate::tensor::{axis_split, matmul_raw, transpose_raw, Tensor};

type Result<T> = std::result::Result<T, TensorError>;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Sigmoid(Var),
    Tanh(Var),
    Log(Var),
    Softmax(Var, usize),
    LogSoftmax(Var, usize),
    Transpose(Var),
    Concat(Vec<Var>, usize),
    SumAll(Var),
    SumAxis(Var, usize),
    MeanAxis(Var, usize),
    Row(Var, usize),
    Pick(Var, usize),
    Mask(Var, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a computation for reverse-mode differentiation.
///
/// A tape is single-writer. Separate tapes share nothing and can run on
/// different threads.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn is_leaf(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Leaf)
    }

    /// Clears the backward marker so the tape may be differentiated again.
    pub fn reset(&mut self) {
        self.backward_done = false;
    }

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op) -> Result<Var> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: op_name });
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> Result<Var> {
        self.push("leaf", value, Op::Leaf)
    }

    /// A non-differentiable input; it never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push("constant", value, Op::Constant)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2("matmul")?;
        let (k2, n) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return Err(self.shape_err("matmul", a, b));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        self.push("matmul", Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip("add", a, b, |x, y| x + y)?;
        self.push("add", out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip("sub", a, b, |x, y| x - y)?;
        self.push("sub", out, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip("mul", a, b, |x, y| x * y)?;
        self.push("mul", out, Op::Mul(a, b))
    }

    /// Adds a `1 x n` row to every row of an `m x n` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (m, n) = self.value(a).dims2("add_row")?;
        let (r, n2) = self.value(row).dims2("add_row")?;
        if r != 1 || n != n2 {
            return Err(self.shape_err("add_row", a, row));
        }
        let bias = self.value(row).data();
        let mut out = self.value(a).data().to_vec();
        for i in 0..m {
            for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(bias) {
                *o += b;
            }
        }
        self.push("add_row", Tensor::from_parts(vec![m, n], out), Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * k);
        self.push("scale", out, Op::Scale(a, k))
    }

    /// `a + c` for a constant scalar `c`.
    pub fn offset(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x + c);
        self.push("offset", out, Op::Offset(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        });
        self.push("sigmoid", out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push("tanh", out, Op::Tanh(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(bad) = self.value(a).data().iter().find(|&&x| x <= 0.0) {
            return Err(TensorError::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
        let out = self.value(a).map(f64::ln);
        self.push("log", out, Op::Log(a))
    }

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let out = softmax_along(self.value(a), axis, false)?;
        self.push("softmax", out, Op::Softmax(a, axis))
    }

    pub fn log_softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let out = softmax_along(self.value(a), axis, true)?;
        self.push("log_softmax", out, Op::LogSoftmax(a, axis))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.value(a).dims2("transpose")?;
        let out = transpose_raw(self.value(a).data(), r, c);
        self.push("transpose", Tensor::from_parts(vec![c, r], out), Op::Transpose(a))
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let first = xs.first().ok_or_else(|| TensorError::InvalidShape {
            op: "concat",
            shape: vec![],
            detail: "no inputs".into(),
        })?;
        let base = self.shape(*first).to_vec();
        let (outer, _, inner) = axis_split("concat", &base, axis)?;
        let mut total = 0;
        for &x in xs {
            let s = self.shape(x);
            let compatible =
                s.len() == base.len() && s.iter().zip(&base).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(self.shape_err("concat", *first, x));
            }
            total += s[axis];
        }
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &x in xs {
                let ext = self.shape(x)[axis];
                let chunk = ext * inner;
                out.extend_from_slice(&self.value(x).data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        self.push("concat", Tensor::from_parts(shape, out), Op::Concat(xs.to_vec(), axis))
    }

    /// Sum of all elements, as a one-element tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).sum();
        self.push("sum", Tensor::scalar(s), Op::SumAll(a))
    }

    /// Sum along `axis`, keeping that axis with extent 1.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let out = reduce_along(self.value(a), axis, 1.0)?;
        self.push("sum_axis", out, Op::SumAxis(a, axis))
    }

    /// Mean along `axis`, keeping that axis with extent 1.
    pub fn mean_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let extent = *self.shape(a).get(axis).unwrap_or(&1) as f64;
        let out = reduce_along(self.value(a), axis, 1.0 / extent)?;
        self.push("mean_axis", out, Op::MeanAxis(a, axis))
    }

    /// Row `index` of a `V x d` table, as a `1 x d` row.
    pub fn embedding_lookup(&mut self, table: Var, index: usize) -> Result<Var> {
        let (v, d) = self.value(table).dims2("embedding_lookup")?;
        if index >= v {
            return Err(TensorError::Index {
                op: "embedding_lookup",
                index,
                extent: v,
            });
        }
        let row = self.value(table).row_slice(index).to_vec();
        self.push(
            "embedding_lookup",
            Tensor::from_parts(vec![1, d], row),
            Op::Row(table, index),
        )
    }

    /// Element at a flat row-major index, as a one-element tensor.
    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let n = self.value(a).numel();
        if index >= n {
            return Err(TensorError::Index {
                op: "pick",
                index,
                extent: n,
            });
        }
        let v = self.value(a).data()[index];
        self.push("pick", Tensor::scalar(v), Op::Pick(a, index))
    }

    /// Inverted dropout. With `rng == None` (evaluation) or `rate == 0` the
    /// input handle is returned unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: Option<&mut R>) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::Config(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        let Some(rng) = rng else { return Ok(a) };
        if rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(a).numel())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let x = self.value(a);
        let out = Tensor::from_parts(
            x.shape().to_vec(),
            x.data().iter().zip(&mask).map(|(v, m)| v * m).collect(),
        );
        self.push("dropout", out, Op::Mask(a, mask))
    }

    fn zip(&self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(self.shape_err(op, a, b));
        }
        Ok(Tensor::from_parts(
            x.shape().to_vec(),
            x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect(),
        ))
    }

    fn shape_err(&self, op: &'static str, a: Var, b: Var) -> TensorError {
        TensorError::Shape {
            op,
            lhs: self.shape(a).to_vec(),
            rhs: self.shape(b).to_vec(),
        }
    }

    /// Back-propagates from a one-element `loss`.
    ///
    /// Fails if the tape was already differentiated and not [`reset`](Self::reset).
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.backward_done {
            return Err(TensorError::Backward(
                "backward already ran on this tape; call reset() first".into(),
            ));
        }
        if loss.0 >= self.nodes.len() {
            return Err(TensorError::Backward("loss is not on this tape".into()));
        }
        if self.value(loss).numel() != 1 {
            return Err(TensorError::InvalidShape {
                op: "backward",
                shape: self.shape(loss).to_vec(),
                detail: "loss must be a scalar".into(),
            });
        }
        self.backward_done = true;

        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::filled(self.shape(loss), 1.0));

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[id];
        let y = &node.value;
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2("matmul").unwrap();
                let n = self.value(*b).shape()[1];
                let bt = transpose_raw(self.value(*b).data(), k, n);
                let ga = matmul_raw(g.data(), &bt, m, n, k);
                let at = transpose_raw(self.value(*a).data(), m, k);
                let gb = matmul_raw(&at, g.data(), k, m, n);
                self.accumulate(grads, *a, Tensor::from_parts(vec![m, k], ga));
                self.accumulate(grads, *b, Tensor::from_parts(vec![k, n], gb));
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let ga = elementwise(g, self.value(*b), |p, q| p * q);
                let gb = elementwise(g, self.value(*a), |p, q| p * q);
                self.accumulate(grads, *a, ga);
                self.accumulate(grads, *b, gb);
            }
            Op::AddRow(a, row) => {
                let n = self.shape(*row)[1];
                let mut gr = vec![0.0; n];
                for chunk in g.data().chunks(n) {
                    for (acc, v) in gr.iter_mut().zip(chunk) {
                        *acc += v;
                    }
                }
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *row, Tensor::from_parts(vec![1, n], gr));
            }
            Op::Scale(a, k) => self.accumulate(grads, *a, g.map(|v| v * k)),
            Op::Offset(a) => self.accumulate(grads, *a, g.clone()),
            Op::Sigmoid(a) => self.accumulate(grads, *a, elementwise(g, y, |gv, s| gv * s * (1.0 - s))),
            Op::Tanh(a) => self.accumulate(grads, *a, elementwise(g, y, |gv, t| gv * (1.0 - t * t))),
            Op::Log(a) => self.accumulate(grads, *a, elementwise(g, self.value(*a), |gv, x| gv / x)),
            Op::Softmax(a, axis) => {
                let (outer, ext, inner) = axis_split("softmax", y.shape(), *axis).unwrap();
                let mut gx = vec![0.0; y.numel()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| (o * ext + j) * inner + i;
                        let dot: f64 = (0..ext).map(|j| g.data()[idx(j)] * y.data()[idx(j)]).sum();
                        for j in 0..ext {
                            gx[idx(j)] = y.data()[idx(j)] * (g.data()[idx(j)] - dot);
                        }
                    }
                }
                self.accumulate(grads, *a, Tensor::from_parts(y.shape().to_vec(), gx));
            }
            Op::LogSoftmax(a, axis) => {
                let (outer, ext, inner) = axis_split("log_softmax", y.shape(), *axis).unwrap();
                let mut gx = vec![0.0; y.numel()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| (o * ext + j) * inner + i;
                        let gsum: f64 = (0..ext).map(|j| g.data()[idx(j)]).sum();
                        for j in 0..ext {
                            gx[idx(j)] = g.data()[idx(j)] - y.data()[idx(j)].exp() * gsum;
                        }
                    }
                }
                self.accumulate(grads, *a, Tensor::from_parts(y.shape().to_vec(), gx));
            }
            Op::Transpose(a) => {
                let (r, c) = y.dims2("transpose").unwrap();
                let gx = transpose_raw(g.data(), r, c);
                self.accumulate(grads, *a, Tensor::from_parts(vec![c, r], gx));
            }
            Op::Concat(xs, axis) => {
                let (outer, total, inner) = axis_split("concat", y.shape(), *axis).unwrap();
                let mut offset = 0;
                for &x in xs {
                    let ext = self.shape(x)[*axis];
                    let mut gx = Vec::with_capacity(outer * ext * inner);
                    for o in 0..outer {
                        let start = (o * total + offset) * inner;
                        gx.extend_from_slice(&g.data()[start..start + ext * inner]);
                    }
                    offset += ext;
                    self.accumulate(grads, x, Tensor::from_parts(self.shape(x).to_vec(), gx));
                }
            }
            Op::SumAll(a) => {
                let gv = g.data()[0];
                self.accumulate(grads, *a, Tensor::filled(self.shape(*a), gv));
            }
            Op::SumAxis(a, axis) | Op::MeanAxis(a, axis) => {
                let shape = self.shape(*a).to_vec();
                let (outer, ext, inner) = axis_split("reduce", &shape, *axis).unwrap();
                let k = if matches!(node.op, Op::MeanAxis(..)) {
                    1.0 / ext as f64
                } else {
                    1.0
                };
                let mut gx = vec![0.0; outer * ext * inner];
                for o in 0..outer {
                    for j in 0..ext {
                        for i in 0..inner {
                            gx[(o * ext + j) * inner + i] = g.data()[o * inner + i] * k;
                        }
                    }
                }
                self.accumulate(grads, *a, Tensor::from_parts(shape, gx));
            }
            Op::Row(table, index) => {
                let shape = self.shape(*table).to_vec();
                let d = shape[1];
                let mut gx = Tensor::zeros(&shape);
                gx.data_mut()[index * d..(index + 1) * d].copy_from_slice(g.data());
                self.accumulate(grads, *table, gx);
            }
            Op::Pick(a, index) => {
                let mut gx = Tensor::zeros(self.shape(*a));
                gx.data_mut()[*index] = g.data()[0];
                self.accumulate(grads, *a, gx);
            }
            Op::Mask(a, mask) => {
                let gx = Tensor::from_parts(
                    g.shape().to_vec(),
                    g.data().iter().zip(mask).map(|(v, m)| v * m).collect(),
                );
                self.accumulate(grads, *a, gx);
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if matches!(self.nodes[v.0].op, Op::Constant) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }
}

fn elementwise(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::from_parts(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&p, &q)| f(p, q)).collect(),
    )
}

fn softmax_along(x: &Tensor, axis: usize, log: bool) -> Result<Tensor> {
    let op = if log { "log_softmax" } else { "softmax" };
    let (outer, ext, inner) = axis_split(op, x.shape(), axis)?;
    let d = x.data();
    let mut out = vec![0.0; x.numel()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |j: usize| (o * ext + j) * inner + i;
            let max = (0..ext).map(|j| d[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = (0..ext).map(|j| (d[idx(j)] - max).exp()).sum();
            let log_z = z.ln();
            for j in 0..ext {
                let shifted = d[idx(j)] - max;
                out[idx(j)] = if log { shifted - log_z } else { shifted.exp() / z };
            }
        }
    }
    Ok(Tensor::from_parts(x.shape().to_vec(), out))
}

fn reduce_along(x: &Tensor, axis: usize, k: f64) -> Result<Tensor> {
    let (outer, ext, inner) = axis_split("reduce", x.shape(), axis)?;
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        for j in 0..ext {
            for i in 0..inner {
                out[o * inner + i] += x.data()[(o * ext + j) * inner + i];
            }
        }
    }
    for v in &mut out {
        *v *= k;
    }
    let mut shape = x.shape().to_vec();
    shape[axis] = 1;
    Ok(Tensor::from_parts(shape, out))
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `v`; zeros if `v` does not reach the loss.
    pub fn get(&self, v: Var) -> Tensor {
        match self.grads.get(v.0).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor {
        match self.grads.get_mut(v.0).and_then(Option::take) {
            Some(g) => g,
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }
}

/// Smallest magnitude used as the denominator of a relative error, so that
/// coordinates whose true gradient is zero are judged on absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Outcome of [`finite_diff_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error per input tensor.
    pub per_input: Vec<f64>,
    /// `(input, flat coordinate, relative error)` of the worst coordinate.
    pub worst: Option<(usize, usize, f64)>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.worst.map_or(0.0, |w| w.2)
    }
}

/// Compares tape gradients of `f` against central finite differences
/// `(f(x+eps) - f(x-eps)) / 2eps`, coordinate by coordinate.
///
/// `f` receives a fresh tape and one leaf per input and must return a scalar.
pub fn finite_diff_check<F, E>(inputs: &[Tensor], eps: f64, mut f: F) -> std::result::Result<GradCheckReport, E>
where
    F: FnMut(&mut Tape, &[Var]) -> std::result::Result<Var, E>,
    E: From<TensorError>,
{
    let mut eval = |values: &[Tensor]| -> std::result::Result<(Tape, Vec<Var>, Var), E> {
        let mut tape = Tape::new();
        let vars = values
            .iter()
            .map(|t| tape.leaf(t.clone()))
            .collect::<Result<Vec<_>>>()?;
        let out = f(&mut tape, &vars)?;
        Ok((tape, vars, out))
    };

    let (mut tape, vars, out) = eval(inputs)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.get(v)).collect();

    let mut work = inputs.to_vec();
    let mut per_input = Vec::with_capacity(inputs.len());
    let mut worst: Option<(usize, usize, f64)> = None;
    for (ti, grad) in analytic.iter().enumerate() {
        let mut tensor_worst: f64 = 0.0;
        for c in 0..grad.numel() {
            let orig = work[ti].data()[c];
            work[ti].data_mut()[c] = orig + eps;
            let (t, _, o) = eval(&work)?;
            let plus = t.value(o).data()[0];
            work[ti].data_mut()[c] = orig - eps;
            let (t, _, o) = eval(&work)?;
            let minus = t.value(o).data()[0];
            work[ti].data_mut()[c] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(grad.data()[c], numeric);
            tensor_worst = tensor_worst.max(err);
            if worst.is_none_or(|w| err > w.2) {
                worst = Some((ti, c, err));
            }
        }
        per_input.push(tensor_worst);
    }
    Ok(GradCheckReport { per_input, worst })
}
