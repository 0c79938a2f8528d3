//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s. Node ids are
//! assigned in creation order, so the id order is already a topological order
//! of the graph and [`Tape::backward`] only has to walk the ids downwards.

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use super::matrix::{dot, Matrix};
use super::{NumericsError, COSINE_EPS, LOG_CLIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Parameter,
    Constant,
    MatMul,
    Transpose,
    Add,
    AddRow,
    Sub,
    Mul,
    Scale,
    AddScalar,
    Sigmoid,
    Tanh,
    Relu,
    RowSoftmax,
    RowMean,
    Sum,
    Cosine,
    SoftmaxCrossEntropy,
    SelectRows,
    ConcatRows,
}

#[derive(Debug)]
enum Op {
    Parameter,
    Constant,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    RowSoftmax(usize),
    RowMean(usize),
    Sum(usize),
    Cosine(usize, usize),
    SoftmaxCrossEntropy {
        logits: usize,
        labels: Rc<[usize]>,
        probs: Matrix,
    },
    SelectRows(usize, Rc<[usize]>),
    ConcatRows(Vec<usize>),
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Parameter => OpKind::Parameter,
            Op::Constant => OpKind::Constant,
            Op::MatMul(..) => OpKind::MatMul,
            Op::Transpose(..) => OpKind::Transpose,
            Op::Add(..) => OpKind::Add,
            Op::AddRow(..) => OpKind::AddRow,
            Op::Sub(..) => OpKind::Sub,
            Op::Mul(..) => OpKind::Mul,
            Op::Scale(..) => OpKind::Scale,
            Op::AddScalar(..) => OpKind::AddScalar,
            Op::Sigmoid(..) => OpKind::Sigmoid,
            Op::Tanh(..) => OpKind::Tanh,
            Op::Relu(..) => OpKind::Relu,
            Op::RowSoftmax(..) => OpKind::RowSoftmax,
            Op::RowMean(..) => OpKind::RowMean,
            Op::Sum(..) => OpKind::Sum,
            Op::Cosine(..) => OpKind::Cosine,
            Op::SoftmaxCrossEntropy { .. } => OpKind::SoftmaxCrossEntropy,
            Op::SelectRows(..) => OpKind::SelectRows,
            Op::ConcatRows(..) => OpKind::ConcatRows,
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Matrix,
}

/// Recording of one differentiable computation. Confined to a single thread.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}", self.id)
    }
}

/// Gradients of a scalar root with respect to every node of the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient for `var`, zeros when the root does not depend on it.
    pub fn wrt(&self, var: Var<'_>) -> Matrix {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[var.id];
                Matrix::zeros(r, c)
            }
        }
    }

    /// True when some path from the root reaches `var`.
    pub fn reaches(&self, var: Var<'_>) -> bool {
        self.grads[var.id].is_some()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Kinds of all recorded operations, in recording order.
    pub fn op_kinds(&self) -> Vec<OpKind> {
        self.nodes.borrow().iter().map(|n| n.op.kind()).collect()
    }

    /// Trainable leaf.
    pub fn parameter(&self, value: Matrix) -> Var<'_> {
        self.push_unchecked(Op::Parameter, value)
    }

    /// Leaf that the caller does not intend to differentiate.
    pub fn constant(&self, value: Matrix) -> Var<'_> {
        self.push_unchecked(Op::Constant, value)
    }

    fn push_unchecked(&self, op: Op, value: Matrix) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op, value });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn push(&self, op: Op, value: Matrix) -> Result<Var<'_>, NumericsError> {
        if !value.is_finite() {
            return Err(NumericsError::NonFinite {
                op: format!("{:?}", op.kind()),
            });
        }
        Ok(self.push_unchecked(op, value))
    }

    fn value_of(&self, id: usize) -> Ref<'_, Matrix> {
        Ref::map(self.nodes.borrow(), |n| &n[id].value)
    }

    /// Reverse sweep from a 1x1 root.
    pub fn backward(&self, root: Var<'_>) -> Result<Gradients, NumericsError> {
        assert!(
            std::ptr::eq(self, root.tape),
            "root belongs to another tape"
        );
        let nodes = self.nodes.borrow();
        let shape = nodes[root.id].value.shape();
        if shape != (1, 1) {
            return Err(NumericsError::NonScalarRoot {
                rows: shape.0,
                cols: shape.1,
            });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[root.id] = Some(Matrix::scalar(1.0));

        for id in (0..=root.id).rev() {
            let Some(upstream) = grads[id].take() else {
                continue;
            };
            let node = &nodes[id];
            for (input, contribution) in local_gradients(&nodes, node, &upstream) {
                match &mut grads[input] {
                    Some(g) => g.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            }
            grads[id] = Some(upstream);
        }

        Ok(Gradients {
            grads,
            shapes: nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

fn guarded_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows())
        .map(|r| dot(m.row(r), m.row(r)).sqrt().max(COSINE_EPS))
        .collect()
}

fn cosine_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let na = guarded_norms(a);
    let nb = guarded_norms(b);
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out.set(i, j, dot(a.row(i), b.row(j)) / (na[i] * nb[j]));
        }
    }
    out
}

/// d cos / d a for every row pair, contracted with the upstream gradient.
fn cosine_grad_left(a: &Matrix, b: &Matrix, upstream: &Matrix) -> Matrix {
    let na = guarded_norms(a);
    let nb = guarded_norms(b);
    let mut grad = Matrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        let ai = a.row(i);
        // the norm is clamped below COSINE_EPS, where it no longer depends on a
        let live = dot(ai, ai).sqrt() > COSINE_EPS;
        for j in 0..b.rows() {
            let g = upstream.get(i, j);
            if g == 0.0 {
                continue;
            }
            let bj = b.row(j);
            let denom = na[i] * nb[j];
            let cos = dot(ai, bj) / denom;
            let out = grad.row_mut(i);
            for k in 0..out.len() {
                let mut d = bj[k] / denom;
                if live {
                    d -= cos * ai[k] / (na[i] * na[i]);
                }
                out[k] += g * d;
            }
        }
    }
    grad
}

fn local_gradients(nodes: &[Node], node: &Node, up: &Matrix) -> Vec<(usize, Matrix)> {
    let val = |id: usize| &nodes[id].value;
    match &node.op {
        Op::Parameter | Op::Constant => vec![],
        Op::MatMul(a, b) => {
            let ga = up.matmul(&val(*b).transpose()).expect("shapes checked");
            let gb = val(*a).transpose().matmul(up).expect("shapes checked");
            vec![(*a, ga), (*b, gb)]
        }
        Op::Transpose(a) => vec![(*a, up.transpose())],
        Op::Add(a, b) => vec![(*a, up.clone()), (*b, up.clone())],
        Op::AddRow(a, b) => {
            let mut gb = Matrix::zeros(1, up.cols());
            for r in 0..up.rows() {
                for (g, u) in gb.row_mut(0).iter_mut().zip(up.row(r)) {
                    *g += u;
                }
            }
            vec![(*a, up.clone()), (*b, gb)]
        }
        Op::Sub(a, b) => vec![(*a, up.clone()), (*b, up.scale(-1.0))],
        Op::Mul(a, b) => {
            let ga = up.zip_map(val(*b), |u, y| u * y);
            let gb = up.zip_map(val(*a), |u, x| u * x);
            vec![(*a, ga), (*b, gb)]
        }
        Op::Scale(a, s) => vec![(*a, up.scale(*s))],
        Op::AddScalar(a) => vec![(*a, up.clone())],
        Op::Sigmoid(a) => vec![(*a, up.zip_map(&node.value, |u, y| u * y * (1.0 - y)))],
        Op::Tanh(a) => vec![(*a, up.zip_map(&node.value, |u, y| u * (1.0 - y * y)))],
        Op::Relu(a) => vec![(
            *a,
            up.zip_map(val(*a), |u, x| if x > 0.0 { u } else { 0.0 }),
        )],
        Op::RowSoftmax(a) => {
            let y = &node.value;
            let mut g = Matrix::zeros(y.rows(), y.cols());
            for r in 0..y.rows() {
                let yr = y.row(r);
                let ur = up.row(r);
                let inner = dot(yr, ur);
                for (k, out) in g.row_mut(r).iter_mut().enumerate() {
                    *out = yr[k] * (ur[k] - inner);
                }
            }
            vec![(*a, g)]
        }
        Op::RowMean(a) => {
            let input = val(*a);
            let n = input.rows() as f64;
            let mut g = Matrix::zeros(input.rows(), input.cols());
            for r in 0..input.rows() {
                for (out, u) in g.row_mut(r).iter_mut().zip(up.row(0)) {
                    *out = u / n;
                }
            }
            vec![(*a, g)]
        }
        Op::Sum(a) => {
            let (r, c) = val(*a).shape();
            vec![(*a, Matrix::filled(r, c, up.item()))]
        }
        Op::Cosine(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            let ga = cosine_grad_left(va, vb, up);
            let gb = cosine_grad_left(vb, va, &up.transpose());
            vec![(*a, ga), (*b, gb)]
        }
        Op::SoftmaxCrossEntropy {
            logits,
            labels,
            probs,
        } => {
            let n = labels.len() as f64;
            let scale = up.item() / n;
            let mut g = Matrix::zeros(probs.rows(), probs.cols());
            for (r, &y) in labels.iter().enumerate() {
                // clipped log has zero slope
                if probs.get(r, y) < LOG_CLIP {
                    continue;
                }
                for (k, out) in g.row_mut(r).iter_mut().enumerate() {
                    let target = if k == y { 1.0 } else { 0.0 };
                    *out = scale * (probs.get(r, k) - target);
                }
            }
            vec![(*logits, g)]
        }
        Op::SelectRows(a, idx) => {
            let input = val(*a);
            let mut g = Matrix::zeros(input.rows(), input.cols());
            for (r, &i) in idx.iter().enumerate() {
                for (out, u) in g.row_mut(i).iter_mut().zip(up.row(r)) {
                    *out += u;
                }
            }
            vec![(*a, g)]
        }
        Op::ConcatRows(parts) => {
            let mut offset = 0;
            parts
                .iter()
                .map(|&p| {
                    let rows = val(p).rows();
                    let idx: Vec<usize> = (offset..offset + rows).collect();
                    offset += rows;
                    (p, up.select_rows(&idx))
                })
                .collect()
        }
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, Matrix> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value().shape()
    }

    fn same_tape(&self, other: &Var<'_>) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "vars from different tapes"
        );
    }

    fn check_same_shape(&self, other: &Var<'_>, op: &'static str) -> Result<(), NumericsError> {
        self.same_tape(other);
        let (l, r) = (self.shape(), other.shape());
        if l != r {
            return Err(NumericsError::DimensionMismatch {
                op,
                left: l,
                right: r,
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.same_tape(&other);
        let out = self.value().matmul(&other.value())?;
        self.tape.push(Op::MatMul(self.id, other.id), out)
    }

    pub fn transpose(&self) -> Result<Var<'t>, NumericsError> {
        let out = self.value().transpose();
        self.tape.push(Op::Transpose(self.id), out)
    }

    pub fn add(&self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.check_same_shape(&other, "add")?;
        let out = self.value().zip_map(&other.value(), |a, b| a + b);
        self.tape.push(Op::Add(self.id, other.id), out)
    }

    /// Adds a 1 x cols row to every row of `self` (bias broadcast).
    pub fn add_row(&self, row: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.same_tape(&row);
        let (a, b) = (self.value(), row.value());
        if b.rows() != 1 || b.cols() != a.cols() {
            return Err(NumericsError::DimensionMismatch {
                op: "add_row",
                left: a.shape(),
                right: b.shape(),
            });
        }
        let mut out = a.clone();
        for r in 0..out.rows() {
            for (o, v) in out.row_mut(r).iter_mut().zip(b.row(0)) {
                *o += v;
            }
        }
        drop((a, b));
        self.tape.push(Op::AddRow(self.id, row.id), out)
    }

    pub fn sub(&self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.check_same_shape(&other, "sub")?;
        let out = self.value().zip_map(&other.value(), |a, b| a - b);
        self.tape.push(Op::Sub(self.id, other.id), out)
    }

    /// Elementwise product.
    pub fn mul(&self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.check_same_shape(&other, "mul")?;
        let out = self.value().zip_map(&other.value(), |a, b| a * b);
        self.tape.push(Op::Mul(self.id, other.id), out)
    }

    pub fn scale(&self, s: f64) -> Result<Var<'t>, NumericsError> {
        let out = self.value().scale(s);
        self.tape.push(Op::Scale(self.id, s), out)
    }

    pub fn add_scalar(&self, s: f64) -> Result<Var<'t>, NumericsError> {
        let out = self.value().map(|v| v + s);
        self.tape.push(Op::AddScalar(self.id), out)
    }

    pub fn sigmoid(&self) -> Result<Var<'t>, NumericsError> {
        let out = self.value().map(sigmoid);
        self.tape.push(Op::Sigmoid(self.id), out)
    }

    pub fn tanh(&self) -> Result<Var<'t>, NumericsError> {
        let out = self.value().map(f64::tanh);
        self.tape.push(Op::Tanh(self.id), out)
    }

    pub fn relu(&self) -> Result<Var<'t>, NumericsError> {
        let out = self.value().map(|v| v.max(0.0));
        self.tape.push(Op::Relu(self.id), out)
    }

    /// Softmax along each row, with the row maximum subtracted first.
    pub fn row_softmax(&self) -> Result<Var<'t>, NumericsError> {
        let v = self.value();
        if v.rows() == 0 || v.cols() == 0 {
            return Err(NumericsError::Empty { op: "row_softmax" });
        }
        let out = softmax_rows(&v);
        drop(v);
        self.tape.push(Op::RowSoftmax(self.id), out)
    }

    /// Mean over rows, giving a 1 x cols row.
    pub fn row_mean(&self) -> Result<Var<'t>, NumericsError> {
        let v = self.value();
        if v.rows() == 0 {
            return Err(NumericsError::EmptyClass);
        }
        let mut out = Matrix::zeros(1, v.cols());
        for r in 0..v.rows() {
            for (o, x) in out.row_mut(0).iter_mut().zip(v.row(r)) {
                *o += x;
            }
        }
        let out = out.scale(1.0 / v.rows() as f64);
        drop(v);
        self.tape.push(Op::RowMean(self.id), out)
    }

    pub fn sum(&self) -> Result<Var<'t>, NumericsError> {
        let out = Matrix::scalar(self.value().sum());
        self.tape.push(Op::Sum(self.id), out)
    }

    /// Cosine similarity between every row of `self` and every row of `other`
    /// (rows x other.rows). Norms are clamped below at `COSINE_EPS`.
    pub fn cosine(&self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        if a.cols() != b.cols() {
            return Err(NumericsError::DimensionMismatch {
                op: "cosine",
                left: a.shape(),
                right: b.shape(),
            });
        }
        let out = cosine_matrix(&a, &b);
        drop((a, b));
        self.tape.push(Op::Cosine(self.id, other.id), out)
    }

    /// Mean over rows of `-log softmax(row)[label]`, with the probability
    /// clipped below at `LOG_CLIP`.
    pub fn softmax_cross_entropy(&self, labels: &[usize]) -> Result<Var<'t>, NumericsError> {
        let logits = self.value();
        if logits.rows() != labels.len() || logits.rows() == 0 {
            return Err(NumericsError::DimensionMismatch {
                op: "softmax_cross_entropy",
                left: logits.shape(),
                right: (labels.len(), 1),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
            return Err(NumericsError::LabelOutOfRange {
                label: bad,
                classes: logits.cols(),
            });
        }
        let probs = softmax_rows(&logits);
        drop(logits);
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(r, &y)| -probs.get(r, y).clamp(LOG_CLIP, 1.0).ln())
            .sum();
        let out = Matrix::scalar(total / labels.len() as f64);
        self.tape.push(
            Op::SoftmaxCrossEntropy {
                logits: self.id,
                labels: labels.into(),
                probs,
            },
            out,
        )
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Var<'t>, NumericsError> {
        let v = self.value();
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.rows()) {
            return Err(NumericsError::RowOutOfRange {
                row: bad,
                rows: v.rows(),
            });
        }
        let out = v.select_rows(indices);
        drop(v);
        self.tape.push(Op::SelectRows(self.id, indices.into()), out)
    }

    pub fn concat_rows(parts: &[Var<'t>]) -> Result<Var<'t>, NumericsError> {
        let first = parts
            .first()
            .ok_or(NumericsError::Empty { op: "concat_rows" })?;
        let tape = first.tape;
        let values: Vec<Ref<'_, Matrix>> = parts
            .iter()
            .map(|p| {
                first.same_tape(p);
                p.value()
            })
            .collect();
        let refs: Vec<&Matrix> = values.iter().map(|r| &**r).collect();
        let out = Matrix::vstack(&refs)?;
        drop(refs);
        drop(values);
        tape.push(Op::ConcatRows(parts.iter().map(|p| p.id).collect()), out)
    }
}

/// Plain (unrecorded) cosine between two vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let nu = dot(u, u).sqrt().max(COSINE_EPS);
    let nv = dot(v, v).sqrt().max(COSINE_EPS);
    dot(u, v) / (nu * nv)
}
