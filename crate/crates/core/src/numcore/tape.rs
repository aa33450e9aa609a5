use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numcore::kernels::{self, add_into, axpy};
use crate::numcore::{ParamId, ParamStore, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A user-defined differentiable op.
///
/// `backward` returns one gradient per input (same length as that input),
/// given the upstream gradient of the output.
pub trait Function: Send + Sync {
    fn name(&self) -> &str;
    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor>;
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &[f64]) -> Vec<Vec<f64>>;
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Affine { src: Var, scale: f64 },
    AddBias(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Softplus(Var),
    Sum(Var),
    Dot(Var, Var),
    Row { src: Var, row: usize },
    Cols { src: Var, start: usize },
    VStack(Vec<Var>),
    HConcat(Vec<Var>),
    Custom { f: Arc<dyn Function>, inputs: Vec<Var> },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Ordered record of executed ops.
///
/// A tape belongs to one thread. Build a fresh tape (or [`Tape::clear`] an
/// old one) for every forward pass; gradients never carry over between
/// passes.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(Var, ParamId)>,
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

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.params.clear();
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn dims(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        self.value(v).dims2().ok_or_else(|| Error::dim(op, self.shape(v), &[]))
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A value that gradients do not flow into.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A free leaf whose gradient is tracked (used by gradient checks).
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Copies a parameter onto the tape; its gradient is reported under `id`.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let v = self.push(store.get(id).clone_value(), Op::Leaf, true);
        self.params.push((v, id));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, n) = self.dims(a, "matmul")?;
        let (n2, p) = self.dims(b, "matmul")?;
        if n != n2 {
            return Err(Error::dim("matmul", self.shape(a), self.shape(b)));
        }
        let mut out = vec![0.0; m * p];
        kernels::gemm_nn(self.value(a).data(), self.value(b).data(), &mut out, m, n, p);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::from_parts(vec![m, p], out), Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ`, the natural product for weights stored `out × in`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, n) = self.dims(a, "matmul_t")?;
        let (p, n2) = self.dims(b, "matmul_t")?;
        if n != n2 {
            return Err(Error::dim("matmul_t", self.shape(a), self.shape(b)));
        }
        let mut out = vec![0.0; m * p];
        kernels::gemm_nt(self.value(a).data(), self.value(b).data(), &mut out, m, n, p);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::from_parts(vec![m, p], out), Op::MatMulT(a, b), ng))
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim(name, self.shape(a), self.shape(b)));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.shape(a).to_vec();
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::from_parts(shape, out), op, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Hadamard product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "div", |x, y| x / y, Op::Div(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let out: Vec<f64> = t.data().iter().map(|&x| f(x)).collect();
        let shape = t.shape().to_vec();
        let ng = self.needs(a);
        self.push(Tensor::from_parts(shape, out), op, ng)
    }

    /// `scale · a + shift`
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        self.unary(a, |x| scale * x + shift, Op::Affine { src: a, scale })
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| c * x, Op::Affine { src: a, scale: c })
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x + c, Op::Affine { src: a, scale: 1.0 })
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 - x, Op::Affine { src: a, scale: -1.0 })
    }

    /// Adds the row vector `bias` to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.dims(a, "add_bias")?;
        if self.value(bias).len() != n {
            return Err(Error::dim("add_bias", self.shape(a), self.shape(bias)));
        }
        let b = self.value(bias).data();
        let mut out = self.value(a).data().to_vec();
        for r in 0..m {
            add_into(b, &mut out[r * n..(r + 1) * n]);
        }
        let ng = self.needs(a) || self.needs(bias);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::AddBias(a, bias), ng))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, kernels::sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, kernels::softplus, Op::Softplus(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    /// Inner product of two same-shape values, as a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim("dot", self.shape(a), self.shape(b)));
        }
        let s = kernels::dot(self.value(a).data(), self.value(b).data());
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b), ng))
    }

    /// Row `row` of a matrix, as a `1 × n` value.
    pub fn row(&mut self, src: Var, row: usize) -> Result<Var> {
        let (m, n) = self.dims(src, "row")?;
        if row >= m {
            return Err(Error::dim("row", self.shape(src), &[row]));
        }
        let data = self.value(src).row_slice(row).to_vec();
        let ng = self.needs(src);
        Ok(self.push(Tensor::from_parts(vec![1, n], data), Op::Row { src, row }, ng))
    }

    /// Columns `start..start + len` of every row.
    pub fn cols(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let (m, n) = self.dims(src, "cols")?;
        if len == 0 || start + len > n {
            return Err(Error::dim("cols", self.shape(src), &[start, len]));
        }
        let d = self.value(src).data();
        let mut out = Vec::with_capacity(m * len);
        for r in 0..m {
            out.extend_from_slice(&d[r * n + start..r * n + start + len]);
        }
        let ng = self.needs(src);
        Ok(self.push(Tensor::from_parts(vec![m, len], out), Op::Cols { src, start }, ng))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::Input("vstack of nothing".into()))?;
        let (_, n) = self.dims(first, "vstack")?;
        let mut rows = 0;
        let mut out = Vec::new();
        let mut ng = false;
        for &p in parts {
            let (m, c) = self.dims(p, "vstack")?;
            if c != n {
                return Err(Error::dim("vstack", self.shape(first), self.shape(p)));
            }
            rows += m;
            out.extend_from_slice(self.value(p).data());
            ng |= self.needs(p);
        }
        Ok(self.push(Tensor::from_parts(vec![rows, n], out), Op::VStack(parts.to_vec()), ng))
    }

    /// Places matrices with equal row counts side by side.
    pub fn hconcat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::Input("hconcat of nothing".into()))?;
        let (m, _) = self.dims(first, "hconcat")?;
        let mut widths = Vec::with_capacity(parts.len());
        let mut ng = false;
        for &p in parts {
            let (r, c) = self.dims(p, "hconcat")?;
            if r != m {
                return Err(Error::dim("hconcat", self.shape(first), self.shape(p)));
            }
            widths.push(c);
            ng |= self.needs(p);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for (&p, &c) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * c..(r + 1) * c]);
            }
        }
        Ok(self.push(Tensor::from_parts(vec![m, total], out), Op::HConcat(parts.to_vec()), ng))
    }

    /// Records a user-defined op.
    pub fn apply(&mut self, f: Arc<dyn Function>, inputs: &[Var]) -> Result<Var> {
        let values: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
        let out = f.forward(&values)?;
        let ng = inputs.iter().any(|&v| self.needs(v));
        Ok(self.push(
            out,
            Op::Custom {
                f,
                inputs: inputs.to_vec(),
            },
            ng,
        ))
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Returns the gradient of `loss` for every node that depends on a
    /// parameter or variable leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let params = self.params.iter().filter(|(v, _)| v.0 <= loss.0).copied().collect();
        Ok(Gradients { nodes: grads, params })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let n = self.nodes[v.0].value.len();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; n]))
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let val = |v: Var| self.nodes[v.0].value.data();
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                let (m, n) = self.value(a).dims2().unwrap();
                let p = self.value(b).dims2().unwrap().1;
                if let Some(ga) = self.slot(grads, a) {
                    kernels::gemm_nt(g, val(b), ga, m, p, n);
                }
                if let Some(gb) = self.slot(grads, b) {
                    kernels::gemm_tn(val(a), g, gb, m, n, p);
                }
            }
            &Op::MatMulT(a, b) => {
                let (m, n) = self.value(a).dims2().unwrap();
                let p = self.value(b).dims2().unwrap().0;
                if let Some(ga) = self.slot(grads, a) {
                    kernels::gemm_nn(g, val(b), ga, m, p, n);
                }
                if let Some(gb) = self.slot(grads, b) {
                    kernels::gemm_tn(g, val(a), gb, m, p, n);
                }
            }
            &Op::Add(a, b) => {
                if let Some(ga) = self.slot(grads, a) {
                    add_into(g, ga);
                }
                if let Some(gb) = self.slot(grads, b) {
                    add_into(g, gb);
                }
            }
            &Op::Sub(a, b) => {
                if let Some(ga) = self.slot(grads, a) {
                    add_into(g, ga);
                }
                if let Some(gb) = self.slot(grads, b) {
                    axpy(-1.0, g, gb);
                }
            }
            &Op::Mul(a, b) => {
                if let Some(ga) = self.slot(grads, a) {
                    for ((x, &gi), &bi) in ga.iter_mut().zip(g).zip(val(b)) {
                        *x += gi * bi;
                    }
                }
                if let Some(gb) = self.slot(grads, b) {
                    for ((x, &gi), &ai) in gb.iter_mut().zip(g).zip(val(a)) {
                        *x += gi * ai;
                    }
                }
            }
            &Op::Div(a, b) => {
                if let Some(ga) = self.slot(grads, a) {
                    for ((x, &gi), &bi) in ga.iter_mut().zip(g).zip(val(b)) {
                        *x += gi / bi;
                    }
                }
                if let Some(gb) = self.slot(grads, b) {
                    for (((x, &gi), &ai), &bi) in gb.iter_mut().zip(g).zip(val(a)).zip(val(b)) {
                        *x -= gi * ai / (bi * bi);
                    }
                }
            }
            &Op::Affine { src, scale } => {
                if let Some(gs) = self.slot(grads, src) {
                    axpy(scale, g, gs);
                }
            }
            &Op::AddBias(a, bias) => {
                if let Some(ga) = self.slot(grads, a) {
                    add_into(g, ga);
                }
                let n = self.value(bias).len();
                if let Some(gb) = self.slot(grads, bias) {
                    for row in g.chunks_exact(n) {
                        add_into(row, gb);
                    }
                }
            }
            &Op::Sigmoid(a) => {
                let y = node.value.data();
                if let Some(ga) = self.slot(grads, a) {
                    for ((x, &gi), &yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * yi * (1.0 - yi);
                    }
                }
            }
            &Op::Tanh(a) => {
                let y = node.value.data();
                if let Some(ga) = self.slot(grads, a) {
                    for ((x, &gi), &yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * (1.0 - yi * yi);
                    }
                }
            }
            &Op::Softplus(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    for ((x, &gi), &ai) in ga.iter_mut().zip(g).zip(val(a)) {
                        *x += gi * kernels::sigmoid(ai);
                    }
                }
            }
            &Op::Sum(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    ga.iter_mut().for_each(|x| *x += g[0]);
                }
            }
            &Op::Dot(a, b) => {
                if let Some(ga) = self.slot(grads, a) {
                    axpy(g[0], val(b), ga);
                }
                if let Some(gb) = self.slot(grads, b) {
                    axpy(g[0], val(a), gb);
                }
            }
            &Op::Row { src, row } => {
                let n = g.len();
                if let Some(gs) = self.slot(grads, src) {
                    add_into(g, &mut gs[row * n..(row + 1) * n]);
                }
            }
            &Op::Cols { src, start } => {
                let (m, n) = self.value(src).dims2().unwrap();
                let len = g.len() / m;
                if let Some(gs) = self.slot(grads, src) {
                    for r in 0..m {
                        add_into(&g[r * len..(r + 1) * len], &mut gs[r * n + start..r * n + start + len]);
                    }
                }
            }
            Op::VStack(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if let Some(gp) = self.slot(grads, p) {
                        add_into(&g[off..off + len], gp);
                    }
                    off += len;
                }
            }
            Op::HConcat(parts) => {
                let (m, total) = node.value.dims2().unwrap();
                let mut col = 0;
                for &p in parts {
                    let c = self.value(p).dims2().unwrap().1;
                    if let Some(gp) = self.slot(grads, p) {
                        for r in 0..m {
                            add_into(&g[r * total + col..r * total + col + c], &mut gp[r * c..(r + 1) * c]);
                        }
                    }
                    col += c;
                }
            }
            Op::Custom { f, inputs } => {
                let values: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
                let contributions = f.backward(&values, &node.value, g);
                for (&v, c) in inputs.iter().zip(&contributions) {
                    if let Some(gv) = self.slot(grads, v) {
                        add_into(c, gv);
                    }
                }
            }
        }
    }
}

/// Result of a reverse sweep.
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    params: Vec<(Var, ParamId)>,
}

impl Gradients {
    /// Gradient with respect to any recorded value, if one reached it.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.nodes.get(v.0).and_then(|g| g.as_deref())
    }

    /// Per-parameter gradients, summed over every copy of a parameter on the
    /// tape.
    pub fn param_grads(&self, store: &ParamStore) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = store.ids().map(|id| vec![0.0; store.get(id).len()]).collect();
        for &(v, id) in &self.params {
            if let Some(g) = self.wrt(v) {
                add_into(g, &mut out[id.0]);
            }
        }
        out
    }

    /// Adds every parameter gradient into the store's grad slots.
    pub fn accumulate_into(&self, store: &mut ParamStore) {
        for &(v, id) in &self.params {
            match self.wrt(v) {
                Some(g) => store.get_mut(id).accumulate_grad(g),
                None => {
                    store.get_mut(id).grad_mut();
                }
            }
        }
    }
}

/// Runs the reverse sweep and writes gradients into the parameter slots.
///
/// Repeated calls without [`ParamStore::zero_grads`] accumulate.
pub fn backward(tape: &Tape, loss: Var, store: &mut ParamStore) -> Result<()> {
    tape.backward(loss)?.accumulate_into(store);
    Ok(())
}

impl Tensor {
    /// Copy of the values without the gradient slot.
    pub(crate) fn clone_value(&self) -> Tensor {
        Tensor::from_parts(self.shape().to_vec(), self.data().to_vec())
    }
}
