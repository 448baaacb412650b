use super::{AutodiffError, Tensor};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// Elementwise add; the right operand may be a single row broadcast over rows.
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Softmax(NodeId),
    LogSoftmax(NodeId),
    Log(NodeId),
    Abs(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    MeanRows(NodeId),
    SelectCols(NodeId, Vec<usize>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Log(_) => "log",
            Op::Abs(_) => "abs",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::MeanRows(_) => "mean_rows",
            Op::SelectCols(..) => "select_cols",
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Eager reverse-mode tape.
///
/// Each builder method evaluates its op immediately and records it, so the
/// node list is topologically ordered by construction. Any op that produces a
/// non-finite value fails with [`AutodiffError::NonFinite`] naming the op.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
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

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> Result<&Tensor, AutodiffError> {
        self.nodes
            .get(id.0)
            .map(|n| &n.value)
            .ok_or(AutodiffError::UnknownNode(id.0))
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn checked(&mut self, value: Tensor, op: Op) -> Result<NodeId, AutodiffError> {
        if value.data().iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFinite { op: op.name() });
        }
        Ok(self.push(value, op))
    }

    fn val(&self, id: NodeId) -> Result<&Tensor, AutodiffError> {
        self.value(id)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (av, bv) = (self.val(a)?, self.val(b)?);
        if av.cols() != bv.rows() {
            return Err(shape_err(
                "matmul",
                format!("{}x{} times {}x{}", av.rows(), av.cols(), bv.rows(), bv.cols()),
            ));
        }
        let out = Tensor::matmul_raw(av, bv);
        self.checked(out, Op::MatMul(a, b))
    }

    fn broadcast_pair(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, AutodiffError> {
        let (av, bv) = (self.val(a)?, self.val(b)?);
        if av.len() == bv.len() && av.rows() == bv.rows() {
            return Ok(av.zip_map(bv, f));
        }
        if bv.rows() == 1 && bv.cols() == av.cols() {
            let c = av.cols();
            let data = av
                .data()
                .iter()
                .enumerate()
                .map(|(i, &x)| f(x, bv.data()[i % c]))
                .collect();
            return Ok(Tensor::from_parts(av.shape().to_vec(), data));
        }
        Err(shape_err(op, format!("{:?} vs {:?}", av.shape(), bv.shape())))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.broadcast_pair("add", a, b, |x, y| x + y)?;
        self.checked(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.broadcast_pair("sub", a, b, |x, y| x - y)?;
        self.checked(out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (av, bv) = (self.val(a)?, self.val(b)?);
        if av.shape() != bv.shape() {
            return Err(shape_err("mul", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let out = av.zip_map(bv, |x, y| x * y);
        self.checked(out, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(|x| x * factor);
        self.checked(out, Op::Scale(a, factor))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(sigmoid);
        self.checked(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(f64::tanh);
        self.checked(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(|x| x.max(0.0));
        self.checked(out, Op::Relu(a))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let av = self.val(a)?;
        let c = av.cols();
        let mut data = Vec::with_capacity(av.len());
        for r in 0..av.rows() {
            let row = av.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / total));
        }
        debug_assert_eq!(data.len(), av.rows() * c);
        let out = Tensor::from_parts(av.shape().to_vec(), data);
        self.checked(out, Op::Softmax(a))
    }

    /// Row-wise log-softmax, computed without forming probabilities.
    pub fn log_softmax(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let av = self.val(a)?;
        let mut data = Vec::with_capacity(av.len());
        for r in 0..av.rows() {
            let row = av.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            data.extend(row.iter().map(|&x| x - lse));
        }
        let out = Tensor::from_parts(av.shape().to_vec(), data);
        self.checked(out, Op::LogSoftmax(a))
    }

    pub fn log(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(f64::ln);
        self.checked(out, Op::Log(a))
    }

    pub fn abs(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let out = self.val(a)?.map(f64::abs);
        self.checked(out, Op::Abs(a))
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let s = self.val(a)?.data().iter().sum();
        self.checked(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let av = self.val(a)?;
        if av.is_empty() {
            return Err(shape_err("mean", "empty tensor".into()));
        }
        let m = av.data().iter().sum::<f64>() / av.len() as f64;
        self.checked(Tensor::scalar(m), Op::Mean(a))
    }

    /// Column means over rows: `(r x c) -> (1 x c)`.
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let av = self.val(a)?;
        let (r, c) = (av.rows(), av.cols());
        if r == 0 {
            return Err(shape_err("mean_rows", "no rows".into()));
        }
        let mut out = vec![0.0; c];
        for i in 0..r {
            for (o, &x) in out.iter_mut().zip(av.row(i)) {
                *o += x;
            }
        }
        for o in &mut out {
            *o /= r as f64;
        }
        self.checked(Tensor::from_parts(vec![1, c], out), Op::MeanRows(a))
    }

    /// Keeps only the listed columns, in the listed order.
    pub fn select_cols(&mut self, a: NodeId, cols: &[usize]) -> Result<NodeId, AutodiffError> {
        let av = self.val(a)?;
        let c = av.cols();
        if let Some(&bad) = cols.iter().find(|&&j| j >= c) {
            return Err(shape_err("select_cols", format!("column {} of {}", bad, c)));
        }
        let mut data = Vec::with_capacity(av.rows() * cols.len());
        for r in 0..av.rows() {
            let row = av.row(r);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        let out = Tensor::from_parts(vec![av.rows(), cols.len()], data);
        self.checked(out, Op::SelectCols(a, cols.to_vec()))
    }

    /// Backpropagates `seed` (shaped like `output`) through the tape.
    pub fn backward(&self, output: NodeId, seed: Tensor) -> Result<Gradients, AutodiffError> {
        let out = self.val(output)?;
        if seed.len() != out.len() {
            return Err(shape_err(
                "backward",
                format!("seed has {} values, output has {}", seed.len(), out.len()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor::from_parts(out.shape().to_vec(), seed.into_data()));

        for idx in (0..=output.0).rev() {
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            for (target, contribution) in self.local_grads(node, &upstream)? {
                match &mut grads[target.0] {
                    Some(existing) => existing.accumulate(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            }
            grads[idx] = Some(upstream);
        }
        if grads.iter().flatten().any(|g| g.data().iter().any(|v| !v.is_finite())) {
            return Err(AutodiffError::NonFinite { op: "backward" });
        }
        Ok(Gradients { grads, shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect() })
    }

    /// Gradient of the scalar component `k` of `output` (flat index).
    pub fn grad_component(&self, output: NodeId, k: usize) -> Result<Gradients, AutodiffError> {
        let out = self.val(output)?;
        if k >= out.len() {
            return Err(AutodiffError::ComponentOutOfRange { component: k, size: out.len() });
        }
        let mut seed = Tensor::zeros_like(out);
        seed.data_mut()[k] = 1.0;
        self.backward(output, seed)
    }

    fn local_grads(&self, node: &Node, up: &Tensor) -> Result<Vec<(NodeId, Tensor)>, AutodiffError> {
        let v = |id: NodeId| &self.nodes[id.0].value;
        let y = &node.value;
        Ok(match &node.op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => {
                let da = Tensor::matmul_raw(up, &v(*b).transpose());
                let db = Tensor::matmul_raw(&v(*a).transpose(), up);
                vec![(*a, reshape_like(da, v(*a))), (*b, reshape_like(db, v(*b)))]
            }
            Op::Add(a, b) => vec![(*a, up.clone()), (*b, reduce_broadcast(up, v(*b)))],
            Op::Sub(a, b) => {
                let db = reduce_broadcast(up, v(*b)).map(|x| -x);
                vec![(*a, up.clone()), (*b, db)]
            }
            Op::Mul(a, b) => vec![
                (*a, up.zip_map(v(*b), |g, x| g * x)),
                (*b, up.zip_map(v(*a), |g, x| g * x)),
            ],
            Op::Scale(a, f) => vec![(*a, up.map(|g| g * f))],
            Op::Sigmoid(a) => vec![(*a, up.zip_map(y, |g, s| g * s * (1.0 - s)))],
            Op::Tanh(a) => vec![(*a, up.zip_map(y, |g, t| g * (1.0 - t * t)))],
            Op::Relu(a) => vec![(*a, up.zip_map(v(*a), |g, x| if x > 0.0 { g } else { 0.0 }))],
            Op::Softmax(a) => {
                let c = y.cols();
                let mut data = Vec::with_capacity(y.len());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), &up.data()[r * c..(r + 1) * c]);
                    let dot: f64 = yr.iter().zip(gr).map(|(s, g)| s * g).sum();
                    data.extend(yr.iter().zip(gr).map(|(s, g)| s * (g - dot)));
                }
                vec![(*a, Tensor::from_parts(y.shape().to_vec(), data))]
            }
            Op::LogSoftmax(a) => {
                let c = y.cols();
                let mut data = Vec::with_capacity(y.len());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), &up.data()[r * c..(r + 1) * c]);
                    let total: f64 = gr.iter().sum();
                    data.extend(yr.iter().zip(gr).map(|(l, g)| g - l.exp() * total));
                }
                vec![(*a, Tensor::from_parts(y.shape().to_vec(), data))]
            }
            Op::Log(a) => vec![(*a, up.zip_map(v(*a), |g, x| g / x))],
            Op::Abs(a) => vec![(*a, up.zip_map(v(*a), |g, x| g * sign(x)))],
            Op::Sum(a) => {
                let g = up.data()[0];
                vec![(*a, v(*a).map(|_| g))]
            }
            Op::Mean(a) => {
                let g = up.data()[0] / v(*a).len() as f64;
                vec![(*a, v(*a).map(|_| g))]
            }
            Op::MeanRows(a) => {
                let src = v(*a);
                let (r, c) = (src.rows(), src.cols());
                let data = (0..r * c).map(|i| up.data()[i % c] / r as f64).collect();
                vec![(*a, Tensor::from_parts(src.shape().to_vec(), data))]
            }
            Op::SelectCols(a, cols) => {
                let src = v(*a);
                let (c, k) = (src.cols(), cols.len());
                let mut out = Tensor::zeros_like(src);
                for r in 0..src.rows() {
                    for (j, &col) in cols.iter().enumerate() {
                        out.data_mut()[r * c + col] += up.data()[r * k + j];
                    }
                }
                vec![(*a, out)]
            }
        })
    }
}

/// Per-node gradients from one backward pass.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `id`; all zeros when the output does not depend on it.
    pub fn wrt(&self, id: NodeId) -> Result<Tensor, AutodiffError> {
        let shape = self.shapes.get(id.0).ok_or(AutodiffError::UnknownNode(id.0))?;
        Ok(match self.grads.get(id.0) {
            Some(Some(g)) => g.clone(),
            _ => Tensor::zeros(shape),
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn shape_err(op: &'static str, detail: String) -> AutodiffError {
    AutodiffError::Shape { op, detail }
}

fn reshape_like(t: Tensor, like: &Tensor) -> Tensor {
    Tensor::from_parts(like.shape().to_vec(), t.into_data())
}

/// Undoes row broadcasting: sums `up` over rows when `target` is a single row.
fn reduce_broadcast(up: &Tensor, target: &Tensor) -> Tensor {
    if up.len() == target.len() {
        return reshape_like(up.clone(), target);
    }
    let c = target.cols();
    let mut out = vec![0.0; c];
    for r in 0..up.rows() {
        for (o, &g) in out.iter_mut().zip(up.row(r)) {
            *o += g;
        }
    }
    Tensor::from_parts(target.shape().to_vec(), out)
}
