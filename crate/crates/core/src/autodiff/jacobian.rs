use super::{AutodiffError, Graph, NodeId, Tensor};

/// Anything that maps an `N x D` input stack to a row of `K` class probabilities
/// through recorded graph ops.
pub trait Differentiable {
    fn output_dim(&self) -> usize;

    /// Records the forward pass for input node `x` and returns the `1 x K`
    /// probability node.
    fn record_forward(&self, graph: &mut Graph, x: NodeId) -> Result<NodeId, AutodiffError>;
}

/// `K x M` matrix of absolute partial derivatives, `M = D * N` flattened
/// row-major over the input stack (token-major).
#[derive(Clone, Debug, PartialEq)]
pub struct AbsJacobian {
    classes: usize,
    features: usize,
    data: Vec<f64>,
}

impl AbsJacobian {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AutodiffError> {
        let classes = rows.len();
        let features = rows.first().map_or(0, Vec::len);
        if classes == 0 || rows.iter().any(|r| r.len() != features) {
            return Err(AutodiffError::Shape {
                op: "abs_jacobian",
                detail: "rows must be non-empty and equal length".into(),
            });
        }
        let data: Vec<f64> = rows.into_iter().flatten().map(f64::abs).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFinite { op: "abs_jacobian" });
        }
        Ok(Self { classes, features, data })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn get(&self, class: usize, feature: usize) -> f64 {
        self.data[class * self.features + feature]
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.data[class * self.features..(class + 1) * self.features]
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    pub fn mean_entry(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `wᵀJ`, one weighted sensitivity per flattened feature.
    pub fn weighted_rows(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.features];
        for (k, &wk) in w.iter().enumerate().take(self.classes) {
            for (o, &j) in out.iter_mut().zip(self.row(k)) {
                *o += wk * j;
            }
        }
        out
    }
}

/// One backward pass per class row through `model`, absolute values taken
/// entrywise.
pub fn abs_jacobian<M: Differentiable + ?Sized>(
    model: &M,
    x: &Tensor,
) -> Result<AbsJacobian, AutodiffError> {
    let mut graph = Graph::new();
    let input = graph.input(x.clone());
    let out = model.record_forward(&mut graph, input)?;
    let k = graph.value(out)?.len();
    if k != model.output_dim() {
        return Err(AutodiffError::Shape {
            op: "abs_jacobian",
            detail: format!("model declares {} outputs, graph produced {}", model.output_dim(), k),
        });
    }
    let rows = (0..k)
        .map(|class| {
            let grads = graph.grad_component(out, class)?;
            Ok(grads.wrt(input)?.into_data())
        })
        .collect::<Result<Vec<_>, AutodiffError>>()?;
    AbsJacobian::from_rows(rows)
}
