//! Empirical neural tangent kernel: pairwise values, Gram matrices, layerwise
//! norm ratios and label-structure metrics.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{NtkError, Result};
use crate::net_core::{dot, norm_sq, param_gradient, traces, BackwardTrace, ForwardTrace, Parameters};

/// Weight part, bias part and total of `Θ(x, x̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtkBreakdown {
    pub theta_w: f64,
    pub theta_b: f64,
    pub theta: f64,
}

impl NtkBreakdown {
    fn new(theta_w: f64, theta_b: f64) -> Self {
        Self { theta_w, theta_b, theta: theta_w + theta_b }
    }
}

/// Squared-norm ratios between consecutive layers. `None` marks a zero denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRatios {
    /// `N_x^l = ‖x^l‖²/‖x^{l-1}‖²`, `l = 1..L-1`.
    pub n_x: Vec<Option<f64>>,
    /// `N_δ^l = ‖δ^l‖²/‖δ^{l+1}‖²`, `l = 1..L-1`.
    pub n_delta: Vec<Option<f64>>,
}

impl LayerRatios {
    pub fn has_undefined(&self) -> bool {
        self.n_x.iter().chain(&self.n_delta).any(Option::is_none)
    }
}

/// Mean diagonal, within-class and cross-class kernel values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureMetrics {
    pub theta_d: f64,
    pub theta_c: f64,
    pub theta_n: f64,
}

impl StructureMetrics {
    /// `(Θ̄_c − Θ̄_n)/Θ̄_d`
    pub fn block_contrast(&self) -> f64 {
        (self.theta_c - self.theta_n) / self.theta_d
    }
}

/// Kernel value from cached traces of both inputs.
pub fn ntk_from_traces(fa: &ForwardTrace, ba: &BackwardTrace, fb: &ForwardTrace, bb: &BackwardTrace) -> NtkBreakdown {
    let mut theta_w = 0.0;
    let mut theta_b = 0.0;
    for l in 1..=ba.depth() {
        let dd = dot(ba.delta(l), bb.delta(l));
        theta_w += dd * dot(fa.act(l - 1), fb.act(l - 1));
        theta_b += dd;
    }
    NtkBreakdown::new(theta_w, theta_b)
}

fn lex_le(a: &[f64], b: &[f64]) -> bool {
    a.iter().map(|v| v.to_bits()).le(b.iter().map(|v| v.to_bits()))
}

/// `Θ(x, x̃)` via the layerwise decomposition; O(Σ n_l) beyond two passes.
pub fn ntk_pair_fast(params: &Parameters, x: &[f64], x_tilde: &[f64]) -> Result<NtkBreakdown> {
    let (x, x_tilde) = if lex_le(x, x_tilde) { (x, x_tilde) } else { (x_tilde, x) };
    let (fa, ba) = traces(params, x)?;
    if x == x_tilde {
        return Ok(ntk_from_traces(&fa, &ba, &fa, &ba));
    }
    let (fb, bb) = traces(params, x_tilde)?;
    Ok(ntk_from_traces(&fa, &ba, &fb, &bb))
}

/// `Θ(x, x̃)` as an explicit sum over every parameter gradient product.
pub fn ntk_pair_direct(params: &Parameters, x: &[f64], x_tilde: &[f64]) -> Result<NtkBreakdown> {
    let (fa, ba) = traces(params, x)?;
    let (fb, bb) = traces(params, x_tilde)?;
    let ga = param_gradient(&fa, &ba);
    let gb = param_gradient(&fb, &bb);
    let mut theta_w = 0.0;
    let mut theta_b = 0.0;
    let mut offset = 0;
    for l in 1..=params.depth() {
        let layer = params.layer(l);
        let nw = layer.weights.rows() * layer.weights.cols();
        let nb = layer.bias.len();
        for k in offset..offset + nw {
            theta_w += ga[k] * gb[k];
        }
        offset += nw;
        for k in offset..offset + nb {
            theta_b += ga[k] * gb[k];
        }
        offset += nb;
    }
    Ok(NtkBreakdown::new(theta_w, theta_b))
}

/// Gram matrix `G_ij = Θ(x_i, x_j)`, one forward/backward pass per point.
pub fn ntk_gram(params: &Parameters, dataset: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if dataset.is_empty() {
        return Err(NtkError::InvalidArgument("empty dataset".into()));
    }
    let cache = dataset.iter().map(|x| traces(params, x)).collect::<Result<Vec<_>>>()?;
    let n = dataset.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (a, b) = if lex_le(&dataset[i], &dataset[j]) { (i, j) } else { (j, i) };
            let v = ntk_from_traces(&cache[a].0, &cache[a].1, &cache[b].0, &cache[b].1).theta;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(g.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// True when `λ_min(G) ≥ −1e−8 · tr(G)`.
pub fn is_psd_gram(g: &DMatrix<f64>) -> bool {
    min_eigenvalue(g) >= -1e-8 * g.trace()
}

/// Diagonal, within-class and cross-class means of a kernel matrix.
pub fn structure_metrics(gram: &DMatrix<f64>, labels: &[usize]) -> Result<StructureMetrics> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(NtkError::DimensionMismatch { expected: n, got: gram.ncols() });
    }
    if labels.len() != n {
        return Err(NtkError::DimensionMismatch { expected: n, got: labels.len() });
    }
    if n == 0 {
        return Err(NtkError::InvalidArgument("empty kernel matrix".into()));
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        classes.entry(c).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(NtkError::UndefinedMetric("cross-class mean needs at least two classes".into()));
    }
    if let Some((c, _)) = classes.iter().find(|(_, m)| m.len() < 2) {
        return Err(NtkError::UndefinedMetric(format!("class {c} has fewer than two members")));
    }

    let theta_d = (0..n).map(|i| gram[(i, i)]).sum::<f64>() / n as f64;
    let k = classes.len() as f64;
    let mut theta_c = 0.0;
    let mut theta_n = 0.0;
    for members in classes.values() {
        let m = members.len();
        let mut within = 0.0;
        let mut cross = 0.0;
        for &i in members {
            for j in 0..n {
                if labels[j] == labels[i] {
                    if j != i {
                        within += gram[(i, j)];
                    }
                } else {
                    cross += gram[(i, j)];
                }
            }
        }
        theta_c += within / (m * (m - 1)) as f64;
        theta_n += cross / (m * (n - m)) as f64;
    }
    Ok(StructureMetrics { theta_d, theta_c: theta_c / k, theta_n: theta_n / k })
}

/// Kernel of the `α`-rescaled model: every component times `α²`.
pub fn rescale_ntk(b: NtkBreakdown, alpha: f64) -> NtkBreakdown {
    let s = alpha * alpha;
    NtkBreakdown { theta_w: b.theta_w * s, theta_b: b.theta_b * s, theta: b.theta * s }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Layerwise squared-norm ratios of activations and backpropagated errors.
pub fn layer_ratios(forward: &ForwardTrace, backward: &BackwardTrace) -> Result<LayerRatios> {
    let depth = forward.depth();
    if backward.depth() != depth {
        return Err(NtkError::DimensionMismatch { expected: depth, got: backward.depth() });
    }
    let n_x = (1..depth).map(|l| ratio(norm_sq(forward.act(l)), norm_sq(forward.act(l - 1)))).collect();
    let n_delta = (1..depth).map(|l| ratio(norm_sq(backward.delta(l)), norm_sq(backward.delta(l + 1)))).collect();
    Ok(LayerRatios { n_x, n_delta })
}
