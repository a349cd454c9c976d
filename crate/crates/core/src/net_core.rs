//! Fully-connected ReLU networks with a scalar linear output, in standard
//! parametrization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NtkError, Result};

/// Tolerance on `|‖x‖ − 1|` accepted at the input boundary.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Identity of the Gaussian sampler, echoed into experiment headers.
pub const SAMPLER_ID: &str = "rand_chacha::ChaCha8Rng+rand_distr::StandardNormal(ziggurat)";

/// Depth, widths and initialization variances of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    widths: Vec<usize>,
    sigma_w_sq: f64,
    sigma_b_sq: f64,
}

impl NetworkConfig {
    /// `widths` holds `n_0 .. n_{L-1}`; the output width 1 is implicit.
    pub fn new(widths: Vec<usize>, sigma_w_sq: f64, sigma_b_sq: f64) -> Result<Self> {
        if widths.is_empty() {
            return Err(NtkError::InvalidConfig("depth must be at least 1".into()));
        }
        if let Some(pos) = widths.iter().position(|&w| w == 0) {
            return Err(NtkError::InvalidConfig(format!("width n_{pos} is zero")));
        }
        if !(sigma_w_sq.is_finite() && sigma_w_sq > 0.0) {
            return Err(NtkError::InvalidConfig(format!("sigma_w_sq must be positive, got {sigma_w_sq}")));
        }
        if !(sigma_b_sq.is_finite() && sigma_b_sq >= 0.0) {
            return Err(NtkError::InvalidConfig(format!("sigma_b_sq must be non-negative, got {sigma_b_sq}")));
        }
        Ok(Self { widths, sigma_w_sq, sigma_b_sq })
    }

    /// Input width `n0`, then `depth - 1` hidden layers of width `m`.
    pub fn constant_width(depth: usize, n0: usize, m: usize, sigma_w_sq: f64, sigma_b_sq: f64) -> Result<Self> {
        if depth == 0 {
            return Err(NtkError::InvalidConfig("depth must be at least 1".into()));
        }
        let mut widths = vec![m; depth];
        widths[0] = n0;
        Self::new(widths, sigma_w_sq, sigma_b_sq)
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn sigma_w_sq(&self) -> f64 {
        self.sigma_w_sq
    }

    pub fn sigma_b_sq(&self) -> f64 {
        self.sigma_b_sq
    }

    /// `a = σw²/2`.
    pub fn a(&self) -> f64 {
        self.sigma_w_sq / 2.0
    }

    /// Width of layer `l` for `l = 0..=L`, with `n_L = 1`.
    pub fn width(&self, l: usize) -> usize {
        if l == self.widths.len() {
            1
        } else {
            self.widths[l]
        }
    }

    pub fn num_params(&self) -> usize {
        (1..=self.depth()).map(|l| self.width(l) * self.width(l - 1) + self.width(l)).sum()
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(NtkError::DimensionMismatch { expected: c, got: bad.len() });
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data.chunks_exact(self.cols.max(1)).take(self.rows).map(|row| dot(row, x)).collect()
    }

    /// `y = Aᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += vi * w;
            }
        }
        out
    }

    /// `A ← A − s · u vᵀ`
    fn sub_outer(&mut self, s: f64, u: &[f64], v: &[f64]) {
        for (i, &ui) in u.iter().enumerate() {
            let c = s * ui;
            if c == 0.0 {
                continue;
            }
            let cols = self.cols;
            for (w, &vj) in self.data[i * cols..(i + 1) * cols].iter_mut().zip(v) {
                *w -= c * vj;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// One affine layer `h = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Trainable weights and biases for all `L` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    layers: Vec<Layer>,
}

impl Parameters {
    /// Build from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(NtkError::InvalidConfig("at least one layer required".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weights.rows() {
                return Err(NtkError::DimensionMismatch { expected: layer.weights.rows(), got: layer.bias.len() });
            }
            if let Some(next) = layers.get(l + 1) {
                if next.weights.cols() != layer.weights.rows() {
                    return Err(NtkError::DimensionMismatch {
                        expected: layer.weights.rows(),
                        got: next.weights.cols(),
                    });
                }
            }
        }
        let out = layers.last().map(|l| l.weights.rows()).unwrap_or(0);
        if out != 1 {
            return Err(NtkError::InvalidConfig(format!("output width must be 1, got {out}")));
        }
        Ok(Self { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    /// Layer `l` for `l = 1..=L`.
    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l - 1]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut Layer {
        &mut self.layers[l - 1]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// All parameters flattened layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }
}

/// Activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `x^0 .. x^{L-1}`; entry 0 is the input.
    acts: Vec<Vec<f64>>,
    /// `h^1 .. h^{L-1}`.
    preacts: Vec<Vec<f64>>,
    output: f64,
}

impl ForwardTrace {
    pub fn input(&self) -> &[f64] {
        &self.acts[0]
    }

    /// `x^l` for `l = 0..L`.
    pub fn act(&self, l: usize) -> &[f64] {
        &self.acts[l]
    }

    /// `h^l` for `l = 1..L`.
    pub fn preact(&self, l: usize) -> &[f64] {
        &self.preacts[l - 1]
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn depth(&self) -> usize {
        self.acts.len()
    }
}

/// Backpropagated errors `δ^1 .. δ^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardTrace {
    deltas: Vec<Vec<f64>>,
}

impl BackwardTrace {
    /// `δ^l` for `l = 1..=L`.
    pub fn delta(&self, l: usize) -> &[f64] {
        &self.deltas[l - 1]
    }

    pub fn depth(&self) -> usize {
        self.deltas.len()
    }
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Derivative of ReLU with `φ'(0) = 0`.
pub fn relu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Draw `W^l ~ N(0, σw²/n_{l-1})` and `b^l ~ N(0, σb²)`.
pub fn init_network(config: &NetworkConfig, seed: u64) -> Parameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l_total = config.depth();
    let sb = config.sigma_b_sq().sqrt();
    let layers = (1..=l_total)
        .map(|l| {
            let (rows, cols) = (config.width(l), config.width(l - 1));
            let sw = (config.sigma_w_sq() / cols as f64).sqrt();
            let mut weights = Matrix::zeros(rows, cols);
            for w in weights.as_mut_slice() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = sw * z;
            }
            let bias = if config.sigma_b_sq() == 0.0 {
                vec![0.0; rows]
            } else {
                (0..rows)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sb * z
                    })
                    .collect()
            };
            Layer { weights, bias }
        })
        .collect();
    Parameters { layers }
}

fn check_input(params: &Parameters, x: &[f64]) -> Result<()> {
    if x.len() != params.input_dim() {
        return Err(NtkError::DimensionMismatch { expected: params.input_dim(), got: x.len() });
    }
    Ok(())
}

/// Forward pass on a unit-norm input.
pub fn forward(params: &Parameters, x: &[f64]) -> Result<ForwardTrace> {
    check_input(params, x)?;
    let norm = norm_sq(x).sqrt();
    if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
        return Err(NtkError::NotNormalized { norm });
    }
    Ok(forward_pass(params, x))
}

/// Forward pass without the unit-norm precondition.
///
/// Theory results assume normalized inputs; use this only where the scale of
/// the input is itself under test.
pub fn forward_any_norm(params: &Parameters, x: &[f64]) -> Result<ForwardTrace> {
    check_input(params, x)?;
    Ok(forward_pass(params, x))
}

fn forward_pass(params: &Parameters, x: &[f64]) -> ForwardTrace {
    let depth = params.depth();
    let mut acts = Vec::with_capacity(depth);
    let mut preacts = Vec::with_capacity(depth.saturating_sub(1));
    acts.push(x.to_vec());
    for l in 1..depth {
        let layer = params.layer(l);
        let mut h = layer.weights.matvec(&acts[l - 1]);
        for (hi, bi) in h.iter_mut().zip(&layer.bias) {
            *hi += bi;
        }
        acts.push(h.iter().copied().map(relu).collect());
        preacts.push(h);
    }
    let last = params.layer(depth);
    let output = dot(last.weights.row(0), &acts[depth - 1]) + last.bias[0];
    ForwardTrace { acts, preacts, output }
}

/// Backpropagate `δ^l = ∂f/∂h^l` from `δ^L = 1`.
pub fn backward(params: &Parameters, trace: &ForwardTrace) -> Result<BackwardTrace> {
    let depth = params.depth();
    if trace.depth() != depth {
        return Err(NtkError::DimensionMismatch { expected: depth, got: trace.depth() });
    }
    let mut deltas = vec![Vec::new(); depth];
    deltas[depth - 1] = vec![1.0];
    for l in (1..depth).rev() {
        let h = trace.preact(l);
        let up = params.layer(l + 1).weights.tr_matvec(&deltas[l]);
        if up.len() != h.len() {
            return Err(NtkError::DimensionMismatch { expected: up.len(), got: h.len() });
        }
        deltas[l - 1] = up.iter().zip(h).map(|(u, &hi)| relu_prime(hi) * u).collect();
    }
    Ok(BackwardTrace { deltas })
}

/// Forward and backward pass in one call.
pub fn traces(params: &Parameters, x: &[f64]) -> Result<(ForwardTrace, BackwardTrace)> {
    let fwd = forward(params, x)?;
    let bwd = backward(params, &fwd)?;
    Ok((fwd, bwd))
}

/// Gradient of `f` with respect to every parameter, in [`Parameters::flatten`] order.
pub fn param_gradient(fwd: &ForwardTrace, bwd: &BackwardTrace) -> Vec<f64> {
    let mut out = Vec::new();
    for l in 1..=bwd.depth() {
        let delta = bwd.delta(l);
        let xin = fwd.act(l - 1);
        for &d in delta {
            out.extend(xin.iter().map(|&xj| d * xj));
        }
        out.extend_from_slice(delta);
    }
    out
}

/// One GD step on `½(f(x) − y)²`, returning the updated parameters.
pub fn gd_step(params: &Parameters, x: &[f64], y: f64, eta: f64) -> Result<Parameters> {
    gd_step_batch(params, &[x.to_vec()], &[y], eta)
}

/// One full-batch GD step on the mean loss `(1/N) Σ ½(f(x_i) − y_i)²`.
pub fn gd_step_batch(params: &Parameters, xs: &[Vec<f64>], ys: &[f64], eta: f64) -> Result<Parameters> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(NtkError::InvalidArgument(format!("learning rate must be positive, got {eta}")));
    }
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(NtkError::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let scale = eta / xs.len() as f64;
    let mut next = params.clone();
    for (x, &y) in xs.iter().zip(ys) {
        let (fwd, bwd) = traces(params, x)?;
        let residual = fwd.output() - y;
        if residual == 0.0 {
            continue;
        }
        for l in 1..=params.depth() {
            let delta = bwd.delta(l);
            let layer = next.layer_mut(l);
            layer.weights.sub_outer(scale * residual, delta, fwd.act(l - 1));
            for (b, &d) in layer.bias.iter_mut().zip(delta) {
                *b -= scale * residual * d;
            }
        }
    }
    Ok(next)
}

/// Mean quadratic loss `(1/N) Σ ½(f(x_i) − y_i)²`.
pub fn mean_loss(params: &Parameters, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(NtkError::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = forward(params, x)?.output() - y;
        total += 0.5 * r * r;
    }
    Ok(total / xs.len() as f64)
}
