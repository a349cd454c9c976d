//! Closed-form predictions for NTK moments and dispersion across the
//! ordered, edge-of-chaos and chaotic initialization phases.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::error::{NtkError, Result};
use crate::net_core::NetworkConfig;

/// Tolerance on `|a − 1|` for the edge-of-chaos branch.
pub const EOC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Ordered,
    Eoc,
    Chaotic,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ordered => "ordered",
            Phase::Eoc => "eoc",
            Phase::Chaotic => "chaotic",
        })
    }
}

fn phase_of_a(a: f64) -> Phase {
    if (a - 1.0).abs() <= EOC_TOL {
        Phase::Eoc
    } else if a < 1.0 {
        Phase::Ordered
    } else {
        Phase::Chaotic
    }
}

/// Phase label of `σw²` for ReLU networks.
pub fn phase_of(sigma_w_sq: f64) -> Result<Phase> {
    if !(sigma_w_sq.is_finite() && sigma_w_sq > 0.0) {
        return Err(NtkError::InvalidArgument(format!("sigma_w_sq must be positive, got {sigma_w_sq}")));
    }
    Ok(phase_of_a(sigma_w_sq / 2.0))
}

/// Point in the infinite-depth-and-width limit: `λ = L/M`, `α₀ = n₀/M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub sigma_w_sq: f64,
    pub lambda: f64,
    pub alpha0: f64,
}

impl PhasePoint {
    pub fn a(&self) -> f64 {
        self.sigma_w_sq / 2.0
    }

    pub fn phase(&self) -> Result<Phase> {
        phase_of(self.sigma_w_sq)
    }
}

/// Limit of `E[Θ²]/E[Θ]²` in the chaotic phase.
pub fn chaotic_limit(lambda: f64) -> f64 {
    let l4 = 4.0 * lambda;
    (5.0 * lambda).exp() / (2.0 * lambda) * (1.0 + (-l4).exp_m1() / l4)
}

/// Limit of `E[Θ²]/E[Θ]²` at the edge of chaos.
pub fn eoc_limit(lambda: f64, alpha0: f64) -> f64 {
    let (l, a0) = (lambda, alpha0);
    let e5 = (5.0 * l).exp();
    let e1 = l.exp();
    let t1 = e5 * (1.0 / (2.0 * l) + (2.0 * a0 * a0 - 8.0 * a0) / (25.0 * l * l));
    let t2 = (e1 - e5) * (1.0 - 4.0 * a0) / (8.0 * l * l);
    let t3 = 2.0 * a0 / (5.0 * l) * ((4.0 - a0) / (5.0 * l) - 1.0 - a0);
    (t1 + t2 + t3) / ((1.0 + a0) * (1.0 + a0))
}

/// The edge-of-chaos limit in its alternative grouping by exponentials.
pub fn eoc_limit_grouped(lambda: f64, alpha0: f64) -> f64 {
    let (l, a0) = (lambda, alpha0);
    let t5 = (5.0 * l).exp() * (0.5 + (16.0 * a0 * a0 + 36.0 * a0 - 25.0) / (200.0 * l));
    let t1 = l.exp() * (1.0 - 4.0 * a0) / (8.0 * l);
    let rest = 2.0 * a0 * (4.0 - a0) / (25.0 * l) - 2.0 * a0 * (1.0 + a0) / 5.0;
    (t5 + t1 + rest) / ((1.0 + a0) * (1.0 + a0) * l)
}

/// Infinite-depth-and-width dispersion limit at a phase point.
pub fn dispersion_limit(p: &PhasePoint) -> Result<f64> {
    if !(p.lambda.is_finite() && p.lambda > 0.0) {
        return Err(NtkError::InvalidArgument(format!("lambda must be positive, got {}", p.lambda)));
    }
    Ok(match p.phase()? {
        Phase::Ordered => 1.0,
        Phase::Chaotic => chaotic_limit(p.lambda),
        Phase::Eoc => {
            if !(p.alpha0.is_finite() && p.alpha0 > 0.0) {
                return Err(NtkError::InvalidArgument(format!("alpha0 must be positive, got {}", p.alpha0)));
            }
            eoc_limit(p.lambda, p.alpha0)
        }
    })
}

/// First and second moments of `Θ_W(x,x)` and `Θ_b(x,x)` at finite width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub e_theta_w: f64,
    pub e_theta_b: f64,
    pub e_theta_w_sq: f64,
    pub e_theta_b_sq: f64,
    pub e_theta_wb: f64,
}

impl MomentSet {
    /// `(E[Θ_W²] + 2E[Θ_WΘ_b] + E[Θ_b²]) / (E[Θ_W] + E[Θ_b])²`
    pub fn dispersion(&self) -> f64 {
        let m1 = self.e_theta_w + self.e_theta_b;
        (self.e_theta_w_sq + 2.0 * self.e_theta_wb + self.e_theta_b_sq) / (m1 * m1)
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            e_theta_w: self.e_theta_w * s,
            e_theta_b: self.e_theta_b * s,
            e_theta_w_sq: self.e_theta_w_sq * s * s,
            e_theta_b_sq: self.e_theta_b_sq * s * s,
            e_theta_wb: self.e_theta_wb * s * s,
        }
    }
}

fn require_zero_bias(config: &NetworkConfig) -> Result<()> {
    if config.sigma_b_sq() != 0.0 {
        return Err(NtkError::InvalidConfig("moment formulas assume zero bias variance".into()));
    }
    Ok(())
}

/// `Σ_{l=1}^{L} a^{L−l}`, i.e. `(a^L − 1)/(a − 1)`, or `L` at the edge of chaos.
fn geometric_sum(a: f64, depth: usize) -> f64 {
    if phase_of_a(a) == Phase::Eoc {
        return depth as f64;
    }
    (0..depth).fold(0.0, |s, _| s * a + 1.0)
}

/// `(E[Θ_W], E[Θ_b])` for a unit-norm input.
pub fn expected_moments(config: &NetworkConfig) -> Result<(f64, f64)> {
    require_zero_bias(config)?;
    let a = config.a();
    let depth = config.depth();
    let n0 = config.input_dim() as f64;
    let width_sum: f64 = (1..=depth).map(|l| config.width(l - 1) as f64 / n0).sum();
    Ok((a.powi(depth as i32 - 1) * width_sum, geometric_sum(a, depth)))
}

/// Prefix products of `1 + c/n_k` over hidden widths, so that
/// `Π_{k=i}^{j-1}(1 + c/n_k) = p[j-1]/p[i-1]`.
fn prefix_products(config: &NetworkConfig, c: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(config.depth());
    p.push(1.0);
    for k in 1..config.depth() {
        let prev = p[k - 1];
        p.push(prev * (1.0 + c / config.width(k) as f64));
    }
    p
}

/// Second moments with every power of `a` divided by `a^{2·shift}` and first
/// moments by `a^{shift}`.
fn moments_scaled(config: &NetworkConfig, shift: i32) -> MomentSet {
    let a = config.a();
    let depth = config.depth();
    let big_l = depth as i32;
    let n0 = config.input_dim() as f64;
    let nw = |l: usize| config.width(l - 1) as f64;
    let p5 = prefix_products(config, 5.0);
    let p1 = prefix_products(config, 1.0);
    let x = |i: usize, j: usize| p5[j - 1] / p5[i - 1];
    let c = |i: usize, j: usize| p1[j - 1] / p1[i - 1];
    let pw = |e: i32| a.powi(e);

    let e_theta_w = pw(big_l - 1 - shift) * (1..=depth).map(|l| nw(l) / n0).sum::<f64>();
    let e_theta_b = (1..=depth).map(|l| pw(big_l - l as i32 - shift)).sum::<f64>();

    let mut w_diag = 0.0;
    let mut w_cross = 0.0;
    let mut b_diag = 0.0;
    let mut b_cross = 0.0;
    let mut wb_diag = 0.0;
    let mut wb_cross = 0.0;
    for l1 in 1..=depth {
        let i1 = l1 as i32;
        let r1 = nw(l1) / n0;
        w_diag += r1 * r1;
        b_diag += x(l1, depth) * pw(2 * big_l - 2 * i1 - 2 * shift);
        wb_diag += r1 * x(l1, depth) * pw(2 * big_l - 1 - i1 - 2 * shift);
        for l2 in l1 + 1..=depth {
            let i2 = l2 as i32;
            let r2 = nw(l2) / n0;
            w_cross += r1 * r2 * c(l1, l2) / x(l1, l2);
            b_cross += x(l2, depth) * pw(2 * big_l - i1 - i2 - 2 * shift);
            wb_cross += x(l2, depth)
                * (r2 * c(l1, l2) * pw(2 * big_l - 1 - i1 - 2 * shift) + r1 * pw(2 * big_l - 1 - i2 - 2 * shift));
        }
    }
    let e_theta_w_sq = pw(2 * big_l - 2 - 2 * shift) * x(1, depth) * (w_diag + 2.0 * w_cross);
    MomentSet {
        e_theta_w,
        e_theta_b,
        e_theta_w_sq,
        e_theta_b_sq: b_diag + 2.0 * b_cross,
        e_theta_wb: wb_diag + wb_cross,
    }
}

/// In the chaotic phase powers of `a` are factored out so that deep networks
/// do not overflow before the ratio is formed.
fn scale_shift(config: &NetworkConfig) -> i32 {
    if config.a() > 1.0 {
        config.depth() as i32 - 1
    } else {
        0
    }
}

/// First and second moments of the weight and bias kernels, dropping the
/// `O(M^{-3/2})` corrections inside the width products.
pub fn second_moments(config: &NetworkConfig) -> Result<MomentSet> {
    require_zero_bias(config)?;
    let shift = scale_shift(config);
    Ok(moments_scaled(config, shift).scaled(config.a().powi(shift)))
}

/// Finite-size prediction of `E[Θ²]/E[Θ]²`.
pub fn dispersion_finite(config: &NetworkConfig) -> Result<f64> {
    require_zero_bias(config)?;
    Ok(moments_scaled(config, scale_shift(config)).dispersion())
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(t.abs() <= 1.0) {
        return Err(NtkError::InvalidArgument(format!("argument must lie in [-1, 1], got {t}")));
    }
    Ok(())
}

/// `g(t) = (π/2 + arcsin t)/π`
pub fn g_map(t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    Ok((FRAC_PI_2 + t.asin()) / PI)
}

/// `r(t) = (√(1−t²) + tπ/2 + t·arcsin t)/π`, the ReLU correlation map.
pub fn r_map(t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    let v = ((1.0 - t * t).sqrt() + t * FRAC_PI_2 + t * t.asin()) / PI;
    Ok(v.min(1.0))
}

/// `[ρ₀, r(ρ₀), …, r^k(ρ₀)]`
pub fn rho_sequence(rho0: f64, k: usize) -> Result<Vec<f64>> {
    check_unit_interval(rho0)?;
    let mut out = Vec::with_capacity(k + 1);
    out.push(rho0);
    for i in 0..k {
        out.push(r_map(out[i])?);
    }
    Ok(out)
}

/// Bias-dominated estimate of `E[Θ(x,x̃)]/E[Θ(x,x)]`:
/// `Σ_l a^{L−l} Π_{k=l}^{L−1} g(ρ_{k−1}) / Σ_l a^{L−l}`.
pub fn nondiag_lower_bound(rho0: f64, depth: usize, a: f64) -> Result<f64> {
    if depth == 0 {
        return Err(NtkError::InvalidArgument("depth must be at least 1".into()));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(NtkError::InvalidArgument(format!("a must be positive, got {a}")));
    }
    let rho = rho_sequence(rho0, depth.saturating_sub(2))?;
    let g = rho.iter().map(|&t| g_map(t)).collect::<Result<Vec<_>>>()?;
    // tail[l] = Π_{k=l}^{L-1} g(ρ_{k-1}), built from l = L downwards.
    let mut num = 0.0;
    let mut den = 0.0;
    let mut tail = 1.0;
    for l in (1..=depth).rev() {
        if l < depth {
            tail *= g[l - 1];
        }
        let w = a.powi((depth - l) as i32);
        num += w * tail;
        den += w;
    }
    Ok(num / den)
}
