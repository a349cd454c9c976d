//! Random unit-norm inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NtkError, Result};
use crate::net_core::{dot, norm_sq};

fn gaussian_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let norm = norm_sq(&v).sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Isotropic random unit vector in `R^{n0}`.
pub fn gen_unit_input(n0: usize, seed: u64) -> Result<Vec<f64>> {
    if n0 == 0 {
        return Err(NtkError::InvalidArgument("input width must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gaussian_direction(&mut rng, n0))
}

/// Unit vectors `x`, `x̃` with `⟨x, x̃⟩ = rho`, built as `x̃ = ρx + √(1−ρ²)u`
/// with `u ⟂ x`.
pub fn gen_pair_with_cosine(n0: usize, rho: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(rho.abs() <= 1.0) {
        return Err(NtkError::InvalidArgument(format!("cosine must lie in [-1, 1], got {rho}")));
    }
    if n0 == 0 {
        return Err(NtkError::InvalidArgument("input width must be at least 1".into()));
    }
    if n0 == 1 && rho.abs() < 1.0 {
        return Err(NtkError::InvalidArgument("a cosine other than ±1 needs n0 >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_direction(&mut rng, n0);
    if rho.abs() == 1.0 {
        let x_tilde = x.iter().map(|v| rho * v).collect();
        return Ok((x, x_tilde));
    }
    let u = loop {
        let mut u = gaussian_direction(&mut rng, n0);
        for _ in 0..2 {
            let c = dot(&u, &x);
            for (ui, xi) in u.iter_mut().zip(&x) {
                *ui -= c * xi;
            }
        }
        let norm = norm_sq(&u).sqrt();
        if norm > 1e-8 {
            break u.into_iter().map(|v| v / norm).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - rho * rho).sqrt();
    let x_tilde = x.iter().zip(&u).map(|(a, b)| rho * a + s * b).collect();
    Ok((x, x_tilde))
}
