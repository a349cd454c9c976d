//! Dispersion-ratio estimation from Monte Carlo draws, bootstrap standard
//! errors and ratio-of-means estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NtkError, Result};
use crate::harness::seeds::derive_seed;

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Largest tolerated fraction of degenerate bootstrap resamples.
pub const MAX_SKIP_FRACTION: f64 = 0.10;

/// I.i.d. draws of one kernel entry across initializations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

impl From<Vec<f64>> for Sample {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// `r̂` together with its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionEstimate {
    pub r_hat: f64,
    pub bootstrap_se: f64,
    pub n: usize,
    pub b: usize,
}

/// Leave-one-out ratio estimator
/// `r̂ = (1/(N−2)) Σ_i θ_i² / [((Σ_{j≠i}θ_j)² − Σ_{j≠i}θ_j²)/((N−1)(N−2))]`.
pub fn dispersion_estimator(s: &Sample) -> Result<f64> {
    dispersion_of(s.values())
}

fn dispersion_of(v: &[f64]) -> Result<f64> {
    let n = v.len();
    if n < 3 {
        return Err(NtkError::DegenerateSample(format!("need at least 3 values, got {n}")));
    }
    if let Some(bad) = v.iter().find(|t| !t.is_finite()) {
        return Err(NtkError::DegenerateSample(format!("non-finite value {bad}")));
    }
    let s1: f64 = v.iter().sum();
    let s2: f64 = v.iter().map(|t| t * t).sum();
    let norm = ((n - 1) * (n - 2)) as f64;
    let mut total = 0.0;
    for (i, &t) in v.iter().enumerate() {
        let rest1 = s1 - t;
        let rest2 = s2 - t * t;
        let den = (rest1 * rest1 - rest2) / norm;
        if !(den > 0.0) {
            return Err(NtkError::DegenerateSample(format!("leave-one-out denominator {den} at index {i}")));
        }
        total += t * t / den;
    }
    Ok(total / (n - 2) as f64)
}

/// Plug-in ratio `μ̂₂/μ̂₁²`.
pub fn naive_dispersion(s: &Sample) -> Result<f64> {
    let v = s.values();
    if v.is_empty() {
        return Err(NtkError::DegenerateSample("empty sample".into()));
    }
    let n = v.len() as f64;
    let m1 = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|t| t * t).sum::<f64>() / n;
    if m1 == 0.0 {
        return Err(NtkError::DegenerateSample("zero sample mean".into()));
    }
    Ok(m2 / (m1 * m1))
}

/// Bootstrap standard error of an arbitrary statistic of `n` indexed items.
///
/// `stat` receives the resampled indices. Resample `k` draws from its own
/// stream derived from `(seed, k)`. Resamples on which `stat` fails are
/// skipped; more than 10% skipped is an error.
pub fn bootstrap_se_indexed<F>(n: usize, b: usize, seed: u64, stat: F) -> Result<f64>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    if b < 2 {
        return Err(NtkError::InvalidArgument(format!("need at least 2 resamples, got {b}")));
    }
    if n == 0 {
        return Err(NtkError::DegenerateSample("empty sample".into()));
    }
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(b);
    let mut skipped = 0usize;
    for k in 0..b {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        match stat(&idx) {
            Ok(v) if v.is_finite() => values.push(v),
            _ => skipped += 1,
        }
    }
    if skipped as f64 > MAX_SKIP_FRACTION * b as f64 || values.len() < 2 {
        return Err(NtkError::DegenerateSample(format!("{skipped} of {b} bootstrap resamples were degenerate")));
    }
    Ok(std_dev(&values))
}

/// Bootstrap standard error of a statistic of a single sample.
pub fn bootstrap_se_of<F>(s: &Sample, b: usize, seed: u64, stat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let v = s.values();
    bootstrap_se_indexed(v.len(), b, seed, |idx| {
        let resample: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        stat(&resample)
    })
}

/// Bootstrap standard error of [`dispersion_estimator`].
pub fn bootstrap_se(s: &Sample, b: usize, seed: u64) -> Result<f64> {
    if s.n() < 3 {
        return Err(NtkError::DegenerateSample(format!("need at least 3 values, got {}", s.n())));
    }
    bootstrap_se_of(s, b, seed, dispersion_of)
}

/// `r̂` with its bootstrap standard error.
pub fn estimate_dispersion(s: &Sample, b: usize, seed: u64) -> Result<DispersionEstimate> {
    Ok(DispersionEstimate { r_hat: dispersion_estimator(s)?, bootstrap_se: bootstrap_se(s, b, seed)?, n: s.n(), b })
}

/// `Σ num_i / Σ den_i` over paired draws.
pub fn mean_ratio_estimator(numerator: &Sample, denominator: &Sample) -> Result<f64> {
    if numerator.n() != denominator.n() {
        return Err(NtkError::DimensionMismatch { expected: numerator.n(), got: denominator.n() });
    }
    let idx: Vec<usize> = (0..numerator.n()).collect();
    ratio_of_sums(numerator.values(), denominator.values(), &idx)
}

fn ratio_of_sums(num: &[f64], den: &[f64], idx: &[usize]) -> Result<f64> {
    let sn: f64 = idx.iter().map(|&i| num[i]).sum();
    let sd: f64 = idx.iter().map(|&i| den[i]).sum();
    if sd == 0.0 {
        return Err(NtkError::DegenerateSample("denominator sums to zero".into()));
    }
    Ok(sn / sd)
}

/// Bootstrap standard error of [`mean_ratio_estimator`], resampling pairs.
pub fn mean_ratio_se(numerator: &Sample, denominator: &Sample, b: usize, seed: u64) -> Result<f64> {
    if numerator.n() != denominator.n() {
        return Err(NtkError::DimensionMismatch { expected: numerator.n(), got: denominator.n() });
    }
    let (num, den) = (numerator.values(), denominator.values());
    bootstrap_se_indexed(num.len(), b, seed, |idx| ratio_of_sums(num, den, idx))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, LogNormal};

    /// The estimator written out with explicit inner sums.
    fn dispersion_quadratic(v: &[f64]) -> f64 {
        let n = v.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (j, &t) in v.iter().enumerate() {
                if j != i {
                    s1 += t;
                    s2 += t * t;
                }
            }
            total += v[i] * v[i] / ((s1 * s1 - s2) / ((n - 1) * (n - 2)) as f64);
        }
        total / (n - 2) as f64
    }

    fn lognormal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = LogNormal::new(0.0, 0.5).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn hand_value() {
        assert_eq!(dispersion_estimator(&vec![1.0, 2.0, 3.0].into()).unwrap(), 6.0);
    }

    #[test]
    fn constant_sample() {
        let r = dispersion_estimator(&vec![2.5; 4].into()).unwrap();
        assert!((r - 4.0 / 2.0).abs() < 1e-15);
        assert_eq!(bootstrap_se(&vec![2.5; 10].into(), 50, 1).unwrap(), 0.0);
    }

    #[test]
    fn matches_quadratic_form() {
        for n in 3..=50 {
            let v = lognormal(n, n as u64);
            let fast = dispersion_estimator(&v.clone().into()).unwrap();
            let slow = dispersion_quadratic(&v);
            assert!(((fast - slow) / slow).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn scale_invariant() {
        let v = lognormal(40, 3);
        let r = dispersion_estimator(&v.clone().into()).unwrap();
        let r5 = dispersion_estimator(&v.iter().map(|t| 5.0 * t).collect::<Vec<_>>().into()).unwrap();
        assert!(((r - r5) / r).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(dispersion_estimator(&vec![1.0, 2.0].into()).is_err());
        assert!(matches!(dispersion_estimator(&vec![1.0, 0.0, 0.0].into()), Err(NtkError::DegenerateSample(_))));
        assert!(dispersion_estimator(&vec![1.0, f64::NAN, 2.0].into()).is_err());
        assert!(bootstrap_se(&vec![1.0, 2.0, 3.0].into(), 1, 0).is_err());
    }

    #[test]
    fn bootstrap_skips_are_bounded() {
        // Resamples of this sample are mostly degenerate.
        let s: Sample = vec![1.0, 0.0, 0.0, 0.0].into();
        assert!(matches!(bootstrap_se(&s, 100, 0), Err(NtkError::DegenerateSample(_))));
    }

    #[test]
    fn bootstrap_deterministic_and_scaling() {
        let s: Sample = lognormal(500, 10).into();
        assert_eq!(bootstrap_se(&s, 200, 4).unwrap(), bootstrap_se(&s, 200, 4).unwrap());
        // A single SE is itself noisy for skewed data, so compare averages.
        let avg_se = |n: usize| {
            (0..12u64).map(|k| bootstrap_se(&lognormal(n, 100 + k).into(), 1000, k).unwrap()).sum::<f64>() / 12.0
        };
        let ratio = avg_se(500) / avg_se(2000);
        assert!((ratio / 2.0 - 1.0).abs() < 0.25, "{ratio}");
    }

    #[test]
    fn mean_ratios() {
        let d: Sample = vec![1.0, 2.0, 4.0].into();
        assert_eq!(mean_ratio_estimator(&d, &d).unwrap(), 1.0);
        let n: Sample = vec![2.0, 4.0, 8.0].into();
        assert_eq!(mean_ratio_estimator(&n, &d).unwrap(), 2.0);
        assert!(mean_ratio_estimator(&n, &vec![1.0, -1.0, 0.0].into()).is_err());
        assert!(mean_ratio_estimator(&n, &vec![1.0].into()).is_err());
        assert_eq!(mean_ratio_se(&d, &d, 20, 0).unwrap(), 0.0);
    }
}
