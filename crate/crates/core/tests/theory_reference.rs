//! Closed-form predictions against independent references.
//!
//! Limit values were produced by `tests/oracle/dispersion_limit_mp.py` at 50
//! digits. Finite-width second moments are checked against a brute-force
//! expansion over ordered layer pairs built from single-layer ratio moments.

#![allow(clippy::excessive_precision)]

use ntklab::theory::{eoc_limit, eoc_limit_grouped};
use ntklab::{dispersion_finite, dispersion_limit, expected_moments, second_moments, NetworkConfig, PhasePoint};

const CHAOTIC: [(f64, f64); 3] =
    [(0.25, 2.568050833375482968146841), (0.5, 6.915607615701800792459413), (1.0, 55.99471989202360693733838)];

const EOC: [(f64, f64, f64); 18] = [
    (0.25, 0.1, 2.408203026140340220519151),
    (0.25, 0.5, 2.051090120781047935041298),
    (0.25, 1.0, 1.863918550728702805065637),
    (0.25, 2.0, 1.724286171506272599474717),
    (0.5, 0.1, 6.230402402815435012919471),
    (0.5, 0.5, 4.705414972316089314827396),
    (0.5, 1.0, 3.911989698358289218588774),
    (0.5, 2.0, 3.326345122890526217401743),
    (1.0, 0.1, 48.45964726589181390073334),
    (1.0, 0.5, 31.76915419386323200214268),
    (1.0, 1.0, 23.16575008611600030228707),
    (1.0, 2.0, 16.90193180592407244759297),
    (0.25, 0.3, 2.189901572350022770341812),
    (0.25, 0.01, 2.54995533880396019679411),
    (0.5, 0.3, 5.296952292817712545556096),
    (0.5, 0.01, 6.837981557309681158147793),
    (1.0, 0.3, 38.22642778392451969314001),
    (1.0, 0.01, 55.14029161311515558293006),
];

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn chaotic_limits_match_high_precision() {
    for (lambda, want) in CHAOTIC {
        for sigma in [2.5, 3.0, 4.0] {
            let got = dispersion_limit(&PhasePoint { sigma_w_sq: sigma, lambda, alpha0: 1.0 }).unwrap();
            assert!(rel(got, want) < 1e-12, "λ={lambda}: {got} vs {want}");
        }
    }
}

#[test]
fn eoc_limits_match_high_precision() {
    for (lambda, alpha0, want) in EOC {
        let got = dispersion_limit(&PhasePoint { sigma_w_sq: 2.0, lambda, alpha0 }).unwrap();
        assert!(rel(got, want) < 1e-12, "λ={lambda} α0={alpha0}: {got} vs {want}");
        assert!(rel(eoc_limit_grouped(lambda, alpha0), want) < 1e-12);
        assert_eq!(got, eoc_limit(lambda, alpha0));
    }
}

#[test]
fn ordered_limit_is_one() {
    for sigma in [0.5, 1.0, 1.9] {
        for lambda in [0.1, 1.0, 5.0] {
            assert_eq!(dispersion_limit(&PhasePoint { sigma_w_sq: sigma, lambda, alpha0: 1.0 }).unwrap(), 1.0);
        }
    }
}

/// Joint moment `E[N_x^e_x N_δ^e_δ]` of one layer's ratios, with `r = n_k/n_{k−1}`.
fn layer_moment(a: f64, r: f64, n: f64, e_x: u8, e_d: u8) -> f64 {
    match (e_x, e_d) {
        (0, 0) => 1.0,
        (1, 0) => a * r,
        (0, 1) => a,
        (2, 0) => a * a * r * r * (1.0 + 5.0 / n),
        (0, 2) => a * a * (1.0 + 5.0 / n),
        (1, 1) => a * a * r * (1.0 + 1.0 / n),
        _ => unreachable!(),
    }
}

/// Which ratios the per-layer term of layer `l` carries at hidden layer `k`:
/// weight terms carry `N_x^k` below `l` and `N_δ^k` from `l` on, bias terms
/// only the latter.
fn exponents(l: usize, k: usize, weight: bool) -> (u8, u8) {
    match (k < l, weight) {
        (true, true) => (1, 0),
        (true, false) => (0, 0),
        (false, _) => (0, 1),
    }
}

/// `E[term(l1) · term(l2)]` as a product of independent per-layer moments.
fn pair_moment(cfg: &NetworkConfig, l1: (usize, bool), l2: (usize, bool)) -> f64 {
    let a = cfg.a();
    (1..cfg.depth())
        .map(|k| {
            let (x1, d1) = exponents(l1.0, k, l1.1);
            let (x2, d2) = exponents(l2.0, k, l2.1);
            let r = cfg.width(k) as f64 / cfg.width(k - 1) as f64;
            layer_moment(a, r, cfg.width(k) as f64, x1 + x2, d1 + d2)
        })
        .product()
}

fn brute_force(cfg: &NetworkConfig) -> [f64; 5] {
    let depth = cfg.depth();
    let single = |weight: bool| -> f64 {
        (1..=depth)
            .map(|l| {
                let a = cfg.a();
                (1..depth)
                    .map(|k| {
                        let (x, d) = exponents(l, k, weight);
                        let r = cfg.width(k) as f64 / cfg.width(k - 1) as f64;
                        layer_moment(a, r, cfg.width(k) as f64, x, d)
                    })
                    .product::<f64>()
            })
            .sum()
    };
    let double = |w1: bool, w2: bool| -> f64 {
        let mut s = 0.0;
        for l1 in 1..=depth {
            for l2 in 1..=depth {
                s += pair_moment(cfg, (l1, w1), (l2, w2));
            }
        }
        s
    };
    [single(true), single(false), double(true, true), double(false, false), double(true, false)]
}

fn configs() -> Vec<NetworkConfig> {
    let mut out = Vec::new();
    for sigma in [1.0, 1.7, 2.0, 2.6] {
        for depth in [1, 2, 3, 7, 12, 20] {
            out.push(NetworkConfig::constant_width(depth, 30, 50, sigma, 0.0).unwrap());
            let widths: Vec<usize> = (0..depth).map(|k| 10 + (7 * k * k + 3 * k) % 41).collect();
            out.push(NetworkConfig::new(widths, sigma, 0.0).unwrap());
        }
    }
    out
}

#[test]
fn moments_match_layer_pair_expansion() {
    for cfg in configs() {
        let m = second_moments(&cfg).unwrap();
        let [w, b, ww, bb, wb] = brute_force(&cfg);
        let got = [m.e_theta_w, m.e_theta_b, m.e_theta_w_sq, m.e_theta_b_sq, m.e_theta_wb];
        for (g, want) in got.iter().zip([w, b, ww, bb, wb]) {
            assert!(rel(*g, want) < 1e-12, "{:?}: {got:?} vs {:?}", cfg.widths(), [w, b, ww, bb, wb]);
        }
        let (ew, eb) = expected_moments(&cfg).unwrap();
        assert!(rel(ew, w) < 1e-12 && rel(eb, b) < 1e-12);
    }
}

#[test]
fn finite_width_approaches_limit() {
    // At M = 500 the finite-width prediction is within a few percent.
    for (sigma, lambda, limit) in [(3.0, 0.5, CHAOTIC[1].1), (2.0, 0.5, EOC[6].2), (1.0, 0.5, 1.0)] {
        let m = 500;
        let cfg = NetworkConfig::constant_width((lambda * m as f64) as usize, m, m, sigma, 0.0).unwrap();
        let d = dispersion_finite(&cfg).unwrap();
        assert!(rel(d, limit) < 0.05, "σw²={sigma}: {d} vs {limit}");
    }
}

#[test]
fn limit_gap_shrinks_with_width() {
    for sigma in [2.0, 3.0] {
        let gap = |m: usize| {
            let cfg = NetworkConfig::constant_width(m / 2, m, m, sigma, 0.0).unwrap();
            let limit = dispersion_limit(&PhasePoint { sigma_w_sq: sigma, lambda: 0.5, alpha0: 1.0 }).unwrap();
            rel(dispersion_finite(&cfg).unwrap(), limit)
        };
        assert!(gap(400) < gap(200) && gap(200) < gap(100));
    }
}
