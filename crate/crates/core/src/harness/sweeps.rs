//! Monte Carlo sweeps over (σw², L) grids.

use log::warn;
use rayon::prelude::*;

use super::config::{ExperimentKind, SweepConfig};
use super::inputs::{gen_pair_with_cosine, gen_unit_input};
use super::output::{Cell, Table, VERSION};
use super::schedule::{ScheduleKind, WidthSchedule};
use super::seeds::CellSeeds;
use super::structure::run_structure_experiment;
use crate::error::{NtkError, Result};
use crate::net_core::{gd_step, init_network, traces, NetworkConfig, SAMPLER_ID};
use crate::ntk_engine::ntk_from_traces;
use crate::stats::{bootstrap_se_of, estimate_dispersion, mean, mean_ratio_estimator, mean_ratio_se, Sample};
use crate::theory::{
    chaotic_limit, dispersion_finite, dispersion_limit, eoc_limit, expected_moments, nondiag_lower_bound, phase_of,
    PhasePoint,
};

/// Header lines shared by every output: config echo, seed, sampler and version.
pub fn header_lines(cfg: &SweepConfig) -> Vec<String> {
    let mut lines = vec![
        format!("experiment: {}", cfg.kind.name()),
        format!("version: {VERSION}"),
        format!("sampler: {SAMPLER_ID}"),
        format!("master_seed: {}", cfg.seed),
        format!("bootstrap_resamples: {}", cfg.bootstrap),
        "seed_derivation: splitmix64(master, cell, sample)".into(),
    ];
    if cfg.kind == ExperimentKind::Structure {
        lines.push("optimizer: full-batch gradient descent (plain GD, not Adam)".into());
    }
    lines.push("config:".into());
    lines.extend(cfg.to_toml_string().lines().map(|l| format!("  {l}")));
    lines
}

fn check_kind(cfg: &SweepConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(NtkError::InvalidConfig(format!("expected a {} config, got {}", kind.name(), cfg.kind.name())));
    }
    cfg.validate()
}

fn status(r: &Result<()>) -> String {
    match r {
        Ok(()) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

/// Grid cells in row-major order (σw² outer, depth inner).
fn grid(cfg: &SweepConfig) -> Vec<(f64, usize)> {
    cfg.sigma_w_sq.iter().flat_map(|&s| cfg.depths.iter().map(move |&l| (s, l))).collect()
}

/// Diagonal kernel values `Θ(x,x)` over `n` seeded initializations.
pub fn sample_diagonal(net: &NetworkConfig, x: &[f64], seeds: &CellSeeds, n: usize) -> Result<Vec<f64>> {
    (0..n as u64)
        .map(|i| {
            let p = init_network(net, seeds.sample(i));
            let (f, b) = traces(&p, x)?;
            Ok(ntk_from_traces(&f, &b, &f, &b).theta)
        })
        .collect()
}

/// Paired `(Θ(x,x̃), Θ(x,x))` over `n` seeded initializations.
pub fn sample_pair(
    net: &NetworkConfig,
    x: &[f64],
    x_tilde: &[f64],
    seeds: &CellSeeds,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut off = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let p = init_network(net, seeds.sample(i));
        let (fa, ba) = traces(&p, x)?;
        let (fb, bb) = traces(&p, x_tilde)?;
        off.push(ntk_from_traces(&fa, &ba, &fb, &bb).theta);
        diag.push(ntk_from_traces(&fa, &ba, &fa, &ba).theta);
    }
    Ok((off, diag))
}

/// `|ΔΘ|/Θ` at `x` after one GD step on `(x, 0)`, over `n` seeded initializations.
pub fn sample_gd_change(net: &NetworkConfig, x: &[f64], eta: f64, seeds: &CellSeeds, n: usize) -> Result<Vec<f64>> {
    (0..n as u64)
        .map(|i| {
            let p = init_network(net, seeds.sample(i));
            let (f, b) = traces(&p, x)?;
            let before = ntk_from_traces(&f, &b, &f, &b).theta;
            if eta == 0.0 {
                return Ok(0.0);
            }
            let q = gd_step(&p, x, 0.0, eta)?;
            let (f, b) = traces(&q, x)?;
            let after = ntk_from_traces(&f, &b, &f, &b).theta;
            Ok((after - before).abs() / before)
        })
        .collect()
}

fn run_cells<T, F>(cells: Vec<T>, workers: usize, f: F) -> Vec<Vec<Cell>>
where
    T: Send + Sync,
    F: Fn(usize, &T) -> Vec<Cell> + Send + Sync,
{
    let go = || cells.par_iter().enumerate().map(|(i, c)| f(i, c)).collect::<Vec<_>>();
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(go),
        Err(_) => cells.iter().enumerate().map(|(i, c)| f(i, c)).collect(),
    }
}

fn finish(cfg: &SweepConfig, columns: Vec<&'static str>, rows: Vec<Vec<Cell>>) -> Table {
    let mut t = Table::new(columns);
    t.header = header_lines(cfg);
    for r in rows {
        t.push(r);
    }
    t
}

const DISPERSION_COLUMNS: [&str; 15] = [
    "cell",
    "sigma_w_sq",
    "L",
    "M",
    "n0",
    "alpha0",
    "lambda",
    "r_hat",
    "bootstrap_se",
    "theory_limit",
    "theory_finite",
    "n",
    "seed",
    "status",
    "version",
];

/// Dispersion `E[Θ²]/E[Θ]²` of the diagonal kernel per `(σw², L)` cell.
pub fn run_dispersion_sweep(cfg: &SweepConfig, workers: usize) -> Result<Table> {
    check_kind(cfg, ExperimentKind::Dispersion)?;
    let n0 = cfg.n0();
    let rows = run_cells(grid(cfg), workers, |cell, &(sigma, depth)| {
        let seeds = CellSeeds::new(cfg.seed, cell as u64);
        let lambda = depth as f64 / cfg.width as f64;
        let mut r_hat = f64::NAN;
        let mut se = f64::NAN;
        let mut limit = f64::NAN;
        let mut finite = f64::NAN;
        let outcome = (|| {
            let net = NetworkConfig::constant_width(depth, n0, cfg.width, sigma, 0.0)?;
            limit = dispersion_limit(&PhasePoint { sigma_w_sq: sigma, lambda, alpha0: cfg.alpha0 })?;
            finite = dispersion_finite(&net)?;
            let x = gen_unit_input(n0, seeds.input())?;
            let sample = Sample::new(sample_diagonal(&net, &x, &seeds, cfg.samples)?);
            let est = estimate_dispersion(&sample, cfg.bootstrap, seeds.bootstrap())?;
            r_hat = est.r_hat;
            se = est.bootstrap_se;
            Ok(())
        })();
        vec![
            cell.into(),
            sigma.into(),
            depth.into(),
            cfg.width.into(),
            n0.into(),
            cfg.alpha0.into(),
            lambda.into(),
            r_hat.into(),
            se.into(),
            limit.into(),
            finite.into(),
            cfg.samples.into(),
            cfg.seed.into(),
            status(&outcome).into(),
            VERSION.into(),
        ]
    });
    Ok(finish(cfg, DISPERSION_COLUMNS.to_vec(), rows))
}

const NONDIAG_COLUMNS: [&str; 15] = [
    "cell",
    "sigma_w_sq",
    "L",
    "M",
    "n0",
    "rho0",
    "ratio",
    "ratio_se",
    "lower_bound",
    "offdiag_r_hat",
    "offdiag_se",
    "n",
    "seed",
    "status",
    "version",
];

/// `E[Θ(x,x̃)]/E[Θ(x,x)]` per `(σw², L, ρ₀)` cell.
pub fn run_nondiag_sweep(cfg: &SweepConfig, workers: usize) -> Result<Table> {
    check_kind(cfg, ExperimentKind::Nondiag)?;
    let n0 = cfg.n0();
    let cells: Vec<(f64, usize, f64)> =
        grid(cfg).into_iter().flat_map(|(s, l)| cfg.cosines.iter().map(move |&r| (s, l, r))).collect();
    let rows = run_cells(cells, workers, |cell, &(sigma, depth, rho)| {
        let seeds = CellSeeds::new(cfg.seed, cell as u64);
        let mut ratio = f64::NAN;
        let mut ratio_se = f64::NAN;
        let mut bound = f64::NAN;
        let mut off_r = f64::NAN;
        let mut off_se = f64::NAN;
        let outcome = (|| {
            let net = NetworkConfig::constant_width(depth, n0, cfg.width, sigma, 0.0)?;
            bound = nondiag_lower_bound(rho, depth, net.a())?;
            let (x, x_tilde) = gen_pair_with_cosine(n0, rho, seeds.input())?;
            let (off, diag) = sample_pair(&net, &x, &x_tilde, &seeds, cfg.samples)?;
            let (off, diag) = (Sample::new(off), Sample::new(diag));
            ratio = mean_ratio_estimator(&off, &diag)?;
            ratio_se = mean_ratio_se(&off, &diag, cfg.bootstrap, seeds.bootstrap())?;
            let est = estimate_dispersion(&off, cfg.bootstrap, seeds.bootstrap())?;
            off_r = est.r_hat;
            off_se = est.bootstrap_se;
            Ok(())
        })();
        vec![
            cell.into(),
            sigma.into(),
            depth.into(),
            cfg.width.into(),
            n0.into(),
            rho.into(),
            ratio.into(),
            ratio_se.into(),
            bound.into(),
            off_r.into(),
            off_se.into(),
            cfg.samples.into(),
            cfg.seed.into(),
            status(&outcome).into(),
            VERSION.into(),
        ]
    });
    Ok(finish(cfg, NONDIAG_COLUMNS.to_vec(), rows))
}

const GD_COLUMNS: [&str; 14] = [
    "cell",
    "sigma_w_sq",
    "L",
    "M",
    "n0",
    "eta",
    "mean_rel_change",
    "bootstrap_se",
    "a_pow_l_eta",
    "warning",
    "n",
    "seed",
    "status",
    "version",
];

/// Relative change of `Θ(x,x)` after one GD step, per `(σw², L)` cell.
pub fn run_gd_step_experiment(cfg: &SweepConfig, workers: usize) -> Result<Table> {
    check_kind(cfg, ExperimentKind::GdStep)?;
    let n0 = cfg.n0();
    let rows = run_cells(grid(cfg), workers, |cell, &(sigma, depth)| {
        let seeds = CellSeeds::new(cfg.seed, cell as u64);
        let stability = (sigma / 2.0).powi(depth as i32) * cfg.eta;
        let warning = if stability > 1.0 {
            warn!("cell {cell}: a^L * eta = {stability:.3e} > 1, the step is outside the stable regime");
            "a^L*eta>1"
        } else {
            ""
        };
        let mut m = f64::NAN;
        let mut se = f64::NAN;
        let outcome = (|| {
            let net = NetworkConfig::constant_width(depth, n0, cfg.width, sigma, 0.0)?;
            let x = gen_unit_input(n0, seeds.input())?;
            let sample = Sample::new(sample_gd_change(&net, &x, cfg.eta, &seeds, cfg.samples)?);
            m = mean(sample.values());
            se = bootstrap_se_of(&sample, cfg.bootstrap, seeds.bootstrap(), |v| Ok(mean(v)))?;
            Ok(())
        })();
        vec![
            cell.into(),
            sigma.into(),
            depth.into(),
            cfg.width.into(),
            n0.into(),
            cfg.eta.into(),
            m.into(),
            se.into(),
            stability.into(),
            warning.into(),
            cfg.samples.into(),
            cfg.seed.into(),
            status(&outcome).into(),
            VERSION.into(),
        ]
    });
    Ok(finish(cfg, GD_COLUMNS.to_vec(), rows))
}

const THEORY_COLUMNS: [&str; 19] = [
    "schedule",
    "m1",
    "m2",
    "sigma_w_sq",
    "phase",
    "L",
    "lambda",
    "alpha0",
    "rho0",
    "theory_limit",
    "limit_chaotic",
    "limit_eoc",
    "theory_finite",
    "e_theta_w",
    "e_theta_b",
    "nondiag_bound",
    "n0",
    "status",
    "version",
];

/// Tabulate the closed-form predictions over the grid and width schedules.
pub fn run_theory_eval(cfg: &SweepConfig) -> Result<Table> {
    check_kind(cfg, ExperimentKind::TheoryOnly)?;
    let rhos = if cfg.cosines.is_empty() { vec![f64::NAN] } else { cfg.cosines.clone() };
    let mut t = Table::new(THEORY_COLUMNS.to_vec());
    t.header = header_lines(cfg);
    for &kind in &cfg.schedules {
        for &sigma in &cfg.sigma_w_sq {
            for &depth in &cfg.depths {
                for &rho in &rhos {
                    t.push(theory_row(cfg, kind, sigma, depth, rho));
                }
            }
        }
    }
    Ok(t)
}

fn theory_row(cfg: &SweepConfig, kind: ScheduleKind, sigma: f64, depth: usize, rho: f64) -> Vec<Cell> {
    let (m1, m2) = match (cfg.m1, cfg.m2) {
        (Some(a), Some(b)) => (a, b),
        _ => (cfg.width, cfg.width),
    };
    let mut v = [f64::NAN; 9];
    let mut n0 = 0usize;
    let mut phase = String::new();
    let outcome = (|| {
        phase = phase_of(sigma)?.to_string();
        let net = if cfg.m1.is_some() {
            WidthSchedule { kind, m1, m2, depth }.network_config(sigma)?
        } else {
            NetworkConfig::constant_width(depth, cfg.n0(), cfg.width, sigma, 0.0)?
        };
        n0 = net.input_dim();
        let mean_width = (m1 + m2) as f64 / 2.0;
        let lambda = depth as f64 / mean_width;
        let alpha0 = n0 as f64 / mean_width;
        let (ew, eb) = expected_moments(&net)?;
        v = [
            lambda,
            alpha0,
            dispersion_limit(&PhasePoint { sigma_w_sq: sigma, lambda, alpha0 })?,
            chaotic_limit(lambda),
            eoc_limit(lambda, alpha0),
            dispersion_finite(&net)?,
            ew,
            eb,
            if rho.is_nan() { f64::NAN } else { nondiag_lower_bound(rho, depth, net.a())? },
        ];
        Ok(())
    })();
    vec![
        kind.name().into(),
        m1.into(),
        m2.into(),
        sigma.into(),
        phase.into(),
        depth.into(),
        v[0].into(),
        v[1].into(),
        rho.into(),
        v[2].into(),
        v[3].into(),
        v[4].into(),
        v[5].into(),
        v[6].into(),
        v[7].into(),
        v[8].into(),
        n0.into(),
        status(&outcome).into(),
        VERSION.into(),
    ]
}

/// Dispatch on the experiment kind.
pub fn run(cfg: &SweepConfig, workers: usize) -> Result<Table> {
    match cfg.kind {
        ExperimentKind::Dispersion => run_dispersion_sweep(cfg, workers),
        ExperimentKind::Nondiag => run_nondiag_sweep(cfg, workers),
        ExperimentKind::GdStep => run_gd_step_experiment(cfg, workers),
        ExperimentKind::Structure => run_structure_experiment(cfg, workers),
        ExperimentKind::TheoryOnly => run_theory_eval(cfg),
    }
}
