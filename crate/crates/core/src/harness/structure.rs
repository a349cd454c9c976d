//! Evolution of the kernel's class structure under full-batch GD on a
//! synthetic Gaussian-blob dataset.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ExperimentKind, SweepConfig};
use super::output::{Cell, Table, VERSION};
use super::seeds::CellSeeds;
use super::sweeps::header_lines;
use crate::error::{NtkError, Result};
use crate::net_core::{gd_step_batch, init_network, mean_loss, norm_sq, NetworkConfig, Parameters};
use crate::ntk_engine::{is_psd_gram, min_eigenvalue, ntk_gram, structure_metrics, StructureMetrics};

pub const NUM_CLASSES: usize = 3;
pub const POINTS_PER_CLASS: usize = 10;
/// Noise scale of each blob relative to its unit-norm center.
pub const BLOB_SPREAD: f64 = 3.0;
/// Training is aborted when the loss exceeds this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// Labelled unit-norm inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(NtkError::DimensionMismatch { expected: inputs.len(), got: labels.len() });
        }
        if labels.iter().collect::<BTreeSet<_>>().len() < 2 {
            return Err(NtkError::UndefinedMetric("dataset must contain at least two classes".into()));
        }
        Ok(Self { inputs, labels })
    }

    /// One-vs-rest scalar targets: `+1` for class 0, `−1` otherwise.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|&c| if c == 0 { 1.0 } else { -1.0 }).collect()
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm_sq(&v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `classes` Gaussian blobs of `per_class` points around random unit centers,
/// projected back onto the unit sphere.
pub fn gaussian_blobs(n0: usize, classes: usize, per_class: usize, seed: u64) -> Result<Dataset> {
    if n0 == 0 {
        return Err(NtkError::InvalidArgument("input width must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| unit((0..n0).map(|_| normal()).collect())).collect();
    let scale = BLOB_SPREAD / (n0 as f64).sqrt();
    let mut inputs = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_class {
            inputs.push(unit(c.iter().map(|&ci| ci + scale * normal()).collect()));
            labels.push(k);
        }
    }
    Dataset::new(inputs, labels)
}

/// Epochs at which the kernel is recorded: 0, 1, 2, 5, 10, 20, 50, … and the last.
pub fn snapshot_epochs(epochs: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut decade = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let e = m * decade;
            if e > epochs {
                break 'outer;
            }
            out.push(e);
        }
        decade *= 10;
    }
    if *out.last().unwrap() != epochs {
        out.push(epochs);
    }
    out
}

/// One recorded point of a training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub train_loss: f64,
    pub metrics: StructureMetrics,
    pub min_eig: f64,
    pub psd: bool,
}

/// Train on `data` and record kernel structure at the snapshot epochs.
pub fn train_and_track(params: &Parameters, data: &Dataset, eta: f64, epochs: usize) -> Result<Vec<Snapshot>> {
    let targets = data.targets();
    let schedule = snapshot_epochs(epochs);
    let record = |p: &Parameters, epoch: usize, loss: f64| -> Result<Snapshot> {
        let g = ntk_gram(p, &data.inputs)?;
        Ok(Snapshot {
            epoch,
            train_loss: loss,
            metrics: structure_metrics(&g, &data.labels)?,
            min_eig: min_eigenvalue(&g),
            psd: is_psd_gram(&g),
        })
    };
    let mut p = params.clone();
    let initial = mean_loss(&p, &data.inputs, &targets)?;
    let mut out = vec![record(&p, 0, initial)?];
    let mut next = 1;
    for epoch in 1..=epochs {
        p = gd_step_batch(&p, &data.inputs, &targets, eta)?;
        let loss = mean_loss(&p, &data.inputs, &targets)?;
        if !(loss <= DIVERGENCE_FACTOR * initial) {
            return Err(NtkError::Diverged { epoch, loss, initial });
        }
        if schedule.get(next) == Some(&epoch) {
            out.push(record(&p, epoch, loss)?);
            next += 1;
        }
    }
    Ok(out)
}

const STRUCTURE_COLUMNS: [&str; 16] = [
    "run",
    "sigma_w_sq",
    "L",
    "M",
    "n0",
    "eta",
    "epoch",
    "train_loss",
    "theta_d",
    "theta_c",
    "theta_n",
    "contrast",
    "min_eig",
    "seed",
    "status",
    "version",
];

/// Seeded training runs per `(σw², L)` cell; `samples` runs each.
pub fn run_structure_experiment(cfg: &SweepConfig, workers: usize) -> Result<Table> {
    if cfg.kind != ExperimentKind::Structure {
        return Err(NtkError::InvalidConfig(format!("expected a structure config, got {}", cfg.kind.name())));
    }
    cfg.validate()?;
    let n0 = cfg.n0();
    let cells: Vec<(f64, usize, usize)> = cfg
        .sigma_w_sq
        .iter()
        .flat_map(|&s| cfg.depths.iter().flat_map(move |&l| (0..cfg.samples).map(move |r| (s, l, r))))
        .collect();
    let run_one = |cell: usize, &(sigma, depth, _): &(f64, usize, usize)| -> Vec<Vec<Cell>> {
        let seeds = CellSeeds::new(cfg.seed, cell as u64);
        let base = |epoch: Cell, vals: [f64; 6], status: String| {
            vec![
                cell.into(),
                sigma.into(),
                depth.into(),
                cfg.width.into(),
                n0.into(),
                cfg.eta.into(),
                epoch,
                vals[0].into(),
                vals[1].into(),
                vals[2].into(),
                vals[3].into(),
                vals[4].into(),
                vals[5].into(),
                cfg.seed.into(),
                status.into(),
                VERSION.into(),
            ]
        };
        let outcome = (|| {
            let net = NetworkConfig::constant_width(depth, n0, cfg.width, sigma, 0.0)?;
            let data = gaussian_blobs(n0, NUM_CLASSES, POINTS_PER_CLASS, seeds.data())?;
            train_and_track(&init_network(&net, seeds.sample(0)), &data, cfg.eta, cfg.epochs)
        })();
        match outcome {
            Ok(snaps) => snaps
                .iter()
                .map(|s| {
                    let m = s.metrics;
                    let status = if s.psd { "ok".to_string() } else { "gram not psd".to_string() };
                    base(
                        s.epoch.into(),
                        [s.train_loss, m.theta_d, m.theta_c, m.theta_n, m.block_contrast(), s.min_eig],
                        status,
                    )
                })
                .collect(),
            Err(e) => vec![base(Cell::Text(String::new()), [f64::NAN; 6], e.to_string())],
        }
    };
    let go = || {
        use rayon::prelude::*;
        cells.par_iter().enumerate().map(|(i, c)| run_one(i, c)).collect::<Vec<_>>()
    };
    let rows = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(go),
        Err(_) => cells.iter().enumerate().map(|(i, c)| run_one(i, c)).collect(),
    };
    let mut t = Table::new(STRUCTURE_COLUMNS.to_vec());
    t.header = header_lines(cfg);
    for r in rows.into_iter().flatten() {
        t.push(r);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_unit_and_labelled() {
        let d = gaussian_blobs(8, 3, 10, 1).unwrap();
        assert_eq!(d.inputs.len(), 30);
        assert!(d.inputs.iter().all(|x| (norm_sq(x).sqrt() - 1.0).abs() < 1e-12));
        assert_eq!(d.labels.iter().filter(|&&c| c == 2).count(), 10);
        assert_eq!(d.targets()[0], 1.0);
        assert_eq!(d.targets()[29], -1.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(gaussian_blobs(4, 1, 10, 0).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0]], vec![3, 3]).is_err());
    }

    #[test]
    fn schedule() {
        assert_eq!(snapshot_epochs(0), vec![0]);
        assert_eq!(snapshot_epochs(7), vec![0, 1, 2, 5, 7]);
        assert_eq!(snapshot_epochs(100), vec![0, 1, 2, 5, 10, 20, 50, 100]);
    }

    #[test]
    fn divergence_aborts() {
        let net = NetworkConfig::constant_width(3, 8, 16, 2.0, 0.0).unwrap();
        let data = gaussian_blobs(8, 3, 10, 2).unwrap();
        let err = train_and_track(&init_network(&net, 0), &data, 50.0, 20).unwrap_err();
        assert!(matches!(err, NtkError::Diverged { .. }));
    }

    #[test]
    fn short_run_records_snapshots() {
        let net = NetworkConfig::constant_width(3, 8, 16, 2.0, 0.0).unwrap();
        let data = gaussian_blobs(8, 3, 10, 2).unwrap();
        let snaps = train_and_track(&init_network(&net, 0), &data, 0.05, 20).unwrap();
        assert_eq!(snaps.iter().map(|s| s.epoch).collect::<Vec<_>>(), vec![0, 1, 2, 5, 10, 20]);
        assert!(snaps.iter().all(|s| s.psd));
        assert!(snaps.last().unwrap().train_loss < snaps[0].train_loss);
    }
}
