//! Finite-width neural tangent kernel laboratory.
//!
//! Exact empirical NTK computation for fully-connected ReLU networks, the
//! closed-form moment and dispersion predictions for the ordered, edge-of-chaos
//! and chaotic phases, and a seeded Monte Carlo harness that compares the two.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod net_core;
pub mod ntk_engine;
pub mod stats;
pub mod theory;

pub use error::{NtkError, Result};
pub use net_core::{
    backward, forward, gd_step, init_network, traces, BackwardTrace, ForwardTrace, NetworkConfig, Parameters,
};
pub use ntk_engine::{
    layer_ratios, ntk_gram, ntk_pair_direct, ntk_pair_fast, rescale_ntk, structure_metrics, LayerRatios, NtkBreakdown,
    StructureMetrics,
};
pub use stats::{bootstrap_se, dispersion_estimator, mean_ratio_estimator, DispersionEstimate, Sample};
pub use theory::{
    dispersion_finite, dispersion_limit, expected_moments, g_map, nondiag_lower_bound, phase_of, r_map, rho_sequence,
    second_moments, MomentSet, Phase, PhasePoint,
};
