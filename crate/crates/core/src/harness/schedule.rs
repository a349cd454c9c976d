//! Width schedules for architecture sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{NtkError, Result};
use crate::net_core::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    RampUp,
    RampDown,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::RampUp => "ramp_up",
            Self::RampDown => "ramp_down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthSchedule {
    pub kind: ScheduleKind,
    pub m1: usize,
    pub m2: usize,
    pub depth: usize,
}

fn ceil_div(p: i64, q: i64) -> i64 {
    -(-p).div_euclid(q)
}

impl WidthSchedule {
    /// `λ = 2L/(M₁ + M₂)`
    pub fn lambda(&self) -> f64 {
        2.0 * self.depth as f64 / (self.m1 + self.m2) as f64
    }

    /// Average width `(M₁ + M₂)/2`.
    pub fn mean_width(&self) -> f64 {
        (self.m1 + self.m2) as f64 / 2.0
    }

    pub fn network_config(&self, sigma_w_sq: f64) -> Result<NetworkConfig> {
        NetworkConfig::new(width_schedule(self)?, sigma_w_sq, 0.0)
    }
}

/// Widths `n_0 .. n_{L-1}` of a schedule.
pub fn width_schedule(ws: &WidthSchedule) -> Result<Vec<usize>> {
    if ws.depth == 0 || ws.m1 == 0 || ws.m2 == 0 {
        return Err(NtkError::InvalidConfig(format!("invalid width schedule {ws:?}")));
    }
    let (m1, m2, big_l) = (ws.m1 as i64, ws.m2 as i64, ws.depth as i64);
    Ok((0..big_l)
        .map(|l| {
            let n = match ws.kind {
                ScheduleKind::RampUp => m1 + ceil_div(l * (m2 - m1), big_l),
                ScheduleKind::Constant => ceil_div(m1 + m2, 2),
                ScheduleKind::RampDown => m2 + ceil_div(l * (m1 - m2), big_l),
            };
            n.max(1) as usize
        })
        .collect())
}
