//! Greedy observation pruning around the ALM solver.
//!
//! Each outer iteration solves on the current observation set, measures the
//! fit residual `|A_ij − M_ij|` on that set and expels every entry whose
//! residual exceeds a threshold. The first threshold is a fixed fraction of
//! the largest residual; later thresholds decay geometrically from it. The
//! sets form a chain `Ω₀ ⊇ Ω₁ ⊇ …`; iteration `k` solves on `Ω_{k−1}`.
//!
//! The loop stops after `max_outer` iterations, or once an iteration removes
//! nothing and the inner solver converged. If pruning would push the density
//! below `min_density` the solve aborts with [`Error::OverPruned`], carrying
//! the trace so far.

use serde::{Deserialize, Serialize};

use crate::alm::{self, AlmConfig, AlmReport};
use crate::error::{Error, Result};
use crate::masking::{MaskedMatrix, ObservationMask};
use crate::numkit::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyConfig {
    /// `T₁ = t1_factor · max_Ω |A¹ − M|`.
    pub t1_factor: f64,
    /// `T_k = decay · T_{k−1}`.
    pub decay: f64,
    pub max_outer: usize,
    /// Abort instead of pruning below this observation density.
    pub min_density: f64,
    /// Residuals at or below `residual_floor · rms(M on Ω₀)` are never
    /// pruned, whatever the threshold. Keeps an exact fit from being
    /// whittled away by its own round-off.
    pub residual_floor: f64,
    pub inner: AlmConfig,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            t1_factor: 0.3,
            decay: 0.65,
            max_outer: 10,
            min_density: 0.01,
            residual_floor: 1e-4,
            inner: AlmConfig::default(),
        }
    }
}

impl GreedyConfig {
    pub fn with_inner(inner: AlmConfig) -> Self {
        Self {
            inner,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::arg(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if !(self.t1_factor > 0.0 && self.t1_factor.is_finite()) {
            return Err(Error::arg(format!("t1_factor must be positive, got {}", self.t1_factor)));
        }
        if self.max_outer == 0 {
            return Err(Error::arg("max_outer must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.min_density) {
            return Err(Error::arg(format!("min_density must lie in [0, 1], got {}", self.min_density)));
        }
        if !(self.residual_floor >= 0.0 && self.residual_floor.is_finite()) {
            return Err(Error::arg(format!("residual_floor must be >= 0, got {}", self.residual_floor)));
        }
        self.inner.validate()
    }
}

/// Record of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyIteration {
    /// `|Ω|` the inner solve ran on.
    pub omega_len: usize,
    pub threshold: f64,
    pub removed: usize,
    pub report: AlmReport,
}

/// Loop state after an outer iteration, as passed to observers.
#[derive(Debug, Clone)]
pub struct GreedyState {
    /// The set the current estimate was computed on.
    pub omega_k: ObservationMask,
    pub a_k: DenseMatrix,
    pub t_k: f64,
    pub outer_k: usize,
    pub history: Vec<GreedyIteration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxOuter,
    /// Nothing pruned and the inner solver converged.
    FixedPoint,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub a: DenseMatrix,
    pub omega_final: ObservationMask,
    pub trace: Vec<GreedyIteration>,
    pub stop: StopReason,
}

impl GreedyOutcome {
    pub fn total_svds(&self) -> usize {
        self.trace.iter().map(|it| it.report.svd_count).sum()
    }
}

/// Payload of [`Error::OverPruned`].
#[derive(Debug, Clone)]
pub struct OverPruned {
    pub density: f64,
    pub min_density: f64,
    pub outer: usize,
    pub last_estimate: DenseMatrix,
    pub trace: Vec<GreedyIteration>,
}

/// `t1_factor · max_{(i,j) ∈ Ω} |A_ij − M_ij|`, Ω being the mask of `m`.
pub fn first_threshold(a1: &DenseMatrix, m: &MaskedMatrix, t1_factor: f64) -> f64 {
    debug_assert_eq!(a1.shape(), m.shape());
    max_residual(a1, m, m.mask()) * t1_factor
}

fn max_residual(a: &DenseMatrix, m: &MaskedMatrix, omega: &ObservationMask) -> f64 {
    let values = m.values();
    omega.iter().map(|idx| (a[idx] - values[idx]).abs()).fold(0.0, f64::max)
}

/// Removes from `omega` every entry with `|A_ij − M_ij| > t`.
pub fn prune(omega: &ObservationMask, a: &DenseMatrix, m: &MaskedMatrix, t: f64) -> (ObservationMask, usize) {
    let values = m.values();
    let victims: Vec<_> = omega.iter().filter(|&idx| (a[idx] - values[idx]).abs() > t).collect();
    let removal = omega.remove(&victims).expect("victims are drawn from the mask");
    (removal.mask, removal.removed)
}

pub fn solve(m: &MaskedMatrix, cfg: &GreedyConfig) -> Result<GreedyOutcome> {
    solve_observed(m, cfg, |_| {})
}

/// [`solve`], calling `observer` after every outer iteration.
pub fn solve_observed(
    m: &MaskedMatrix,
    cfg: &GreedyConfig,
    mut observer: impl FnMut(&GreedyState),
) -> Result<GreedyOutcome> {
    cfg.validate()?;
    let root = m.mask();
    if root.is_empty() {
        return Err(Error::arg("observation set is empty"));
    }
    let rms = m.values().frobenius_norm() / (root.len() as f64).sqrt();
    let floor = cfg.residual_floor * rms;

    let mut omega = root.clone();
    let mut threshold = 0.0;
    let mut history: Vec<GreedyIteration> = Vec::new();
    for outer in 1..=cfg.max_outer {
        let sub;
        let observed = if outer == 1 {
            m
        } else {
            sub = m.restrict(&omega)?;
            &sub
        };
        let sol = alm::solve(observed, &cfg.inner)?;
        threshold = if outer == 1 {
            first_threshold(&sol.a, observed, cfg.t1_factor)
        } else {
            threshold * cfg.decay
        };
        let (next, removed) = prune(&omega, &sol.a, m, threshold.max(floor));
        let converged = sol.report.converged;
        history.push(GreedyIteration {
            omega_len: omega.len(),
            threshold,
            removed,
            report: sol.report,
        });
        log::debug!(
            "outer {outer}: |Ω| = {}, T = {threshold:.3e}, removed {removed}",
            omega.len()
        );
        let state = GreedyState {
            omega_k: omega,
            a_k: sol.a,
            t_k: threshold,
            outer_k: outer,
            history,
        };
        observer(&state);

        let stop = if outer == cfg.max_outer {
            Some(StopReason::MaxOuter)
        } else if removed == 0 && converged {
            Some(StopReason::FixedPoint)
        } else {
            None
        };
        if let Some(stop) = stop {
            return Ok(GreedyOutcome {
                a: state.a_k,
                omega_final: state.omega_k,
                trace: state.history,
                stop,
            });
        }
        if next.density() < cfg.min_density {
            return Err(Error::OverPruned(Box::new(OverPruned {
                density: next.density(),
                min_density: cfg.min_density,
                outer,
                last_estimate: state.a_k,
                trace: state.history,
            })));
        }
        omega = next;
        history = state.history;
    }
    unreachable!("max_outer >= 1 always returns inside the loop")
}
