//! Inexact augmented-Lagrange-multiplier solver for robust matrix completion.
//!
//! Minimizes `‖A‖_* + λ|E|₁ + ⟨Y, R⟩ + (μ/2)|R|₂²` with `R = M − A − E`
//! restricted to the observed set. Each iteration does a single alternating
//! update per penalty level:
//!
//! ```text
//! (U, S, V) = svd(M − E + Y/μ)
//! A        = U · shrink(S, 1/μ) · Vᵀ
//! E        = shrink(M − A + Y/μ, λ/μ)     on Ω
//!          = M − A + Y/μ                  off Ω (so R and Y vanish there)
//! Y        = Y + μ (M − A − E)
//! μ        = ρ μ
//! ```
//!
//! With the zero fill off Ω this makes `M − E + Y/μ` equal to the previous
//! estimate of `A` on the erasures, which is the usual completion update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::MaskedMatrix;
use crate::numkit::{self, soft_threshold, DenseMatrix};

/// Upper bound on the penalty weight; the geometric schedule is clamped here.
pub const MU_CEILING: f64 = 1e12;

/// Which reading of `‖M‖_∞` scales the initial multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfNormMode {
    /// Maximum absolute row sum.
    #[default]
    Operator,
    /// Largest absolute entry.
    Elementwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlmConfig {
    /// Weight of the `|E|₁` term.
    pub lambda: f64,
    /// `μ₀ = mu0_factor / ‖M‖₂`.
    pub mu0_factor: f64,
    /// `ρ = rho_base + rho_slope · d(Ω)`.
    pub rho_base: f64,
    pub rho_slope: f64,
    /// Stop once `‖P_Ω(M − A − E)‖_F / ‖P_Ω(M)‖_F < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep only the `r` largest singular values before shrinkage.
    pub rank_cap: Option<usize>,
    pub inf_norm_mode: InfNormMode,
}

impl Default for AlmConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu0_factor: 0.3,
            rho_base: 1.1,
            rho_slope: 0.5,
            tol: 1e-7,
            max_iter: 1000,
            rank_cap: None,
            inf_norm_mode: InfNormMode::Operator,
        }
    }
}

impl AlmConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::arg(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.mu0_factor > 0.0 && self.mu0_factor.is_finite()) {
            return Err(Error::arg(format!("mu0_factor must be positive, got {}", self.mu0_factor)));
        }
        // ρ is affine in the density, so checking both ends covers [0, 1].
        if !(self.rho_base > 1.0 && self.rho_base + self.rho_slope > 1.0) || !self.rho_slope.is_finite() {
            return Err(Error::arg(format!(
                "rho = {} + {}·d must exceed 1 for every density",
                self.rho_base, self.rho_slope
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        if self.rank_cap == Some(0) {
            return Err(Error::arg("rank_cap must be at least 1"));
        }
        Ok(())
    }

    pub fn rho(&self, density: f64) -> f64 {
        self.rho_base + self.rho_slope * density
    }
}

/// One ALM iterate.
#[derive(Debug, Clone)]
pub struct AlmState {
    pub a: DenseMatrix,
    pub e: DenseMatrix,
    pub y: DenseMatrix,
    pub mu: f64,
    pub k: usize,
    /// Relative residual on Ω after the last update.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub svd_count: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct AlmSolution {
    pub a: DenseMatrix,
    pub e: DenseMatrix,
    pub report: AlmReport,
}

fn observed_norm(m: &MaskedMatrix) -> f64 {
    m.values().frobenius_norm()
}

/// `Y⁰ = M / max(‖M‖₂, ‖M‖_∞/λ)`, `E⁰ = A⁰ = 0`, `μ₀ = mu0_factor/‖M‖₂`.
pub fn init_state(m: &MaskedMatrix, cfg: &AlmConfig) -> Result<AlmState> {
    cfg.validate()?;
    if m.mask().is_empty() {
        return Err(Error::arg("observation set is empty"));
    }
    let values = m.values();
    if observed_norm(m) == 0.0 {
        return Err(Error::arg("observed matrix is zero on its mask; scale undefined"));
    }
    let spectral = numkit::singular_values(values)?[0];
    let inf = match cfg.inf_norm_mode {
        InfNormMode::Operator => numkit::max_abs_row_sum(values),
        InfNormMode::Elementwise => values.max_abs(),
    };
    let scale = spectral.max(inf / cfg.lambda);
    let (r, c) = values.shape();
    Ok(AlmState {
        a: DenseMatrix::zeros(r, c),
        e: DenseMatrix::zeros(r, c),
        y: values.scale(1.0 / scale)?,
        mu: cfg.mu0_factor / spectral,
        k: 0,
        residual: 1.0,
        converged: false,
    })
}

/// One pass of the update sequence in the module docs.
pub fn step(state: AlmState, m: &MaskedMatrix, cfg: &AlmConfig) -> Result<AlmState> {
    let k = state.k;
    step_inner(state, m, cfg).map_err(|e| Error::AlmIteration {
        iteration: k,
        source: Box::new(e),
    })
}

fn step_inner(state: AlmState, m: &MaskedMatrix, cfg: &AlmConfig) -> Result<AlmState> {
    let AlmState { e, mut y, mu, k, .. } = state;
    let values = m.values();
    let inv_mu = 1.0 / mu;

    let w = values.zip_map(&e, |mv, ev| mv - ev)?.zip_map(&y, |t, yv| t + yv * inv_mu)?;
    let dec = numkit::svd(&w)?;
    let keep = cfg.rank_cap.unwrap_or(usize::MAX);
    let sigma: Vec<f64> = dec
        .singular_values
        .iter()
        .enumerate()
        .map(|(l, &s)| if l < keep { soft_threshold(s, inv_mu) } else { 0.0 })
        .take_while(|&s| s > 0.0)
        .collect();
    let a = dec.reconstruct_with(&sigma).check_finite("singular value thresholding")?;

    let observed = m.mask().indicator();
    let e_thresh = cfg.lambda * inv_mu;
    let mut e = e;
    let mut resid_sq = 0.0;
    {
        let (mv, av) = (values.as_slice(), a.as_slice());
        let ev = e.as_mut_slice();
        let yv = y.as_mut_slice();
        for idx in 0..mv.len() {
            let t = mv[idx] - av[idx] + yv[idx] * inv_mu;
            ev[idx] = if observed[idx] { soft_threshold(t, e_thresh) } else { t };
            let r = mv[idx] - av[idx] - ev[idx];
            yv[idx] += mu * r;
            resid_sq += r * r;
        }
    }
    let e = e.check_finite("sparse-error update")?;
    let y = y.check_finite("multiplier update")?;

    let rho = cfg.rho(m.mask().density());
    let mut next_mu = mu * rho;
    if next_mu > MU_CEILING {
        if mu < MU_CEILING {
            log::warn!("penalty weight reached {MU_CEILING:e} at iteration {}; holding it there", k + 1);
        }
        next_mu = MU_CEILING;
    }
    let residual = resid_sq.sqrt() / observed_norm(m);
    Ok(AlmState {
        a,
        e,
        y,
        mu: next_mu,
        k: k + 1,
        residual,
        converged: residual < cfg.tol,
    })
}

/// Runs [`step`] from [`init_state`] until the relative residual drops below
/// `tol` or `max_iter` is reached. Hitting `max_iter` is reported, not an
/// error.
pub fn solve(m: &MaskedMatrix, cfg: &AlmConfig) -> Result<AlmSolution> {
    let mut state = init_state(m, cfg)?;
    let mut svd_count = 1;
    while !state.converged && state.k < cfg.max_iter {
        state = step(state, m, cfg)?;
        svd_count += 1;
    }
    Ok(AlmSolution {
        report: AlmReport {
            iterations: state.k,
            final_residual: state.residual,
            svd_count,
            converged: state.converged,
        },
        a: state.a,
        e: state.e,
    })
}

/// Value of the augmented Lagrangian at `state`. The `|E|₁` term and the
/// residual only see the observed entries.
pub fn lagrangian(state: &AlmState, m: &MaskedMatrix, cfg: &AlmConfig) -> Result<f64> {
    let mask = m.mask();
    let e_obs = crate::masking::project(&state.e, mask)?;
    let r = crate::masking::project(&m.values().sub(&state.a)?.sub(&state.e)?, mask)?;
    Ok(numkit::nuclear_norm(&state.a)?
        + cfg.lambda * numkit::elementwise_norm(&e_obs, 1.0)?
        + numkit::inner_product(&state.y, &r)?
        + 0.5 * state.mu * r.frobenius_norm().powi(2))
}
