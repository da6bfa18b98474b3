//! Robust low-rank matrix completion from incomplete, corrupted entries.
//!
//! * [`numkit`]: dense matrices, norms, shrinkage and SVD.
//! * [`masking`]: observation sets and masked matrices.
//! * [`alm`]: the inexact augmented-Lagrange-multiplier solver.
//! * [`sgmca`]: greedy pruning of suspicious observations around [`alm`].
//! * [`synthgen`]: seeded synthetic instances and their file format.
//! * [`benchlab`]: trials, phase-transition sweeps and curve output.

pub mod alm;
pub mod benchlab;
mod error;
pub mod masking;
pub mod numkit;
pub mod sgmca;
pub mod synthgen;

pub use alm::{AlmConfig, AlmReport, AlmSolution, AlmState, InfNormMode};
pub use benchlab::{
    CurveRow, CurveTable, LambdaPolicy, PhasePoint, PhaseValue, Solver, SweepSpec, TrialResult, TrialSpec,
};
pub use error::{Error, Result};
pub use masking::{MaskedMatrix, ObservationMask};
pub use numkit::{DenseMatrix, SvdResult};
pub use sgmca::{GreedyConfig, GreedyOutcome, GreedyState};
pub use synthgen::{ErrorModel, Instance, InstanceSpec};
