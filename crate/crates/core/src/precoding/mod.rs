//! Transmit-side schemes: the closed-form symbol-level precoder, the optimal
//! receive combiner and alternating joint design, the two singular-value
//! precoders, the block-diagonalization baseline and rank diagnostics.

mod bd;
mod closed_form;
mod geometry;
mod rank;
mod ssvmp;

use crate::linalg::ComplexMatrix;

pub use bd::{bd_precoder, BdPrecoder};
pub use closed_form::{joint_design_ao, optimal_combiner, slp_closed_form};
pub use geometry::{build_ci_geometry, build_geometry_from_g, CiGeometry, CombinerSet};
pub use rank::{verify_rank_structure, RankReport};
pub use ssvmp::{sdp_precoder, ssvmp_precoder, GSource};

/// Output of a symbol-level precoder build.
#[derive(Debug, Clone)]
pub struct PrecodeOutcome {
    /// Transmit precoding matrix, N_T x K·L.
    pub precoder: ComplexMatrix,
    /// Component scaling factors in original ordering (length 2·K·L). For
    /// CI-constrained schemes the inner components equal `t` and the outer
    /// ones dominate it; for the CSI-free scheme these are diagnostics only.
    pub gamma: Vec<f64>,
    /// CI margin: distance between the scaled components and the decision
    /// boundaries.
    pub t: f64,
    /// Iterations spent by the scheme's inner solver or outer loop.
    pub iterations: usize,
    /// Singular values of the precoder, descending.
    pub sigma: Vec<f64>,
}

impl PrecodeOutcome {
    /// Column block of user `k` (N_T x L).
    pub fn user_block(&self, k: usize, streams: usize) -> ComplexMatrix {
        self.precoder.block(
            0,
            self.precoder.rows(),
            k * streams,
            (k + 1) * streams,
        )
    }
}
