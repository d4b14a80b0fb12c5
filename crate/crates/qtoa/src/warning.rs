//! Non-fatal diagnostics attached to results.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// The spread bound `σ < v0²/g − 2 q0` is violated.
    SpreadBound { margin: f64 },
    /// Part of the packet support lies beyond the branch point
    /// `2 g x / v0² = 1`, so the expansion coefficients are complex.
    BranchCut { branch_point: f64 },
    /// The amplitude is not negligible at the edge of the integration window.
    SupportTruncation { edge_ratio: f64 },
    /// The binomial series for the classical arrival time is outside its
    /// convergence region.
    SeriesDivergent { ratio: f64 },
    /// Quadrature nodes are too sparse for the kernel's oscillation scale.
    UnderResolvedKernel { spacing: f64, scale: f64 },
    /// Eigenvalue spacing is coarser than the requested τ-grid step.
    CoarseSpectrum { spacing: f64, grid_step: f64 },
    /// The state carries weight close to (or beyond) the box edge.
    BoxEscape { edge_distance: f64 },
}
