//! Centralized numeric policy.
//!
//! Every tolerance and capacity cap used for validation or verdicts lives
//! here and is passed explicitly to the operations that need it. There are
//! no hidden global thresholds.

/// Tolerances and caps shared by all modules.
///
/// The defaults are chosen for f64 arithmetic at desk scale (total Hilbert
/// dimension up to a few thousand): structural checks sit a few orders of
/// magnitude above machine epsilon, verdict-style tolerances (consistency,
/// degeneracy) are exposed so callers can tighten or relax them per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Max-norm residual allowed for `A - A†` on Hermitian-flagged matrices.
    pub hermitian_tol: f64,
    /// Max-norm residual allowed for `U†U - I`.
    pub unitary_tol: f64,
    /// Max-norm residual allowed for `P² - P`.
    pub projector_tol: f64,
    /// Max-norm bound for `P_i P_j`, `i ≠ j`, within a family.
    pub orthogonality_tol: f64,
    /// Max-norm bound for `Σ_i P_i - I` within a family.
    pub completeness_tol: f64,
    /// Allowed deviation of traces from their exact value.
    pub trace_tol: f64,
    /// Allowed deviation of state norms from 1.
    pub norm_tol: f64,
    /// Most negative admissible eigenvalue of a density operator.
    pub psd_tol: f64,
    /// Max-norm reconstruction residual for eigendecompositions and
    /// Schmidt decompositions.
    pub reconstruction_tol: f64,
    /// Weights (squared coefficients) below this cutoff are treated as
    /// numerically zero and dropped from decompositions.
    pub rank_cutoff: f64,
    /// Relative tolerance for clustering nearly equal weights into one
    /// degeneracy group: `|w_i - w_j| ≤ tol · max(w_i, 1)`.
    pub degeneracy_tol: f64,
    /// Default decoherence-condition tolerance.
    pub consistency_tol: f64,
    /// Default cross-branch record-overlap tolerance.
    pub reinterference_tol: f64,
    /// Hard cap on any total Hilbert-space dimension.
    pub dim_cap: usize,
    /// Cap on the number of enumerated history tuples.
    pub history_cap: usize,
    /// Cap on the number of leaves in a branch tree.
    pub leaf_cap: usize,
    /// Largest point count for which linear extensions are enumerated
    /// exhaustively; above it a seeded sample is used.
    pub exhaustive_point_cap: usize,
    /// Number of sampled linear extensions in the non-exhaustive regime.
    pub sampled_extensions: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            hermitian_tol: 1e-12,
            unitary_tol: 1e-10,
            projector_tol: 1e-10,
            orthogonality_tol: 1e-10,
            completeness_tol: 1e-10,
            trace_tol: 1e-10,
            norm_tol: 1e-12,
            psd_tol: 1e-10,
            reconstruction_tol: 1e-9,
            rank_cutoff: 1e-12,
            degeneracy_tol: 1e-9,
            consistency_tol: 1e-10,
            reinterference_tol: 1e-10,
            dim_cap: 4096,
            history_cap: 1_000_000,
            leaf_cap: 4096,
            exhaustive_point_cap: 8,
            sampled_extensions: 32,
        }
    }
}

impl NumericPolicy {
    /// Policy with a different total-dimension cap, everything else default.
    pub fn with_dim_cap(dim_cap: usize) -> Self {
        NumericPolicy {
            dim_cap,
            ..NumericPolicy::default()
        }
    }
}
