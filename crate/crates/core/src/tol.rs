//! Default numerical thresholds shared across modules.

/// Singular values at or below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative asymmetry allowed before a matrix is rejected as non-Hermitian.
pub const SYM_TOL: f64 = 1e-10;

/// Residual bound for eigen-decompositions, relative to the matrix norm.
pub const EIG_TOL: f64 = 1e-12;

/// Eigenvalues of `P1 P2 P1` within this distance of 1 span the intersection.
pub const INTERSECTION_GAP: f64 = 1e-8;

/// Largest admissible norm of `(Q + Q* - I)^{-1}`.
pub const PENCIL_COND_CAP: f64 = 1e12;

/// Zero-singular-value cut when splitting the off-diagonal block of an idempotent.
pub const SPLIT_TOL: f64 = 1e-10;

/// Scale-aware idempotency tolerance: `1e-9 * (1 + |Q|^2)`.
pub fn idem_tol(norm: f64) -> f64 {
    1e-9 * (1.0 + norm * norm)
}
