//! Dense SPD solves with a pseudo-inverse fallback.

use nalgebra::{DMatrix, DVector};

/// Cholesky is trusted while the diagonal-ratio condition estimate stays below this.
pub(crate) const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SolveRoute {
    Cholesky,
    PseudoInverse,
}

/// Solves M y = b for symmetric positive semi-definite M.
///
/// Falls back to an SVD least-squares solve when the Cholesky factorisation
/// fails or its condition estimate exceeds [`CONDITION_LIMIT`].
pub(crate) fn solve_spd(m: DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, SolveRoute)> {
    if m.nrows() == 0 {
        return Some((DVector::zeros(0), SolveRoute::Cholesky));
    }
    if let Some(chol) = m.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        let estimate = (hi / lo).powi(2);
        if estimate.is_finite() && estimate < CONDITION_LIMIT {
            return Some((chol.solve(b), SolveRoute::Cholesky));
        }
    }
    let scale = m.amax();
    let svd = m.svd(true, true);
    let y = svd.solve(b, scale * 1e-14).ok()?;
    y.iter()
        .all(|v| v.is_finite())
        .then_some((y, SolveRoute::PseudoInverse))
}

/// K diag(w) Kᵀ.
pub(crate) fn weighted_gram(k: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = k.clone();
    for (mut col, &wi) in scaled.column_iter_mut().zip(w.iter()) {
        col *= wi;
    }
    scaled * k.transpose()
}
