use nalgebra::DMatrix;

use super::Mat;

/// Number of singular values above `rel_tol * sigma_max * max(rows, cols)`,
/// after scaling every nonzero column to unit Euclidean norm. Column scaling
/// leaves the rank unchanged but keeps one large column from hiding the rest.
pub(super) fn svd_rank(m: &Mat<f64>, rel_tol: f64) -> usize {
    let mut dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.entries());
    for mut col in dm.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 && norm.is_finite() {
            col /= norm;
        }
    }
    let sv = dm.singular_values();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 || !sigma_max.is_finite() {
        return 0;
    }
    let cutoff = rel_tol * sigma_max * m.rows().max(m.cols()) as f64;
    sv.iter().filter(|&&s| s > cutoff).count()
}
