//! Dense helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Orthonormal basis of the column space of `cols` by modified Gram–Schmidt
/// with greedy column pivoting. Columns whose residual norm falls below
/// `tol` are dropped; at most `max_rank` columns are returned. Ties in the
/// pivot choice go to the lowest column index, so the result is reproducible.
pub fn pivoted_orthonormal_basis(cols: &DMatrix<f64>, tol: f64, max_rank: usize) -> DMatrix<f64> {
    let n = cols.nrows();
    let mut work: Vec<DVector<f64>> = cols.column_iter().map(|c| c.into_owned()).collect();
    let mut used = vec![false; work.len()];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    while basis.len() < max_rank {
        let mut best: Option<(usize, f64)> = None;
        for (j, w) in work.iter().enumerate() {
            if used[j] {
                continue;
            }
            let norm = w.norm();
            if best.is_none_or(|(_, b)| norm > b) {
                best = Some((j, norm));
            }
        }
        let Some((j, norm)) = best else { break };
        if norm <= tol {
            break;
        }
        used[j] = true;
        let q = &work[j] / norm;
        for (k, w) in work.iter_mut().enumerate() {
            if !used[k] {
                let d = q.dot(w);
                w.axpy(-d, &q, 1.0);
            }
        }
        basis.push(q);
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Gram–Schmidt on the columns in order, preserving the orientation of the
/// spanned frame (the implied triangular factor has positive diagonal).
/// Returns `None` when a column is numerically dependent on its predecessors.
pub fn orthonormalize_ordered(frame: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let mut out = frame.clone();
    for j in 0..out.ncols() {
        let mut col = out.column(j).into_owned();
        for _ in 0..2 {
            for k in 0..j {
                let q = out.column(k).into_owned();
                let d = q.dot(&col);
                col.axpy(-d, &q, 1.0);
            }
        }
        let norm = col.norm();
        if norm <= tol {
            return None;
        }
        out.set_column(j, &(col / norm));
    }
    Some(out)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending and each eigenvector's largest-magnitude entry made positive.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (j, &k) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[k]);
        let mut v = eig.eigenvectors.column(k).into_owned();
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v = -v;
        }
        vecs.set_column(j, &v);
    }
    (vals, vecs)
}

/// Frobenius norm of `QᵀQ − I`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm()
}

/// Least-squares fit of `y = a + b x`; returns the slope `b`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Rank from singular values, relative threshold.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max.max(1.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_basis_of_projector() {
        let p = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, 0.0]));
        let q = pivoted_orthonormal_basis(&p, 1e-10, 3);
        assert_eq!(q.ncols(), 2);
        assert!(orthogonality_defect(&q) < 1e-14);
        assert_eq!(q[(0, 0)], 1.0);
        assert_eq!(q[(1, 1)], 1.0);
    }

    #[test]
    fn ordered_gram_schmidt_keeps_orientation() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, -3.0]);
        let q = orthonormalize_ordered(&f, 1e-12).unwrap();
        assert!(f.determinant() * q.determinant() > 0.0);
        assert!(orthonormalize_ordered(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]), 1e-12).is_none());
    }

    #[test]
    fn slope_of_cubic() {
        let xs: Vec<f64> = [1e-1f64, 1e-2, 1e-3].iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = [1e-1f64, 1e-2, 1e-3].iter().map(|r| (2.0 * r * r * r).ln()).collect();
        assert!((fit_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
