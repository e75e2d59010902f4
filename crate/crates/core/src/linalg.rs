//! Small dense kernels on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Thin QR orthonormalization of the columns of `m` with the sign of each
/// column fixed so that the diagonal of R is nonnegative.
///
/// Fails when a column is (numerically) dependent on the previous ones.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if cols > rows {
        return Err(Error::Argument(format!(
            "cannot orthonormalize {cols} columns in dimension {rows}"
        )));
    }
    if cols == 0 {
        return Ok(m.clone());
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let rjj = r[(j, j)];
        if !(rjj.abs() > 1e-13 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Numeric(format!(
                "rank-deficient frame: column {j} has |R_jj| = {rjj:e}"
            )));
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// `max |MᵀM - I|` for a column frame.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Eigen-decomposition of a symmetric matrix with eigenpairs sorted by
/// eigenvalue, largest first. Ties keep nalgebra's order.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Argument(
            "eigen-decomposition needs a square matrix".into(),
        ));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    // The bidiagonalization is cheaper on the tall orientation.
    let tall = if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        m.transpose()
    };
    let svd = nalgebra::SVD::try_new(tall, false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormalize_fixes_signs() {
        let m = DMatrix::from_row_slice(3, 2, &[-2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let q = orthonormalize(&m).unwrap();
        assert!(orthonormality_defect(&q) < 1e-14);
        // R_jj >= 0 means each column keeps the direction of the input column.
        assert!((q[(0, 0)] + 1.0).abs() < 1e-14);
        assert!((q[(1, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_rejects_dependent_columns() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        assert!(orthonormalize(&m).is_err());
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let (vals, vecs) = symmetric_eigen_desc(&m).unwrap();
        assert_eq!(vals.as_slice(), &[3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kron_small() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let k = kron(&a, &b);
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[3.0, 6.0, 4.0, 8.0]));
    }
}
