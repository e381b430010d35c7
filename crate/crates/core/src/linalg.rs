//! Small dense symmetric linear algebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

const SYMMETRY_TOL: f64 = 1e-10;
const PIVOT_FLOOR: f64 = 1e-14;

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor; fails if any pivot drops to 1e-14 or below.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    check_symmetric(a)?;
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_FLOOR) {
            return Err(Error::NotSpd { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Determinant of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_cholesky_det(a: &Matrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(l.diagonal().iter().map(|d| d * d).product())
}

/// In-place variant of [`spd_cholesky_det`] for a row-major `k x k` buffer.
/// The lower triangle is overwritten with the factor; symmetry is assumed.
pub(crate) fn spd_det_in_place(a: &mut [f64], k: usize) -> Result<f64> {
    let mut det = 1.0;
    for j in 0..k {
        let mut d = a[j * k + j];
        for t in 0..j {
            d -= a[j * k + t] * a[j * k + t];
        }
        if !(d > PIVOT_FLOOR) {
            return Err(Error::NotSpd { index: j, pivot: d });
        }
        det *= d;
        let djj = d.sqrt();
        a[j * k + j] = djj;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for t in 0..j {
                s -= a[i * k + t] * a[j * k + t];
            }
            a[i * k + j] = s / djj;
        }
    }
    Ok(det)
}

/// Symmetric inverse square root `A^{-1/2}` of an SPD matrix.
pub fn spd_inverse_sqrt(a: &Matrix) -> Result<Matrix> {
    check_symmetric(a)?;
    let eig = SymmetricEigen::new(a.clone());
    if let Some((index, &pivot)) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > PIVOT_FLOOR))
    {
        return Err(Error::NotSpd { index, pivot });
    }
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}
