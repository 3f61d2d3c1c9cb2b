//! Small dense helpers on top of nalgebra: Hermitian spectral functions and a
//! principal matrix logarithm.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(c)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvalsh_real(m: &RMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Apply a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for r in 0..n {
            scaled[(r, j)] *= fv;
        }
    }
    &scaled * vectors.adjoint()
}

pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

pub fn det(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or_else(|| Error::LogBranchFailure {
        reason: "singular matrix during inversion".into(),
    })
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Principal logarithm by inverse scaling and squaring: take Denman-Beavers
/// square roots until the matrix is close to the identity, then sum the
/// Mercator series.
pub fn logm(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if let Some(eigs) = Schur::new(m.clone()).eigenvalues() {
        for z in eigs.iter() {
            if z.norm() < 1e-300 {
                return Err(Error::LogBranchFailure {
                    reason: "zero eigenvalue".into(),
                });
            }
            if z.re < 0.0 && z.im.abs() <= 1e-12 * z.norm().max(1.0) {
                return Err(Error::LogBranchFailure {
                    reason: format!("eigenvalue {z} on the negative real axis"),
                });
            }
        }
    }

    let id = CMatrix::identity(n, n);
    let mut y = m.clone();
    let mut squarings = 0u32;
    while frobenius(&(&y - &id)) > 0.05 {
        y = sqrtm_db(&y)?;
        squarings += 1;
        if squarings > 64 {
            return Err(Error::LogBranchFailure {
                reason: "square-root iteration did not approach the identity".into(),
            });
        }
    }

    let e = &y - &id;
    let mut term = e.clone();
    let mut acc = e.clone();
    for j in 2..60 {
        term = &term * &e;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let add = &term * c(sign / j as f64);
        acc += &add;
        if frobenius(&add) < 1e-18 {
            break;
        }
    }
    Ok(acc * c(2f64.powi(squarings as i32)))
}

fn sqrtm_db(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = CMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let y_next = (&y + &zi) * c(0.5);
        let z_next = (&z + &yi) * c(0.5);
        let delta = frobenius(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * frobenius(&y).max(1.0) {
            return Ok(y);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logm_inverts_expm() {
        let m = CMatrix::from_fn(4, 4, |r, col| {
            Complex64::new(0.1 * (r as f64 - col as f64), 0.05 * ((r + 2 * col) % 3) as f64)
        });
        let back = logm(&expm(&m)).unwrap();
        assert!(max_abs(&(back - m)) < 1e-11);
    }

    #[test]
    fn logm_rejects_negative_axis() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-2.0)]));
        assert!(matches!(logm(&m), Err(Error::LogBranchFailure { .. })));
    }

    #[test]
    fn hermitian_map_identity() {
        let m = CMatrix::from_fn(3, 3, |r, col| {
            if r == col {
                c(r as f64)
            } else if r < col {
                Complex64::new(0.3, 0.2)
            } else {
                Complex64::new(0.3, -0.2)
            }
        });
        assert!(max_abs(&(hermitian_map(&m, |x| x) - &m)) < 1e-13);
    }
}
