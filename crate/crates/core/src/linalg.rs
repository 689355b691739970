//! Dense and banded helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pair_space::PairOperator;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m)?;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    Ok(m.clone().symmetric_eigenvalues().min())
}

pub fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix entry".into()))
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = DMatrix::zeros(m.nrows(), n);
    for (c, &k) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Dense generalized problem `A x = λ B x` with `B` SPD; eigenvectors are
/// B-orthonormal, eigenvalues ascending.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("metric matrix".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let (vals, z) = sym_eigen_sorted(&c);
    let x = l
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve".into()))?;
    Ok((vals, x))
}

/// Cholesky factor of a symmetric banded matrix, lower band storage.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // l[i * (bw + 1) + d] = L[i, i - d]
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `a + shift * b` (pass `b = None` for `a` alone).
    pub fn factor(a: &PairOperator, b: Option<(&PairOperator, f64)>) -> Result<Self> {
        let n = a.dim();
        let mut bw = a.bandwidth();
        if let Some((bm, _)) = b {
            bw = bw.max(bm.bandwidth());
        }
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    l[r * w + (r - c)] += v;
                }
            }
            if let Some((bm, s)) = b {
                for (c, v) in bm.row(r) {
                    if c <= r {
                        l[r * w + (r - c)] += s * v;
                    }
                }
            }
        }
        for j in 0..n {
            // diagonal
            let mut d = l[j * w];
            let kmin = j.saturating_sub(bw);
            for k in kmin..j {
                let ljk = l[j * w + (j - k)];
                d -= ljk * ljk;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("pivot {j} is {d:e}")));
            }
            let djj = d.sqrt();
            l[j * w] = djj;
            // column below the diagonal
            for i in (j + 1)..(j + w).min(n) {
                let mut s = l[i * w + (i - j)];
                let kmin = i.saturating_sub(bw);
                for k in kmin..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                l[i * w + (i - j)] = s / djj;
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::Mesh1D;
    use crate::pair_space::PairSystem;
    use approx::assert_relative_eq;

    #[test]
    fn min_eig_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0]));
        assert_relative_eq!(min_eig_sym(&d).unwrap(), -2.0);
        assert_relative_eq!(min_eig_sym(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = f64::NAN;
        assert!(min_eig_sym(&bad).is_err());
    }

    #[test]
    fn banded_cholesky_solves() {
        let sys = PairSystem::new(Mesh1D::new(1.0, 9).unwrap(), None).unwrap();
        let chol = BandedCholesky::factor(&sys.kinetic, Some((&sys.gram, 0.5))).unwrap();
        let a = sys.kinetic.add_scaled(&sys.gram, 0.5).unwrap();
        let x: Vec<f64> = (0..sys.n2()).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut y = a.matvec(&x);
        chol.solve_in_place(&mut y);
        for (p, q) in x.iter().zip(&y) {
            assert_relative_eq!(p, q, epsilon = 1e-10);
        }
        // shifting past the lowest eigenvalue breaks positive definiteness
        assert!(BandedCholesky::factor(&sys.kinetic, Some((&sys.gram, -1e6))).is_err());
    }

    #[test]
    fn generalized_eigen_b_orthonormal() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 2.0, 0.5, 0.0, 0.5, 2.0]);
        let (vals, x) = generalized_eigen(&a, &b).unwrap();
        let gram = x.transpose() * &b * &x;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-12);
        for k in 0..3 {
            let r = &a * x.column(k) - &b * x.column(k) * vals[k];
            assert!(r.amax() < 1e-12);
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }
}
