//! Hat-function moment family on `[-L, L]` and the moment matrices of a pool.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem1d::{split_interval, PiecewiseQuadratic};
use crate::quadrature::GaussRule;

/// Relative singular value threshold below which a constraint direction is null.
pub const ROWSPACE_THRESHOLD: f64 = 1e-11;

/// `M` nodal P1 hats on a uniform grid over `[-L, L]`, endpoint hats included,
/// so the family sums to one everywhere on the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFamily {
    count: usize,
    half_width: f64,
}

impl MomentFamily {
    pub fn new(half_width: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "moment family needs at least 2 hats, got {count}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half width {half_width}")));
        }
        Ok(Self { count, half_width })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.count - 1) as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        -self.half_width + m as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|m| self.node(m)).collect()
    }

    /// Value of hat `m` at `x`.
    pub fn eval(&self, m: usize, x: f64) -> f64 {
        (1.0 - ((x - self.node(m)) / self.spacing()).abs()).max(0.0)
    }

    /// Left hat index and the weight of that hat at `x`; the right neighbour
    /// carries `1 - weight`.
    fn cell(&self, x: f64) -> (usize, f64) {
        let s = (x + self.half_width) / self.spacing();
        let j = (s.floor().max(0.0) as usize).min(self.count - 2);
        let t = s - j as f64;
        (j, 1.0 - t)
    }

    /// `Σ_m y_m φ_m(x)`.
    pub fn combine(&self, y: &[f64], x: f64) -> f64 {
        let (j, w) = self.cell(x);
        w * y[j] + (1.0 - w) * y[j + 1]
    }

    /// Hat-interpolant coefficients of `f` (its nodal values).
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }

    /// `∫ φ_m ρ` for every hat; exact for piecewise quadratic `ρ`.
    pub fn moments_of(&self, rho: &PiecewiseQuadratic) -> DVector<f64> {
        let rule = GaussRule::new(2);
        let nodes = self.nodes();
        let mesh = rho.mesh();
        let h = mesh.h();
        let mut out = DVector::zeros(self.count);
        for (e, c) in rho.coeffs().iter().enumerate() {
            let (a, b) = mesh.element(e);
            for (s0, s1) in split_interval(a, b, &nodes) {
                for (x, w) in rule.on(s0, s1) {
                    let r = w * crate::fem1d::bernstein(c, (x - a) / h);
                    let (j, wl) = self.cell(x);
                    out[j] += wl * r;
                    out[j + 1] += (1.0 - wl) * r;
                }
            }
        }
        out
    }
}

/// Target moments `b_m = ∫ φ_m ρ`.
pub fn target_moments(family: &MomentFamily, rho: &PiecewiseQuadratic) -> DVector<f64> {
    family.moments_of(rho)
}

/// `A_m[k, l] = ∫ φ_m ρ_kl` from the row-major upper-triangular cross densities
/// of a pool of size `k`.
pub fn pool_moment_matrices(
    family: &MomentFamily,
    k: usize,
    cross: &[PiecewiseQuadratic],
) -> Result<Vec<DMatrix<f64>>> {
    use rayon::prelude::*;
    if cross.len() != k * (k + 1) / 2 {
        return Err(Error::DimensionMismatch(format!(
            "{} cross densities for a pool of {k}",
            cross.len()
        )));
    }
    let per_pair: Vec<DVector<f64>> = cross.par_iter().map(|r| family.moments_of(r)).collect();
    let mut out = vec![DMatrix::zeros(k, k); family.len()];
    let mut idx = 0;
    for a in 0..k {
        for b in a..k {
            for (m, am) in out.iter_mut().enumerate() {
                am[(a, b)] = per_pair[idx][m];
                am[(b, a)] = per_pair[idx][m];
            }
            idx += 1;
        }
    }
    Ok(out)
}

/// Orthonormal basis of the coefficient directions that act on the pool.
#[derive(Debug, Clone)]
pub struct RowSpace {
    /// `M × r`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Set when every direction is null.
    pub degenerate: bool,
}

impl RowSpace {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// `Ã_j = Σ_m Q_mj A_m`.
    pub fn reduce_matrices(&self, a: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        (0..self.rank())
            .map(|j| {
                let mut out = DMatrix::zeros(a[0].nrows(), a[0].ncols());
                for (m, am) in a.iter().enumerate() {
                    let q = self.basis[(m, j)];
                    if q != 0.0 {
                        out += am * q;
                    }
                }
                out
            })
            .collect()
    }

    pub fn reduce_vector(&self, b: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(b)
    }

    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * y
    }
}

/// Complement of the kernel of `c ↦ Σ_m c_m A_m`, by SVD with singular values
/// below `threshold · σ_max` treated as zero.
pub fn rowspace_basis(a: &[DMatrix<f64>], threshold: f64) -> Result<RowSpace> {
    let m = a.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no moment matrices".into()));
    }
    let (kr, kc) = a[0].shape();
    if kr == 0 || a.iter().any(|x| x.shape() != (kr, kc)) {
        return Err(Error::DimensionMismatch("moment matrices differ in shape".into()));
    }
    let stacked = DMatrix::from_fn(kr * kc, m, |r, c| a[c].as_slice()[r]);
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = if smax > 0.0 {
        (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > threshold * smax)
            .collect()
    } else {
        Vec::new()
    };
    let mut basis = DMatrix::zeros(m, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let mut col = vt.row(i).transpose();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        basis.set_column(c, &col);
    }
    Ok(RowSpace {
        degenerate: keep.is_empty(),
        basis,
    })
}
