//! Smallest eigenpairs of `H ψ = λ G ψ` on the wedge space.
//!
//! Small problems go through a dense Cholesky-reduced solve. Larger ones use
//! block LOBPCG in the `G` inner product, preconditioned by a banded
//! Cholesky factorization of `H - σG` with `σ` below the spectrum.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen, BandedCholesky};
use crate::pair_space::PairOperator;

pub const DENSE_THRESHOLD: usize = 1500;
pub const DEFAULT_SEED: u64 = 0x6d63_616c;

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Residual tolerance on `‖Hψ - λGψ‖₂ / ‖ψ‖_G`.
    pub tol: f64,
    pub max_iter: usize,
    pub dense_threshold: usize,
    pub seed: u64,
    /// Known value strictly below the smallest eigenvalue, if any.
    pub shift: Option<f64>,
    /// Warm-start vectors for the iterative path.
    pub initial: Vec<Vec<f64>>,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            dense_threshold: DENSE_THRESHOLD,
            seed: DEFAULT_SEED,
            shift: None,
            initial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// G-orthonormal coefficient vectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub dense: bool,
}

pub fn smallest_eigpairs(h: &PairOperator, g: &PairOperator, q: usize, opts: &EigOptions) -> Result<EigResult> {
    let n = h.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch(format!("H is {n}, G is {}", g.dim())));
    }
    if q == 0 || q > n {
        return Err(Error::InvalidArgument(format!(
            "requested {q} eigenpairs of a {n}-dimensional problem"
        )));
    }
    if n <= opts.dense_threshold {
        dense_solve(h, g, q)
    } else {
        Lobpcg::new(h, g, q, opts)?.run()
    }
}

fn dense_solve(h: &PairOperator, g: &PairOperator, q: usize) -> Result<EigResult> {
    let (vals, x) =
        generalized_eigen(&h.to_dense(), &g.to_dense()).map_err(|_| Error::NotPositiveDefinite("G".into()))?;
    let mut vectors: Vec<Vec<f64>> = (0..q).map(|k| x.column(k).iter().copied().collect()).collect();
    for v in &mut vectors {
        fix_sign(v);
    }
    let values: Vec<f64> = vals.iter().take(q).copied().collect();
    let residuals = residuals(h, g, &values, &vectors);
    Ok(EigResult {
        values,
        vectors,
        residuals,
        iterations: 0,
        dense: true,
    })
}

fn fix_sign(v: &mut [f64]) {
    let imax = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residuals(h: &PairOperator, g: &PairOperator, values: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    values
        .iter()
        .zip(vectors)
        .map(|(&lam, v)| {
            let hv = h.matvec(v);
            let gv = g.matvec(v);
            let norm_g: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>().sqrt();
            let r: f64 = hv
                .iter()
                .zip(&gv)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            r / norm_g
        })
        .collect()
}

type Block = Vec<Vec<f64>>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Aᵀ B` for column blocks.
fn cross(a: &Block, b: &Block) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| dot(&a[i], &b[j]))
}

/// `Σ_r blocks[r] coef[r, c]` for each output column `c`.
fn lincomb(block: &[&Vec<f64>], coef: &DMatrix<f64>) -> Block {
    let n = block.first().map_or(0, |v| v.len());
    (0..coef.ncols())
        .map(|c| {
            let mut out = vec![0.0; n];
            for (r, v) in block.iter().enumerate() {
                let w = coef[(r, c)];
                if w != 0.0 {
                    out.iter_mut().zip(v.iter()).for_each(|(o, x)| *o += w * x);
                }
            }
            out
        })
        .collect()
}

struct Lobpcg<'a> {
    h: &'a PairOperator,
    g: &'a PairOperator,
    q: usize,
    p: usize,
    opts: &'a EigOptions,
    shift: f64,
    precond: BandedCholesky,
}

impl<'a> Lobpcg<'a> {
    fn new(h: &'a PairOperator, g: &'a PairOperator, q: usize, opts: &'a EigOptions) -> Result<Self> {
        let n = h.dim();
        let p = (q + 3).min(n);
        let (shift, precond) = match opts.shift {
            Some(s) => match BandedCholesky::factor(h, Some((g, -s))) {
                Ok(c) => (s, c),
                Err(_) => search_shift(h, g)?,
            },
            None => search_shift(h, g)?,
        };
        Ok(Self {
            h,
            g,
            q,
            p,
            opts,
            shift,
            precond,
        })
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut x = r.to_vec();
        self.precond.solve_in_place(&mut x);
        x
    }

    fn apply(op: &PairOperator, block: &Block) -> Block {
        block.iter().map(|v| op.matvec(v)).collect()
    }

    fn initial_block(&self) -> Block {
        let n = self.h.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let mut block: Block = self
            .opts
            .initial
            .iter()
            .filter(|v| v.len() == n)
            .take(self.p)
            .cloned()
            .collect();
        while block.len() < self.p {
            let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            // one smoothing step biases the random start toward the low spectrum
            block.push(self.precondition(&self.g.matvec(&r)));
        }
        block
    }

    /// G-orthonormalizes `block` (SVQB), dropping numerically dependent columns.
    fn orthonormalize(&self, block: Block) -> (Block, Block) {
        let gb = Self::apply(self.g, &block);
        let mut s = cross(&block, &gb);
        let d: Vec<f64> = (0..s.nrows()).map(|i| 1.0 / s[(i, i)].max(1e-300).sqrt()).collect();
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                s[(i, j)] *= d[i] * d[j];
            }
        }
        let eig = s.symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        let kept: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&k| eig.eigenvalues[k] > 1e-13 * lmax)
            .collect();
        let mut coef = DMatrix::zeros(block.len(), kept.len());
        for (c, &k) in kept.iter().enumerate() {
            let scale = 1.0 / eig.eigenvalues[k].sqrt();
            for r in 0..block.len() {
                coef[(r, c)] = eig.eigenvectors[(r, k)] * d[r] * scale;
            }
        }
        let refs: Vec<&Vec<f64>> = block.iter().collect();
        let grefs: Vec<&Vec<f64>> = gb.iter().collect();
        (lincomb(&refs, &coef), lincomb(&grefs, &coef))
    }

    /// Removes the `X` component of `w` in the G inner product (twice).
    fn project_out(x: &Block, gx: &Block, w: &mut Block) {
        for _ in 0..2 {
            for wv in w.iter_mut() {
                for (xv, gxv) in x.iter().zip(gx) {
                    let c = dot(gxv, wv);
                    wv.iter_mut().zip(xv).for_each(|(a, b)| *a -= c * b);
                }
            }
        }
    }

    fn run(mut self) -> Result<EigResult> {
        let n = self.h.dim();
        let (mut x, mut gx) = self.orthonormalize(self.initial_block());
        if x.len() < self.p {
            return Err(Error::InvalidArgument("degenerate starting block".into()));
        }
        let hx0 = Self::apply(self.h, &x);
        let (mut lambda, coef) = crate::linalg::sym_eigen_sorted(&sym(cross(&x, &hx0)));
        let xr: Vec<&Vec<f64>> = x.iter().collect();
        let gxr: Vec<&Vec<f64>> = gx.iter().collect();
        let hxr: Vec<&Vec<f64>> = hx0.iter().collect();
        let coef = coef.columns(0, self.p).into_owned();
        let mut hx = lincomb(&hxr, &coef);
        let new_x = lincomb(&xr, &coef);
        gx = lincomb(&gxr, &coef);
        x = new_x;
        let mut p_block: Block = Vec::new();
        let mut refined = 0;
        let mut res = vec![f64::INFINITY; self.p];

        for it in 0..self.opts.max_iter {
            let r: Block = (0..self.p)
                .map(|k| hx[k].iter().zip(&gx[k]).map(|(a, b)| a - lambda[k] * b).collect())
                .collect();
            for k in 0..self.p {
                res[k] = dot(&r[k], &r[k]).sqrt();
            }
            if res[..self.q].iter().all(|&v| v <= self.opts.tol) {
                return Ok(self.finish(x, lambda.iter().copied().collect(), it));
            }
            // move the preconditioner shift toward the spectrum once estimates settle
            if refined < 3 && res[0] < 1e-3 * lambda[0].abs().max(1.0) {
                let gap = (lambda[self.p - 1] - lambda[0]).max(1e-8);
                let target = lambda[0] - 0.05 * gap - 10.0 * res[0];
                if target > self.shift + 1e-3 * gap {
                    if let Ok(c) = BandedCholesky::factor(self.h, Some((self.g, -target))) {
                        self.shift = target;
                        self.precond = c;
                    }
                }
                refined += 1;
            }

            let active: Vec<usize> = (0..self.p).filter(|&k| res[k] > self.opts.tol).collect();
            let mut w: Block = active.iter().map(|&k| self.precondition(&r[k])).collect();
            Self::project_out(&x, &gx, &mut w);
            let mut wp = w;
            if !p_block.is_empty() {
                let mut pb = p_block.clone();
                Self::project_out(&x, &gx, &mut pb);
                wp.extend(pb);
            }
            let (q_wp, _) = self.orthonormalize(wp);
            // second projection keeps the joint basis well conditioned
            let mut q_wp = q_wp;
            Self::project_out(&x, &gx, &mut q_wp);
            let (q_wp, gq_wp) = self.orthonormalize(q_wp);
            if q_wp.is_empty() {
                return Ok(self.finish(x, lambda.iter().copied().collect(), it));
            }
            let hq = Self::apply(self.h, &q_wp);
            let m = self.p + q_wp.len();
            let mut hs = DMatrix::zeros(m, m);
            hs.view_mut((0, 0), (self.p, self.p))
                .copy_from(&DMatrix::from_diagonal(&lambda.rows(0, self.p).into_owned()));
            let xq = cross(&x, &hq);
            hs.view_mut((0, self.p), (self.p, q_wp.len())).copy_from(&xq);
            hs.view_mut((self.p, 0), (q_wp.len(), self.p))
                .copy_from(&xq.transpose());
            hs.view_mut((self.p, self.p), (q_wp.len(), q_wp.len()))
                .copy_from(&cross(&q_wp, &hq));
            let (vals, vecs) = crate::linalg::sym_eigen_sorted(&sym(hs));
            let c = vecs.columns(0, self.p).into_owned();
            let c_x = c.rows(0, self.p).into_owned();
            let c_q = c.rows(self.p, q_wp.len()).into_owned();

            let qr: Vec<&Vec<f64>> = q_wp.iter().collect();
            let gqr: Vec<&Vec<f64>> = gq_wp.iter().collect();
            let hqr: Vec<&Vec<f64>> = hq.iter().collect();
            let new_p = lincomb(&qr, &c_q);
            let new_gp = lincomb(&gqr, &c_q);
            let new_hp = lincomb(&hqr, &c_q);
            let xr: Vec<&Vec<f64>> = x.iter().collect();
            let gxr: Vec<&Vec<f64>> = gx.iter().collect();
            let hxr: Vec<&Vec<f64>> = hx.iter().collect();
            let mut nx = lincomb(&xr, &c_x);
            let mut ngx = lincomb(&gxr, &c_x);
            let mut nhx = lincomb(&hxr, &c_x);
            for k in 0..self.p {
                for i in 0..n {
                    nx[k][i] += new_p[k][i];
                    ngx[k][i] += new_gp[k][i];
                    nhx[k][i] += new_hp[k][i];
                }
            }
            x = nx;
            gx = ngx;
            hx = nhx;
            p_block = new_p;
            lambda = vals.rows(0, self.p).into_owned();

            // periodic re-orthonormalization guards against drift in the recurrences
            if it % 10 == 9 {
                let (xo, gxo) = self.orthonormalize(x);
                let hxo = Self::apply(self.h, &xo);
                let (l2, c2) = crate::linalg::sym_eigen_sorted(&sym(cross(&xo, &hxo)));
                let c2 = c2.columns(0, self.p).into_owned();
                let xr: Vec<&Vec<f64>> = xo.iter().collect();
                let gxr: Vec<&Vec<f64>> = gxo.iter().collect();
                let hxr: Vec<&Vec<f64>> = hxo.iter().collect();
                x = lincomb(&xr, &c2);
                gx = lincomb(&gxr, &c2);
                hx = lincomb(&hxr, &c2);
                lambda = l2.rows(0, self.p).into_owned();
            }
        }
        Err(Error::EigenNotConverged {
            iterations: self.opts.max_iter,
            residuals: res[..self.q].to_vec(),
        })
    }

    fn finish(&self, x: Block, lambda: Vec<f64>, iterations: usize) -> EigResult {
        let mut vectors: Vec<Vec<f64>> = x.into_iter().take(self.q).collect();
        for v in &mut vectors {
            let gv = self.g.matvec(v);
            let nrm = dot(v, &gv).sqrt();
            v.iter_mut().for_each(|a| *a /= nrm);
            fix_sign(v);
        }
        let values: Vec<f64> = lambda[..self.q].to_vec();
        let residuals = residuals(self.h, self.g, &values, &vectors);
        EigResult {
            values,
            vectors,
            residuals,
            iterations,
            dense: false,
        }
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Finds a shift with `H - σG` positive definite by stepping down from the
/// smallest diagonal Rayleigh quotient, then tightening by bisection.
fn search_shift(h: &PairOperator, g: &PairOperator) -> Result<(f64, BandedCholesky)> {
    let n = h.dim();
    let ub = (0..n).map(|i| h.get(i, i) / g.get(i, i)).fold(f64::INFINITY, f64::min);
    if !ub.is_finite() {
        return Err(Error::NotPositiveDefinite("G has a non-positive diagonal".into()));
    }
    let delta = 1e-2 * ub.abs().max(1.0);
    let mut lo = None;
    let mut hi = ub;
    for k in 0..64 {
        let s = ub - delta * 2f64.powi(k);
        match BandedCholesky::factor(h, Some((g, -s))) {
            Ok(c) => {
                lo = Some((s, c));
                break;
            }
            Err(_) => hi = s,
        }
    }
    let (mut s_lo, mut chol) = lo.ok_or_else(|| Error::NotPositiveDefinite("no admissible shift".into()))?;
    for _ in 0..8 {
        let mid = 0.5 * (s_lo + hi);
        match BandedCholesky::factor(h, Some((g, -mid))) {
            Ok(c) => {
                s_lo = mid;
                chol = c;
            }
            Err(_) => hi = mid,
        }
    }
    Ok((s_lo, chol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::Mesh1D;
    use crate::pair_space::PairSystem;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_problem() {
        let n = 30;
        let h = PairOperator::from_upper(n, (0..n).map(|i| (i, i, ((i * 7) % n) as f64)));
        let g = PairOperator::identity(n);
        let r = smallest_eigpairs(&h, &g, 3, &EigOptions::default()).unwrap();
        assert_eq!(r.values, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn dense_and_iterative_agree() {
        let sys = PairSystem::new(Mesh1D::new(10.0, 24).unwrap(), None).unwrap();
        let dense = smallest_eigpairs(&sys.kinetic, &sys.gram, 4, &EigOptions::default()).unwrap();
        let opts = EigOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        let iter = smallest_eigpairs(&sys.kinetic, &sys.gram, 4, &opts).unwrap();
        assert!(dense.dense && !iter.dense);
        for k in 0..4 {
            assert_relative_eq!(dense.values[k], iter.values[k], epsilon = 1e-10);
            assert!(iter.residuals[k] <= 1e-8);
        }
        for a in 0..4 {
            for b in 0..4 {
                let ip = sys.gram.bilinear(&iter.vectors[a], &iter.vectors[b]);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn spectral_shift() {
        let sys = PairSystem::new(Mesh1D::new(10.0, 30).unwrap(), None).unwrap();
        let c = 0.37;
        let shifted = sys.kinetic.add_scaled(&sys.gram, c).unwrap();
        let opts = EigOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        let a = smallest_eigpairs(&sys.kinetic, &sys.gram, 2, &opts).unwrap();
        let b = smallest_eigpairs(&shifted, &sys.gram, 2, &opts).unwrap();
        for k in 0..2 {
            assert_relative_eq!(b.values[k], a.values[k] + c, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let h = PairOperator::identity(4);
        assert!(smallest_eigpairs(&h, &h, 0, &EigOptions::default()).is_err());
        assert!(smallest_eigpairs(&h, &PairOperator::identity(3), 1, &EigOptions::default()).is_err());
        let not_spd = PairOperator::from_upper(4, (0..4).map(|i| (i, i, -1.0)));
        assert!(smallest_eigpairs(&h, &not_spd, 1, &EigOptions::default()).is_err());
    }
}
