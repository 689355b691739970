//! Small dense semidefinite programs
//!
//! ```text
//!   primal:  min ⟨C, X⟩   s.t. ⟨A_j, X⟩ = b_j,  X ⪰ 0
//!   dual:    max ⟨b, y⟩   s.t. S = C - Σ_j y_j A_j ⪰ 0
//! ```
//!
//! solved by an infeasible-start primal–dual path-following method with the
//! HKM scaling direction and a Mehrotra predictor–corrector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, sym_eigen_sorted};

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: DMatrix<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
}

/// Iterations without a better merit value before the solver gives up.
const STALL_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    /// No progress for a run of iterations; the best iterate is returned.
    Stalled,
    InfeasibleSuspected,
    UnboundedSuspected,
}

#[derive(Debug, Clone)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight `ε` of the dual penalty `-(ε/2)|y|²`.
    ///
    /// With `ε > 0` the solver targets the problem whose primal constraint is
    /// relaxed to `A(X) + ε y = b`. When the primal has no strictly feasible
    /// point the set of optimal `y` is unbounded and the plain iteration
    /// drifts; the penalty selects a bounded, nearly least-norm optimum at the
    /// price of a primal residual `ε y`.
    pub regularization: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            regularization: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// `C - Σ y_j A_j`.
    pub s: DMatrix<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `⟨C, X⟩ - ⟨b, y⟩`.
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// `max_j |⟨A_j, X⟩ - b_j| / (1 + |b_j|)`.
    pub primal_infeasibility: f64,
    pub min_eig_x: f64,
    pub min_eig_s: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

impl SdpProblem {
    pub fn new(c: DMatrix<f64>, a: Vec<DMatrix<f64>>, b: DVector<f64>) -> Result<Self> {
        let p = Self { c, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_constraints(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.c.nrows();
        if k == 0 || self.c.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "C is {}x{}",
                self.c.nrows(),
                self.c.ncols()
            )));
        }
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint matrices for {} right-hand sides",
                self.a.len(),
                self.b.len()
            )));
        }
        check_finite(&self.c)?;
        if !self.b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        for (j, a) in self.a.iter().enumerate() {
            if a.nrows() != k || a.ncols() != k {
                return Err(Error::DimensionMismatch(format!(
                    "A_{j} is {}x{}, expected {k}x{k}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            check_finite(a)?;
        }
        for (name, m) in std::iter::once(("C".to_string(), &self.c))
            .chain(self.a.iter().enumerate().map(|(j, a)| (format!("A_{j}"), a)))
        {
            let asym = (m - m.transpose()).amax();
            if asym > 1e-10 * (1.0 + m.amax()) {
                return Err(Error::InvalidArgument(format!("{name} is not symmetric ({asym:e})")));
            }
        }
        Ok(())
    }

    /// Rejects linearly dependent constraint matrices: the smallest singular
    /// value of the stacked `vec(A_j)` must exceed `1e-12` of the largest.
    fn check_independent(&self) -> Result<()> {
        let k = self.dim();
        let j = self.a.len();
        if j > k * k {
            return Err(Error::DependentConstraints(0.0));
        }
        let stacked = DMatrix::from_fn(k * k, j, |r, c| self.a[c].as_slice()[r]);
        let sv = stacked.singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if !(hi > 0.0) || lo <= 1e-12 * hi {
            return Err(Error::DependentConstraints(lo / hi.max(f64::MIN_POSITIVE)));
        }
        Ok(())
    }

    fn apply_a(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|a| a.dot(x)))
    }

    fn apply_at(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let k = self.dim();
        let mut out = DMatrix::zeros(k, k);
        for (a, &yj) in self.a.iter().zip(y.iter()) {
            out += a * yj;
        }
        out
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `α` with `M + α D ⪰ 0` for `M ≻ 0`; infinite when unconstrained.
fn max_step(m: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let Some(chol) = m.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(t) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(t) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lmin = sym(&t).symmetric_eigenvalues().min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

/// Solver for the Schur complement system. The matrix becomes badly scaled
/// near the optimum, so it is equilibrated first; if Cholesky still breaks
/// down a fully pivoted LU takes over. One refinement step follows.
struct SchurSolver {
    matrix: DMatrix<f64>,
    scale: DVector<f64>,
    factor: SchurFactor,
}

enum SchurFactor {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurSolver {
    fn new(matrix: DMatrix<f64>) -> Option<Self> {
        let n = matrix.nrows();
        let scale = DVector::from_iterator(
            n,
            (0..n).map(|i| 1.0 / matrix[(i, i)].abs().max(f64::MIN_POSITIVE).sqrt()),
        );
        let scaled = DMatrix::from_fn(n, n, |i, j| matrix[(i, j)] * scale[i] * scale[j]);
        let factor = match scaled.clone().cholesky() {
            Some(c) => SchurFactor::Cholesky(c),
            None => {
                let lu = scaled.full_piv_lu();
                if !lu.is_invertible() {
                    return None;
                }
                SchurFactor::Lu(lu)
            }
        };
        Some(Self { matrix, scale, factor })
    }

    fn solve_scaled(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let r = rhs.component_mul(&self.scale);
        let z = match &self.factor {
            SchurFactor::Cholesky(c) => c.solve(&r),
            SchurFactor::Lu(lu) => lu.solve(&r).unwrap_or_else(|| DVector::zeros(r.len())),
        };
        z.component_mul(&self.scale)
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let x = self.solve_scaled(rhs);
        let res = rhs - &self.matrix * &x;
        x + self.solve_scaled(&res)
    }
}

struct Iterate {
    x: DMatrix<f64>,
    y: DVector<f64>,
    z: DMatrix<f64>,
}

struct Direction {
    dx: DMatrix<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
}

pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    problem.check_independent()?;
    let k = problem.dim();
    let kf = k as f64;
    let j = problem.n_constraints();

    let row_norm = |m: &DMatrix<f64>| (0..m.nrows()).map(|r| m.row(r).norm()).fold(0.0_f64, f64::max);
    let tau = 1.0
        + std::iter::once(&problem.c)
            .chain(&problem.a)
            .map(row_norm)
            .fold(0.0, f64::max)
            .max(problem.b.amax());
    let mut it = Iterate {
        x: DMatrix::identity(k, k) * tau,
        y: DVector::zeros(j),
        z: DMatrix::identity(k, k) * tau,
    };

    let norm_c = problem.c.norm();
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = opts.max_iter;
    let mut best: Option<(f64, Iterate)> = None;
    let mut since_best = 0;
    let eps = opts.regularization;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization {eps}")));
    }

    for iter in 0..opts.max_iter {
        let rp = &problem.b - problem.apply_a(&it.x) - &it.y * eps;
        let rd = &problem.c - &it.z - problem.apply_at(&it.y);
        let pobj = problem.c.dot(&it.x);
        let dobj = problem.b.dot(&it.y) - eps * it.y.norm_squared();
        let mu = it.x.dot(&it.z) / kf;

        let pinf = rp
            .iter()
            .zip(problem.b.iter())
            .map(|(r, b)| r.abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        let dinf = rd.norm() / (1.0 + norm_c);
        let gap_rel = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let merit = pinf.max(dinf).max(gap_rel);
        since_best += 1;
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            since_best = 0;
            best = Some((
                merit,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
            ));
        }
        if pinf <= opts.tol && dinf <= opts.tol && gap_rel <= opts.tol {
            status = SdpStatus::Optimal;
            iterations = iter;
            break;
        }
        if since_best > STALL_WINDOW {
            status = SdpStatus::Stalled;
            iterations = iter;
            break;
        }
        if dobj > 1e12 * (1.0 + pobj.abs()) || it.y.amax() > 1e14 {
            status = SdpStatus::InfeasibleSuspected;
            iterations = iter;
            break;
        }
        if it.x.trace() > 1e14 * (1.0 + tau) {
            status = SdpStatus::UnboundedSuspected;
            iterations = iter;
            break;
        }

        let Some(zchol) = it.z.clone().cholesky() else {
            iterations = iter;
            break;
        };
        let zinv = zchol.inverse();
        let zinv = sym(&zinv);

        // Schur complement M_pq = tr(A_p X A_q Z^{-1})
        let xa: Vec<DMatrix<f64>> = problem.a.iter().map(|a| &it.x * a * &zinv).collect();
        let mut schur = DMatrix::zeros(j, j);
        for p in 0..j {
            for q in p..j {
                let v = problem.a[p].dot(&xa[q].transpose());
                schur[(p, q)] = v;
                schur[(q, p)] = v;
            }
            schur[(p, p)] += eps;
        }
        let Some(schur_solver) = SchurSolver::new(schur) else {
            iterations = iter;
            break;
        };

        let direction = |sigma_mu: f64, corr: Option<&DMatrix<f64>>| -> Direction {
            // ΔX = σμ Z⁻¹ - X - sym((X ΔZ + corr) Z⁻¹), ΔZ = Rd - Aᵀ(Δy)
            let mut r0 = &zinv * sigma_mu - &it.x - sym(&(&it.x * &rd * &zinv));
            if let Some(c) = corr {
                r0 -= sym(&(c * &zinv));
            }
            let rhs = &rp - problem.apply_a(&r0);
            let dy = schur_solver.solve(&rhs);
            let dz = &rd - problem.apply_at(&dy);
            let mut dx = &zinv * sigma_mu - &it.x - sym(&(&it.x * &dz * &zinv));
            if let Some(c) = corr {
                dx -= sym(&(c * &zinv));
            }
            Direction { dx, dy, dz }
        };

        // predictor
        let aff = direction(0.0, None);
        let ap = max_step(&it.x, &aff.dx).min(1.0);
        let ad = max_step(&it.z, &aff.dz).min(1.0);
        let mu_aff = (&it.x + &aff.dx * ap).dot(&(&it.z + &aff.dz * ad)) / kf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let corr = &aff.dx * &aff.dz;
        let dir = direction(sigma * mu, Some(&corr));
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * max_step(&it.x, &dir.dx)).min(1.0);
        let ad = (gamma * max_step(&it.z, &dir.dz)).min(1.0);

        it.x = sym(&(&it.x + &dir.dx * ap));
        it.y += &dir.dy * ad;
        it.z = sym(&(&it.z + &dir.dz * ad));
    }

    if matches!(status, SdpStatus::MaxIterations | SdpStatus::Stalled) {
        if let Some((_, b)) = best {
            it = b;
        }
    }
    if let Some(x) = polish(problem, &it.x, &it.y) {
        it.x = x;
    }
    Ok(finish(problem, it, status, iterations, opts.tol))
}

fn relative_residual(problem: &SdpProblem, x: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let r = &problem.b - problem.apply_a(x);
    let worst = r
        .iter()
        .zip(problem.b.iter())
        .map(|(r, b)| r.abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    (r, worst)
}

/// Removes the primal residual left by the iteration with a few Gauss-Newton
/// steps on a factor `x ≈ V Vᵀ` of its numerical range.
///
/// Near a solution whose primal side has no interior the iteration loses
/// primal accuracy before the gap closes. The factor steps may rotate the
/// range slightly and keep the matrix positive semidefinite.
///
/// Candidates are ranked by the larger of the relative residual and the
/// complementarity `⟨C - Σ y A, X⟩`, which is the part of the objective not
/// explained by `bᵀy - yᵀ(b - A(X))`; fixing a residual moves the objective
/// through the second term, which is no loss of optimality. Returns `None`
/// unless some rank cutoff beats `x` itself.
fn polish(problem: &SdpProblem, x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DMatrix<f64>> {
    let (_, worst0) = relative_residual(problem, x);
    if worst0 == 0.0 {
        return None;
    }
    let slack = &problem.c - problem.apply_at(y);
    let scale = 1.0 + problem.c.dot(x).abs();
    let merit_of = |cand: &DMatrix<f64>, worst: f64| worst.max(slack.dot(cand).abs() / scale);
    let merit0 = merit_of(x, worst0);
    let (vals, vecs) = sym_eigen_sorted(x);
    let lmax = vals.max();
    if lmax <= 0.0 {
        return None;
    }
    let k = x.nrows();
    let j = problem.n_constraints();
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    let mut last_rank = usize::MAX;
    for rel in [1e-12, 1e-10, 1e-8, 1e-6, 1e-4] {
        let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > rel * lmax).collect();
        let r = cols.len();
        if r == 0 || r == last_rank {
            continue;
        }
        last_rank = r;
        let mut v = DMatrix::from_fn(k, r, |row, c| vecs[(row, cols[c])] * vals[cols[c]].sqrt());
        for _ in 0..4 {
            let cand = &v * v.transpose();
            let (res, _) = relative_residual(problem, &cand);
            // d/dV ⟨A, V Vᵀ⟩ = 2 A V
            let mut lin = DMatrix::zeros(j, k * r);
            for (q, a) in problem.a.iter().enumerate() {
                let g = a * &v * 2.0;
                for (c, val) in g.iter().enumerate() {
                    lin[(q, c)] = *val;
                }
            }
            let svd = lin.svd(true, true);
            let smax = svd.singular_values.max();
            let Ok(step) = svd.solve(&res, 1e-13 * smax) else {
                break;
            };
            v += DMatrix::from_column_slice(k, r, step.as_slice());
        }
        let cand = sym(&(&v * v.transpose()));
        let (_, worst) = relative_residual(problem, &cand);
        let merit = merit_of(&cand, worst);
        if merit < merit0 && best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, cand));
        }
    }
    best.map(|(_, x)| x)
}

/// Packages the returned point. An early exit whose best iterate already
/// meets every optimality condition at `tol` is reported as optimal.
fn finish(problem: &SdpProblem, it: Iterate, status: SdpStatus, iterations: usize, tol: f64) -> SdpSolution {
    let s = sym(&(&problem.c - problem.apply_at(&it.y)));
    let primal_value = problem.c.dot(&it.x);
    let dual_value = problem.b.dot(&it.y);
    let ax = problem.apply_a(&it.x);
    let primal_infeasibility = ax
        .iter()
        .zip(problem.b.iter())
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    let min_eig_x = it.x.clone().symmetric_eigenvalues().min();
    let min_eig_s = s.clone().symmetric_eigenvalues().min();
    let gap = primal_value - dual_value;
    let certified = primal_infeasibility <= tol
        && gap.abs() <= tol * (1.0 + primal_value.abs())
        && min_eig_x >= -tol
        && min_eig_s >= -tol;
    let status = match status {
        SdpStatus::MaxIterations | SdpStatus::Stalled if certified => SdpStatus::Optimal,
        other => other,
    };
    SdpSolution {
        x: it.x,
        y: it.y,
        s,
        primal_value,
        dual_value,
        gap,
        status,
        iterations,
        primal_infeasibility,
        min_eig_x,
        min_eig_s,
    }
}

/// Plain-text problem format used by the debug CLI:
///
/// ```text
/// K J
/// <K rows of C>
/// <K rows of A_1>
/// ...
/// <K rows of A_J>
/// b_1 ... b_J
/// ```
///
/// Whitespace-separated; lines starting with `#` are ignored.
///
/// Writes `problem` in the text format read by [`parse_problem`], with full
/// round-trip precision.
pub fn format_problem(problem: &SdpProblem) -> String {
    use std::fmt::Write;
    let k = problem.dim();
    let mut out = format!("{} {}\n", k, problem.n_constraints());
    for m in std::iter::once(&problem.c).chain(&problem.a) {
        for r in 0..k {
            let row: Vec<String> = (0..k).map(|c| format!("{:e}", m[(r, c)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    let b: Vec<String> = problem.b.iter().map(|x| format!("{x:e}")).collect();
    let _ = writeln!(out, "{}", b.join(" "));
    out
}

pub fn parse_problem(text: &str) -> Result<SdpProblem> {
    let mut nums = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number `{t}`")))
        });
    let mut next = || -> Result<f64> {
        nums.next()
            .unwrap_or_else(|| Err(Error::InvalidArgument("unexpected end of problem".into())))
    };
    let k = next()? as usize;
    let j = next()? as usize;
    let mut read_matrix = || -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(k, k);
        for r in 0..k {
            for c in 0..k {
                m[(r, c)] = next()?;
            }
        }
        Ok(m)
    };
    let c = read_matrix()?;
    let a = (0..j).map(|_| read_matrix()).collect::<Result<Vec<_>>>()?;
    let b = DVector::from_iterator(j, (0..j).map(|_| next()).collect::<Result<Vec<_>>>()?);
    SdpProblem::new(c, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(c: f64, a: f64, b: f64) -> SdpProblem {
        SdpProblem::new(
            DMatrix::from_element(1, 1, c),
            vec![DMatrix::from_element(1, 1, a)],
            DVector::from_element(1, b),
        )
        .unwrap()
    }

    #[test]
    fn scalar_lp() {
        let sol = solve(&scalar(3.0, 2.0, 5.0), &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert_relative_eq!(sol.x[(0, 0)], 2.5, epsilon = 1e-8);
        assert_relative_eq!(sol.primal_value, 7.5, epsilon = 1e-8);
    }

    #[test]
    fn diagonal_kkt() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let p = SdpProblem::new(c, vec![DMatrix::identity(2, 2)], DVector::from_element(1, 1.0)).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert_relative_eq!(sol.primal_value, 1.0, epsilon = 1e-8);
        assert_relative_eq!(sol.y[0], 1.0, epsilon = 1e-8);
        assert!((sol.x.clone() - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).amax() < 1e-7);
        assert!((sol.s.clone() - DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).amax() < 1e-7);
        assert!(sol.gap.abs() <= 1e-9 * (1.0 + sol.primal_value.abs()));
    }

    #[test]
    fn dual_is_min_eigenvalue() {
        let c = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 1.0, 0.3, 0.5, 0.3, 4.0]);
        let lmin = c.clone().symmetric_eigenvalues().min();
        let p = SdpProblem::new(c, vec![DMatrix::identity(3, 3)], DVector::from_element(1, 1.0)).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert_relative_eq!(sol.dual_value, lmin, epsilon = 1e-8);
    }

    #[test]
    fn rejects_dependent_constraints() {
        let a = DMatrix::identity(2, 2);
        let p = SdpProblem::new(
            DMatrix::identity(2, 2),
            vec![a.clone(), a * 2.0],
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        assert!(matches!(
            solve(&p, &SdpOptions::default()),
            Err(Error::DependentConstraints(_))
        ));
    }

    #[test]
    fn rejects_bad_dimensions() {
        let p = SdpProblem::new(
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(3, 3)],
            DVector::from_element(1, 1.0),
        );
        assert!(p.is_err());
        let p = SdpProblem::new(
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(2, 2)],
            DVector::zeros(2),
        );
        assert!(p.is_err());
    }

    #[test]
    fn infeasible_is_flagged() {
        // x >= 0 with -x = 1 has no solution
        let sol = solve(&scalar(1.0, -1.0, 1.0), &SdpOptions::default()).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
    }

    #[test]
    fn parses_text_format() {
        let text = "# demo\n2 1\n1 0\n0 2\n1 0\n0 1\n1\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.b[0], 1.0);
        assert!(parse_problem("2 1\n1 0\n").is_err());
    }
}
