//! Outer column-generation loop.
//!
//! Each iteration solves the moment-constrained SDP on the current pool to get
//! a dual potential `v_n`, adds the lowest eigenstates of `H - Σ v_n(x_i)` as
//! new columns, re-solves on the enlarged pool and compresses the optimal
//! weight matrix back into a short list of states.

mod checkpoint;
mod target;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader};
pub use target::{builtin_target, even_profile, odd_profile, read_density_file, target_from_nodal, TargetDensity};

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::eigen::{smallest_eigpairs, EigOptions};
use crate::error::{Error, Result};
use crate::fem1d::{Mesh1D, PiecewiseQuadratic};
use crate::moments::{pool_moment_matrices, rowspace_basis, MomentFamily, RowSpace, ROWSPACE_THRESHOLD};
use crate::pair_space::{
    gram_orthonormalize, pool_cross_densities, Kernel, PairOperator, PairSystem, PairWavefunction,
};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpSolution};
use crate::sparsify::{caratheodory_reduce, spectral_split, SparseState};

#[derive(Debug, Clone, PartialEq)]
pub struct McalConfig {
    /// Half width `L` of the domain `(-L, L)`.
    pub half_width: f64,
    /// Number of mesh intervals `D`.
    pub intervals: usize,
    /// Number of hat moment functions `M`.
    pub moments: usize,
    /// Eigenpairs appended to the pool per iteration.
    pub q_vec: usize,
    pub kernel: Kernel,
    pub tol_sdp: f64,
    pub tol_stop: f64,
    /// Relative occupation cutoff used when compressing the weight matrix.
    pub drop_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Residual tolerance of the column eigensolver.
    pub eig_tol: f64,
    pub density_file: Option<PathBuf>,
    /// Where to write a checkpoint after every iteration, if anywhere.
    pub checkpoint: Option<PathBuf>,
}

impl Default for McalConfig {
    fn default() -> Self {
        Self {
            half_width: 10.0,
            intervals: 100,
            moments: 20,
            q_vec: 4,
            kernel: Kernel::SoftCoulomb { eps: 1.0 },
            tol_sdp: 1e-9,
            tol_stop: 1e-6,
            drop_tol: crate::sparsify::DROP_TOL,
            max_iters: 100,
            seed: crate::eigen::DEFAULT_SEED,
            eig_tol: 1e-8,
            density_file: None,
            checkpoint: None,
        }
    }
}

impl McalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_sdp", self.tol_sdp),
            ("tol_stop", self.tol_stop),
            ("drop_tol", self.drop_tol),
            ("eig_tol", self.eig_tol),
            ("L", self.half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.q_vec < 1 {
            return Err(Error::Config("qvec must be at least 1".into()));
        }
        if self.moments < 2 {
            return Err(Error::Config(format!("M must be at least 2, got {}", self.moments)));
        }
        if self.intervals < 3 {
            return Err(Error::Config(format!("D must be at least 3, got {}", self.intervals)));
        }
        self.kernel.validate()?;
        Ok(())
    }
}

/// One line of the iteration history. Fields undefined at `n = 0` are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub n: usize,
    /// `F^n`, the dual value on the pool entering iteration `n`.
    pub dual_value: f64,
    /// `F̃^n`, the primal value on the enlarged pool.
    pub primal_value: f64,
    /// `E(v_n)`, ground energy of the shifted Hamiltonian.
    pub defect: f64,
    pub pool_size: usize,
    pub sdp_gap: f64,
    /// `F^n + E(v_n)`.
    pub lower_bound: f64,
    /// Largest `|∫ φ_m ρ_Γ - b_m| / (1 + |b_m|)` of the state leaving iteration `n`.
    pub moment_residual: f64,
    /// Largest change of a moment residual caused by compressing the
    /// optimal weight matrix into that state.
    pub compression_change: f64,
}

impl HistoryRow {
    pub fn initial(primal_value: f64, moment_residual: f64) -> Self {
        Self {
            n: 0,
            dual_value: f64::NAN,
            primal_value,
            defect: f64::NAN,
            pool_size: 1,
            sdp_gap: f64::NAN,
            lower_bound: f64::NAN,
            moment_residual,
            compression_change: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct McalState {
    pub iteration: usize,
    /// Positive-weight support `Γ = Σ ω_k |Ψ_k⟩⟨Ψ_k|`.
    pub pool: SparseState,
    /// Zero-weight directions kept in the pool alongside the support, so
    /// that the pool can grow past the point where the moment constraints
    /// pin the weight matrix down completely.
    pub reserve: Vec<PairWavefunction>,
    /// Hat coefficients of the latest dual potential.
    pub potential: DVector<f64>,
    pub history: Vec<HistoryRow>,
    pub converged: bool,
    /// Latest columns, used to warm-start the eigensolver.
    pub warm: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DualStep {
    pub potential: DVector<f64>,
    pub value: f64,
    pub gap: f64,
    pub rank: usize,
    /// No constraint direction acts on the pool; the value is reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct Columns {
    /// `E(v_n)`, the lowest eigenvalue.
    pub defect: f64,
    pub energies: Vec<f64>,
    pub states: Vec<PairWavefunction>,
}

#[derive(Debug, Clone)]
pub struct PrimalStep {
    pub pool: SparseState,
    pub reserve: Vec<PairWavefunction>,
    pub value: f64,
    pub gap: f64,
    /// Size of the orthonormalized enlarged pool the SDP was solved on.
    pub solved_size: usize,
    /// `max_m |∫ φ_m ρ_Γ - b_m| / (1 + |b_m|)` for the compressed state.
    pub moment_residual: f64,
    /// `max_m` change in the moment residual caused by compression.
    pub compression_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "max-iterations",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub error: Option<String>,
    pub upper: f64,
    pub lower: f64,
    pub bracket_width: f64,
    pub state: McalState,
    pub density: PiecewiseQuadratic,
    /// `∫ φ_m ρ_Γ - b_m`.
    pub moment_residuals: Vec<f64>,
    pub wall_time: f64,
}

/// Lower and upper certified bounds from the last completed iteration.
pub fn certified_bounds(state: &McalState) -> Option<(f64, f64)> {
    let last = state.history.last()?;
    if last.n == 0 {
        return None;
    }
    Some((last.lower_bound, last.primal_value))
}

/// Smallest eigenvalue of `H - Σ_i v(x_i)` on the whole pair space.
pub fn ground_energy<F: Fn(f64) -> f64>(system: &PairSystem, v: F, breakpoints: &[f64]) -> Result<f64> {
    let w = system.onebody(v, breakpoints)?;
    let h = system.hamiltonian().add_scaled(&w, -1.0)?;
    let res = smallest_eigpairs(&h, &system.gram, 1, &EigOptions::default())?;
    Ok(res.values[0])
}

/// A discretized problem: system, moment family and target.
pub struct Mcal {
    pub config: McalConfig,
    pub system: PairSystem,
    pub family: MomentFamily,
    pub target: TargetDensity,
    /// Target moments `∫ φ_m ρ`.
    pub b: DVector<f64>,
    hamiltonian: PairOperator,
    kinetic_floor: f64,
}

impl Mcal {
    pub fn new(config: McalConfig) -> Result<Self> {
        config.validate()?;
        let mesh = Mesh1D::new(config.half_width, config.intervals)?;
        let system = PairSystem::new(mesh, Some(config.kernel))?;
        let target = match &config.density_file {
            Some(path) => target_from_nodal(&system, &read_density_file(path)?)?,
            None => builtin_target(&system)?,
        };
        Self::with_target(config, system, target)
    }

    pub fn with_target(config: McalConfig, system: PairSystem, target: TargetDensity) -> Result<Self> {
        config.validate()?;
        let family = MomentFamily::new(system.mesh.half_width(), config.moments)?;
        let b = family.moments_of(&target.rho);
        let hamiltonian = system.hamiltonian();
        let kinetic_floor = system.kinetic_floor();
        Ok(Self {
            config,
            system,
            family,
            target,
            b,
            hamiltonian,
            kinetic_floor,
        })
    }

    pub fn hamiltonian(&self) -> &PairOperator {
        &self.hamiltonian
    }

    pub fn checkpoint_header(&self) -> CheckpointHeader {
        CheckpointHeader {
            half_width: self.config.half_width,
            intervals: self.config.intervals,
            moments: self.config.moments,
        }
    }

    /// Starting state from the single target state, after checking that it
    /// reproduces every target moment.
    pub fn initialize(&self) -> Result<McalState> {
        let psi = &self.target.initial;
        let rho = self.system.density(psi, psi)?;
        let got = self.family.moments_of(&rho);
        let (index, residual) = worst_residual(&got, &self.b);
        if residual > self.config.tol_sdp {
            return Err(Error::InitialMoments { index, residual });
        }
        // a single state with the unit weight forced by the mass moment
        let energy = self.hamiltonian.quad_form(&psi.coeffs);
        Ok(McalState {
            iteration: 0,
            pool: SparseState {
                weights: vec![1.0],
                states: vec![psi.clone()],
            },
            reserve: Vec::new(),
            potential: DVector::zeros(self.family.len()),
            history: vec![HistoryRow::initial(energy, residual)],
            converged: false,
            warm: Vec::new(),
        })
    }

    /// Moment matrices, Hamiltonian matrix and reduced SDP for a G-orthonormal pool.
    pub fn pool_problem(&self, pool: &[PairWavefunction]) -> Result<PoolProblem> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let cross = pool_cross_densities(&self.system.mesh, &self.system.basis, &self.system.mass, pool)?;
        let a = pool_moment_matrices(&self.family, pool.len(), &cross)?;
        let refs: Vec<&[f64]> = pool.iter().map(|p| p.coeffs.as_slice()).collect();
        let c = self.hamiltonian.projected(&refs);
        let c = (&c + c.transpose()) * 0.5;
        let rowspace = rowspace_basis(&a, ROWSPACE_THRESHOLD)?;
        let sdp = if rowspace.degenerate {
            None
        } else {
            Some(SdpProblem::new(
                c.clone(),
                rowspace.reduce_matrices(&a),
                rowspace.reduce_vector(&self.b),
            )?)
        };
        Ok(PoolProblem { a, c, rowspace, sdp })
    }

    fn sdp_options(&self, regularization: f64) -> SdpOptions {
        SdpOptions {
            tol: 0.1 * self.config.tol_sdp,
            max_iter: 200,
            regularization,
        }
    }

    /// Solves at a tenth of `tol_sdp` and accepts a non-optimal exit that
    /// still meets `tol_sdp` itself on the unregularized problem. With
    /// `need_optimal` unset, a feasible positive semidefinite `X` is enough.
    ///
    /// Pools whose weight matrix is pinned to a face of the cone make the
    /// plain iteration drift in `y`; if it fails, the solve is repeated with
    /// a small dual penalty.
    fn solve_sdp(&self, problem: &SdpProblem, need_optimal: bool) -> Result<SdpSolution> {
        let tol = self.config.tol_sdp;
        let mut last = None;
        for regularization in [0.0, 1e-5 * tol, 1e-3 * tol] {
            let sol = sdp::solve(problem, &self.sdp_options(regularization))?;
            let scale = 1.0 + sol.primal_value.abs();
            let feasible = sol.primal_infeasibility <= tol && sol.min_eig_x >= -tol;
            let optimal = sol.gap.abs() <= tol * scale && sol.min_eig_s >= -tol * scale;
            if sol.is_optimal() || (feasible && (optimal || !need_optimal)) {
                return Ok(sol);
            }
            last = Some(sol);
        }
        let sol = last.expect("at least one attempt");
        Err(Error::SdpFailed {
            status: sol.status,
            detail: format!(
                "after {} iterations: primal infeasibility {:e}, gap {:e}, min eig S {:e}",
                sol.iterations, sol.primal_infeasibility, sol.gap, sol.min_eig_s
            ),
        })
    }

    /// Dual potential and value `F^n`.
    ///
    /// The current state is feasible on the pool, so its energy bounds the
    /// pool optimum from above, and any `y` pricing the pool non-negatively
    /// bounds it from below. A potential is accepted once the two meet within
    /// `tol_sdp`. The pool includes the zero-weight reserve, which leaves the
    /// set of optimal `y` unbounded; small penalties on `|y|` pick a bounded
    /// one, and the support alone, where the weights are strictly feasible,
    /// is the last resort.
    pub fn dual_step(&self, state: &McalState) -> Result<DualStep> {
        let target = self.pool_energy(&state.pool);
        let tol = self.config.tol_sdp;
        let scale = 1.0 + target.abs();
        let full = self.pool_problem(&state.pool_states())?;
        let Some(big) = &full.sdp else {
            return Ok(DualStep {
                potential: DVector::zeros(self.family.len()),
                value: 0.0,
                gap: 0.0,
                rank: 0,
                degenerate: true,
            });
        };
        let mut attempts: Vec<(&SdpProblem, &RowSpace, f64)> = Vec::new();
        // strongest penalty first: the most regularized acceptable potential wins
        for eps in [1e-1 * tol, 1e-2 * tol, 1e-3 * tol, 1e-4 * tol, 1e-5 * tol, 0.0] {
            attempts.push((big, &full.rowspace, eps));
        }
        let support_prob = if state.reserve.is_empty() {
            None
        } else {
            Some(self.pool_problem(&state.pool.states)?)
        };
        if let Some(sp) = &support_prob {
            if let Some(sdp) = &sp.sdp {
                attempts.push((sdp, &sp.rowspace, 0.0));
            }
        }
        let mut last = None;
        for (problem, rowspace, eps) in attempts {
            let sol = sdp::solve(problem, &self.sdp_options(eps))?;
            let lifted = rowspace.lift(&sol.y);
            let value = self.b.dot(&lifted);
            // above the energy only through the state's own moment residual
            // amplified by a large `y`; reject that too
            if sol.min_eig_s >= -tol * scale && (value - target).abs() <= tol * scale {
                return Ok(DualStep {
                    value,
                    potential: lifted,
                    gap: target - value,
                    rank: rowspace.rank(),
                    degenerate: false,
                });
            }
            last = Some(sol);
        }
        let sol = last.expect("at least one attempt");
        Err(Error::SdpFailed {
            status: sol.status,
            detail: format!(
                "no dual potential within tolerance of the pool energy {target}: last attempt gave {} with min eig S {:e}",
                sol.dual_value, sol.min_eig_s
            ),
        })
    }

    /// Lowest `q_vec` eigenpairs of `H - Σ_i v(x_i)` for the hat potential `y`.
    pub fn generate_columns(&self, y: &DVector<f64>, warm: &[Vec<f64>]) -> Result<Columns> {
        if y.len() != self.family.len() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential coefficients".into()));
        }
        let ys: Vec<f64> = y.iter().copied().collect();
        let w = self
            .system
            .onebody(|x| self.family.combine(&ys, x), &self.family.nodes())?;
        let h = self.hamiltonian.add_scaled(&w, -1.0)?;
        // interaction is pointwise non-negative and v <= max y, so this lies below the spectrum
        let vmax = y.max();
        let floor = self.kinetic_floor - 2.0 * vmax;
        let opts = EigOptions {
            tol: self.config.eig_tol,
            seed: self.config.seed,
            shift: Some(floor - 1e-3 * (1.0 + floor.abs())),
            initial: warm.to_vec(),
            ..EigOptions::default()
        };
        let res = smallest_eigpairs(&h, &self.system.gram, self.config.q_vec, &opts)?;
        Ok(Columns {
            defect: res.values[0],
            energies: res.values.clone(),
            states: res.vectors.into_iter().map(PairWavefunction::normalized).collect(),
        })
    }

    /// Solves on `pool ∪ reserve ∪ columns`, compresses the weight matrix to
    /// at most `M + 1` states and re-solves on that support, so that the
    /// reported value is the optimum of the problem the next dual step sees.
    /// Support and reserve together hold at most `M + 2` states.
    pub fn primal_step(
        &self,
        pool: &SparseState,
        reserve: &[PairWavefunction],
        columns: &[PairWavefunction],
    ) -> Result<PrimalStep> {
        let mut all = pool.states.clone();
        all.extend_from_slice(reserve);
        all.extend_from_slice(columns);
        let (basis, size) = gram_orthonormalize(&all, &self.system.gram)?;
        let prob = self.pool_problem(&basis)?;
        let sdp = prob
            .sdp
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no moment constraint acts on the pool".into()))?;
        let sol = self.solve_sdp(sdp, false)?;
        let (sparse, dropped) = spectral_split(&sol.x, &basis, self.config.drop_tol)?;
        let (sparse, eliminated) = self.limit_rank(sparse)?;

        // re-solve on the support; keep the compressed state if that fails
        let support = self.pool_problem(&sparse.states)?;
        let resolved = match &support.sdp {
            Some(sdp) => self.solve_sdp(sdp, true).ok().filter(|s| {
                let e = self.pool_energy(&sparse);
                s.primal_value <= e + self.config.tol_sdp * (1.0 + e.abs())
            }),
            None => None,
        };
        let (weights, gap, compressed_from) = match &resolved {
            Some(s) => (s.x.clone(), s.gap, &support.a),
            None => (
                DMatrix::from_diagonal(&DVector::from_vec(sparse.weights.clone())),
                sol.gap,
                &support.a,
            ),
        };
        let before: DVector<f64> =
            DVector::from_iterator(compressed_from.len(), compressed_from.iter().map(|a| a.dot(&weights))) - &self.b;
        let (state, dropped_again) = spectral_split(&weights, &sparse.states, self.config.drop_tol)?;
        let after = self.pool_moments(&state)? - &self.b;

        let capacity = (self.family.len() + 2).saturating_sub(state.len());
        let reserve: Vec<PairWavefunction> = dropped_again
            .into_iter()
            .chain(eliminated)
            .chain(dropped)
            .take(capacity)
            .collect();
        Ok(PrimalStep {
            value: self.pool_energy(&state),
            pool: state,
            reserve,
            gap,
            solved_size: size,
            moment_residual: worst_residual(&(&after + &self.b), &self.b).1,
            compression_change: (&after - &before).amax(),
        })
    }

    /// Carathéodory reduction on (moments, energy) down to `M + 1` states;
    /// also returns the states that lost their weight.
    fn limit_rank(&self, sparse: SparseState) -> Result<(SparseState, Vec<PairWavefunction>)> {
        let bound = self.family.len() + 1;
        if sparse.len() <= bound {
            return Ok((sparse, Vec::new()));
        }
        let moments: Vec<Vec<f64>> = sparse
            .states
            .iter()
            .map(|s| {
                let rho = self.system.density(s, s)?;
                let mut m: Vec<f64> = self.family.moments_of(&rho).iter().copied().collect();
                m.push(self.hamiltonian.quad_form(&s.coeffs));
                Ok(m)
            })
            .collect::<Result<_>>()?;
        let (keep, weights) = caratheodory_reduce(&sparse.weights, &moments)?;
        let eliminated = (0..sparse.len())
            .filter(|i| !keep.contains(i))
            .map(|i| sparse.states[i].clone())
            .collect();
        Ok((sparse.reweighted(&keep, &weights), eliminated))
    }

    /// Density `ρ_Γ = Σ_k ω_k ρ_{Ψ_k}`.
    pub fn density_of(&self, pool: &SparseState) -> Result<PiecewiseQuadratic> {
        let mesh = &self.system.mesh;
        let mut coeffs = vec![[0.0; 3]; mesh.intervals()];
        for (w, s) in pool.weights.iter().zip(&pool.states) {
            let rho = self.system.density(s, s)?;
            for (acc, c) in coeffs.iter_mut().zip(rho.coeffs()) {
                for t in 0..3 {
                    acc[t] += w * c[t];
                }
            }
        }
        PiecewiseQuadratic::new(mesh.clone(), coeffs)
    }

    /// `∫ φ_m ρ_Γ` for every moment function.
    pub fn pool_moments(&self, pool: &SparseState) -> Result<DVector<f64>> {
        Ok(self.family.moments_of(&self.density_of(pool)?))
    }

    /// `Tr(H Γ)`.
    pub fn pool_energy(&self, pool: &SparseState) -> f64 {
        pool.weights
            .iter()
            .zip(&pool.states)
            .map(|(w, s)| w * self.hamiltonian.quad_form(&s.coeffs))
            .sum()
    }

    /// One full iteration; returns whether the stopping test fired.
    pub fn step(&self, state: &mut McalState) -> Result<bool> {
        let n = state.iteration + 1;
        let dual = self.dual_step(state)?;
        let cols = self.generate_columns(&dual.potential, &state.warm)?;
        let stop = cols.defect >= -self.config.tol_stop;
        let primal = self.primal_step(&state.pool, &state.reserve, &cols.states)?;
        let row = HistoryRow {
            n,
            dual_value: dual.value,
            primal_value: primal.value,
            defect: cols.defect,
            pool_size: primal.pool.len(),
            sdp_gap: dual.gap.abs().max(primal.gap.abs()),
            lower_bound: dual.value + cols.defect,
            moment_residual: primal.moment_residual,
            compression_change: primal.compression_change,
        };
        self.check_monotone(state.history.last(), &row)?;
        state.history.push(row);
        state.iteration = n;
        state.pool = primal.pool;
        state.reserve = primal.reserve;
        state.potential = dual.potential;
        state.warm = cols.states.into_iter().map(|s| s.coeffs).collect();
        state.converged = stop;
        Ok(stop)
    }

    fn check_monotone(&self, prev: Option<&HistoryRow>, row: &HistoryRow) -> Result<()> {
        let tol = 2.0 * self.config.tol_sdp * (1.0 + row.dual_value.abs());
        let fail = |detail: String| Error::Monotonicity {
            iteration: row.n,
            detail,
        };
        if let Some(prev) = prev {
            if (prev.primal_value - row.dual_value).abs() > tol {
                return Err(fail(format!(
                    "previous primal value {} differs from dual value {}",
                    prev.primal_value, row.dual_value
                )));
            }
            if prev.dual_value.is_finite() && row.dual_value > prev.dual_value + tol {
                return Err(fail(format!(
                    "dual value rose from {} to {}",
                    prev.dual_value, row.dual_value
                )));
            }
        }
        if row.primal_value > row.dual_value + tol {
            return Err(fail(format!(
                "primal value {} above dual value {}",
                row.primal_value, row.dual_value
            )));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<RunReport> {
        let state = self.initialize()?;
        self.run_from(state)
    }

    /// Continues from `state` until the stopping test or `max_iters` total iterations.
    pub fn run_from(&self, mut state: McalState) -> Result<RunReport> {
        let start = Instant::now();
        let mut error = None;
        while !state.converged && state.iteration < self.config.max_iters {
            match self.step(&mut state) {
                Ok(_) => {
                    if let Some(path) = &self.config.checkpoint {
                        save_checkpoint(path, &self.checkpoint_header(), &state)?;
                    }
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        let status = if error.is_some() {
            RunStatus::Failed
        } else if state.converged {
            RunStatus::Converged
        } else {
            RunStatus::MaxIterations
        };
        let density = self.density_of(&state.pool)?;
        let moment_residuals = (self.family.moments_of(&density) - &self.b).iter().copied().collect();
        let last = *state.history.last().expect("history starts with the initial row");
        let (lower, upper) = certified_bounds(&state).unwrap_or((f64::NAN, last.primal_value));
        Ok(RunReport {
            status,
            error,
            upper,
            lower,
            bracket_width: upper - lower,
            state,
            density,
            moment_residuals,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// Loads a checkpoint written for the same discretization.
    pub fn resume(&self, path: &std::path::Path) -> Result<McalState> {
        let (header, state) = load_checkpoint(path)?;
        let mine = self.checkpoint_header();
        if header.intervals != mine.intervals || header.moments != mine.moments || header.half_width != mine.half_width
        {
            return Err(Error::Checkpoint(format!(
                "checkpoint is for L={} D={} M={}, run is L={} D={} M={}",
                header.half_width, header.intervals, header.moments, mine.half_width, mine.intervals, mine.moments
            )));
        }
        if state.pool_states().iter().any(|s| s.len() != self.system.n2()) || state.pool.is_empty() {
            return Err(Error::Checkpoint("pool does not match the pair space".into()));
        }
        Ok(state)
    }
}

impl McalState {
    /// Support followed by reserve: the pool the next dual step works on.
    pub fn pool_states(&self) -> Vec<PairWavefunction> {
        let mut v = self.pool.states.clone();
        v.extend_from_slice(&self.reserve);
        v
    }
}

/// Matrices of the SDP on a fixed pool.
pub struct PoolProblem {
    /// `A_m`, one per moment function.
    pub a: Vec<DMatrix<f64>>,
    /// Pool Hamiltonian matrix.
    pub c: DMatrix<f64>,
    pub rowspace: RowSpace,
    /// Reduced problem; `None` when the rowspace is empty.
    pub sdp: Option<SdpProblem>,
}

fn worst_residual(got: &DVector<f64>, want: &DVector<f64>) -> (usize, f64) {
    got.iter()
        .zip(want.iter())
        .map(|(g, w)| (g - w).abs() / (1.0 + w.abs()))
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_config() -> McalConfig {
        McalConfig {
            half_width: 5.0,
            intervals: 16,
            moments: 5,
            q_vec: 2,
            max_iters: 30,
            ..McalConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(McalConfig::default().validate().is_ok());
        let bad = McalConfig {
            moments: 1,
            ..McalConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = McalConfig {
            q_vec: 0,
            ..McalConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = McalConfig {
            tol_stop: 0.0,
            ..McalConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn initial_value_is_rayleigh_quotient() {
        let mcal = Mcal::new(small_config()).unwrap();
        let state = mcal.initialize().unwrap();
        let psi = &mcal.target.initial;
        let rq = mcal.hamiltonian().quad_form(&psi.coeffs) / mcal.system.gram.quad_form(&psi.coeffs);
        assert_relative_eq!(state.history[0].primal_value, rq, epsilon = 1e-12);
        assert_relative_eq!(mcal.b.sum(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tampered_moments_fail_initialization() {
        let mut mcal = Mcal::new(small_config()).unwrap();
        mcal.b[0] += 1.0;
        assert!(matches!(mcal.initialize(), Err(Error::InitialMoments { index: 0, .. })));
    }

    #[test]
    fn first_dual_value_matches_initial_energy() {
        let mcal = Mcal::new(small_config()).unwrap();
        let state = mcal.initialize().unwrap();
        let dual = mcal.dual_step(&state).unwrap();
        assert_eq!(dual.rank, 1);
        assert_relative_eq!(dual.value, state.history[0].primal_value, epsilon = 1e-9);
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let mcal = Mcal::new(small_config()).unwrap();
        let zero = mcal.generate_columns(&DVector::zeros(5), &[]).unwrap();
        let shifted = mcal.generate_columns(&DVector::from_element(5, 0.3), &[]).unwrap();
        assert_relative_eq!(shifted.defect, zero.defect - 0.6, epsilon = 1e-10);
        assert_eq!(shifted.states.len(), 2);
    }

    #[test]
    fn small_run_is_monotone_and_bracketed() {
        let mcal = Mcal::new(small_config()).unwrap();
        let report = mcal.run().unwrap();
        assert_eq!(report.status, RunStatus::Converged, "{:?}", report.error);
        let h = &report.state.history;
        for w in h.windows(2).skip(1) {
            assert!(w[1].dual_value <= w[0].dual_value + 2e-9);
        }
        assert!(report.state.pool.len() <= 5 + 1);
        assert!(report.lower <= report.upper + 1e-8);
        for r in &report.moment_residuals {
            assert!(r.abs() < 1e-8);
        }
    }

    #[test]
    fn zero_iterations_keep_initial_row() {
        let cfg = McalConfig {
            max_iters: 0,
            ..small_config()
        };
        let report = Mcal::new(cfg).unwrap().run().unwrap();
        assert_eq!(report.state.history.len(), 1);
        assert_eq!(report.status, RunStatus::MaxIterations);
        assert!(report.lower.is_nan());
    }
}
