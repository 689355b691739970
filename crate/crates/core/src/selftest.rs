//! Small oracle suites behind `mcal selftest`.
//!
//! Each suite checks one module against closed-form answers or a dense
//! reference computation and reports one line per check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{smallest_eigpairs, EigOptions};
use crate::error::Result;
use crate::fem1d::{assemble_mass, assemble_stiffness, assemble_weighted_mass, Mesh1D};
use crate::linalg::min_eig_sym;
use crate::pair_space::PairSystem;
use crate::sdp::{solve, SdpOptions, SdpProblem};
use crate::sparsify::caratheodory_reduce;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sdp,
    Eigen,
    Sparsify,
    Fem,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Sdp => "sdp",
            Suite::Eigen => "eigen",
            Suite::Sparsify => "sparsify",
            Suite::Fem => "fem",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Ground energy of two free fermions in a box of length `2L` with `-Δ/2`
/// kinetic energy: the two lowest one-body levels `k²π²/(8L²)`, `k = 1, 2`.
pub fn free_pair_energy(half_width: f64) -> f64 {
    5.0 * std::f64::consts::PI.powi(2) / (8.0 * half_width * half_width)
}

/// Lowest eigenvalue of the kinetic pair operator on `D` intervals of `(-L, L)`.
pub fn kinetic_ground_energy(half_width: f64, intervals: usize) -> Result<f64> {
    let system = PairSystem::new(Mesh1D::new(half_width, intervals)?, None)?;
    let res = smallest_eigpairs(&system.kinetic, &system.gram, 1, &EigOptions::default())?;
    Ok(res.values[0])
}

pub fn run(suite: Suite) -> Vec<Check> {
    let outcome = match suite {
        Suite::Sdp => sdp_checks(),
        Suite::Eigen => eigen_checks(),
        Suite::Sparsify => sparsify_checks(),
        Suite::Fem => fem_checks(),
    };
    outcome.unwrap_or_else(|e| vec![Check::new(suite.name(), false, format!("error: {e}"))])
}

fn random_symmetric(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

fn sdp_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let opts = SdpOptions::default();

    // max y s.t. C - y I ⪰ 0 is λ_min(C)
    let mut worst = 0.0f64;
    let mut all_optimal = true;
    for _ in 0..20 {
        let k = rng.random_range(2..=8);
        let c = random_symmetric(&mut rng, k);
        let p = SdpProblem::new(c.clone(), vec![DMatrix::identity(k, k)], DVector::from_element(1, 1.0))?;
        let sol = solve(&p, &opts)?;
        all_optimal &= sol.is_optimal();
        worst = worst.max((sol.dual_value - min_eig_sym(&c)?).abs());
    }
    out.push(Check::new(
        "trace-constrained value equals λ_min on 20 instances",
        all_optimal && worst <= 1e-7,
        format!("max error {worst:.2e}"),
    ));

    let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let p = SdpProblem::new(c, vec![DMatrix::identity(2, 2)], DVector::from_element(1, 1.0))?;
    let sol = solve(&p, &opts)?;
    let err = (sol.x[(0, 0)] - 1.0).abs() + sol.x[(1, 1)].abs() + (sol.y[0] - 1.0).abs();
    out.push(Check::new(
        "diag(1,2) with trace constraint has X = diag(1,0), y = 1",
        sol.is_optimal() && err <= 1e-7,
        format!("error {err:.2e}"),
    ));

    // an orthogonal congruence of all data leaves the value unchanged
    let k = 5;
    let x0 = {
        let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        &m * m.transpose() + DMatrix::identity(k, k)
    };
    let mut a = vec![DMatrix::identity(k, k)];
    a.extend((0..3).map(|_| random_symmetric(&mut rng, k)));
    let b = DVector::from_iterator(a.len(), a.iter().map(|m| m.dot(&x0)));
    let c = random_symmetric(&mut rng, k) + DMatrix::identity(k, k) * 3.0;
    let q = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let rot = |m: &DMatrix<f64>| q.transpose() * m * &q;
    let v1 = solve(&SdpProblem::new(c.clone(), a.clone(), b.clone())?, &opts)?;
    let v2 = solve(&SdpProblem::new(rot(&c), a.iter().map(rot).collect(), b)?, &opts)?;
    let diff = (v1.primal_value - v2.primal_value).abs();
    out.push(Check::new(
        "value invariant under orthogonal congruence",
        v1.is_optimal() && v2.is_optimal() && diff <= 1e-7,
        format!("difference {diff:.2e}"),
    ));
    Ok(out)
}

fn eigen_checks() -> Result<Vec<Check>> {
    let exact = free_pair_energy(10.0);
    let e200 = kinetic_ground_energy(10.0, 200)?;
    let e100 = kinetic_ground_energy(10.0, 100)?;
    let rel = (e200 - exact).abs() / exact;
    let ratio = (e100 - exact) / (e200 - exact);
    let mut out = vec![
        Check::new(
            "free pair energy at D=200 within 1e-3 relative",
            rel <= 1e-3,
            format!("{e200:.10} vs {exact:.10}, relative {rel:.2e}"),
        ),
        Check::new(
            "error ratio D=100 over D=200 in [3, 5]",
            (3.0..=5.0).contains(&ratio),
            format!("ratio {ratio:.3}"),
        ),
    ];

    let system = PairSystem::new(Mesh1D::new(10.0, 40)?, None)?;
    let res = smallest_eigpairs(&system.kinetic, &system.gram, 4, &EigOptions::default())?;
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let g = system.gram.bilinear(&res.vectors[i], &res.vectors[j]);
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    out.push(Check::new(
        "four lowest pairs are G-orthonormal",
        worst <= 1e-8,
        format!("max deviation {worst:.2e}"),
    ));
    Ok(out)
}

fn sparsify_checks() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst = 0.0f64;
    let mut bounded = true;
    for _ in 0..50 {
        let j0 = rng.random_range(1..=10);
        let atoms = rng.random_range(1..=50);
        let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.01..1.0)).collect();
        let moments: Vec<Vec<f64>> = (0..atoms)
            .map(|_| (0..j0).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let (keep, w) = caratheodory_reduce(&weights, &moments)?;
        bounded &= keep.len() <= j0 && w.iter().all(|&x| x >= 0.0);
        for m in 0..j0 {
            let before: f64 = weights.iter().zip(&moments).map(|(w, v)| w * v[m]).sum();
            let after: f64 = keep.iter().zip(&w).map(|(&i, w)| w * moments[i][m]).sum();
            let scale: f64 = weights.iter().zip(&moments).map(|(w, v)| (w * v[m]).abs()).sum();
            worst = worst.max((before - after).abs() / scale.max(1e-300));
        }
    }
    Ok(vec![
        Check::new(
            "reduced measures have at most J0 atoms and nonnegative weights",
            bounded,
            "50 random measures".into(),
        ),
        Check::new(
            "reduced measures keep their moments to 1e-10 relative",
            worst <= 1e-10,
            format!("max relative error {worst:.2e}"),
        ),
    ])
}

fn fem_checks() -> Result<Vec<Check>> {
    let mesh = Mesh1D::new(10.0, 40)?;
    let h = mesh.h();
    let n = mesh.n_interior();
    let mass = assemble_mass(&mesh);
    let stiff = assemble_stiffness(&mesh);
    let ones = vec![1.0; n];
    let mrows = mass.matvec(&ones);
    let srows = stiff.matvec(&ones);
    // the first and last rows miss their boundary neighbour
    let mass_err = mrows[1..n - 1].iter().map(|r| (r - h).abs()).fold(0.0, f64::max);
    let stiff_err = srows[1..n - 1].iter().map(|r| r.abs()).fold(0.0, f64::max);
    let unit = assemble_weighted_mass(&mesh, |_| 1.0, &[])?;
    let weighted_err = (unit.to_dense() - mass.to_dense()).amax();
    Ok(vec![
        Check::new(
            "mass row sums equal h",
            mass_err <= 1e-13,
            format!("max error {mass_err:.2e}"),
        ),
        Check::new(
            "stiffness row sums vanish",
            stiff_err <= 1e-12,
            format!("max error {stiff_err:.2e}"),
        ),
        Check::new(
            "unit weight reproduces the mass matrix",
            weighted_err <= 1e-13,
            format!("max error {weighted_err:.2e}"),
        ),
    ])
}
