mod common;

use std::f64::consts::PI;

use common::boundary_grid_oracle;
use mcal::driver::{
    builtin_target, certified_bounds, even_profile, ground_energy, odd_profile, HistoryRow, Mcal, McalConfig,
    McalState, RunStatus, TargetDensity,
};
use mcal::fem1d::Mesh1D;
use mcal::linalg::min_eig_sym;
use mcal::pair_space::{Kernel, PairSystem, PairWavefunction};
use mcal::sdp::SdpProblem;
use mcal::sparsify::SparseState;
use nalgebra::{DMatrix, DVector};

fn small(intervals: usize, moments: usize) -> McalConfig {
    McalConfig {
        intervals,
        moments,
        ..McalConfig::default()
    }
}

fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}

#[test]
fn builtin_orbitals_and_density() {
    // both profiles are piecewise linear with kinks at 0 and ±L/2, so the
    // trapezoid rule on a grid through those points is exact
    let l = 10.0;
    let even2 = trapezoid(|x| even_profile(l, x).powi(2), -l, l, 4000);
    let odd2 = trapezoid(|x| odd_profile(l, x).powi(2), -l, l, 4000);
    let cross = trapezoid(|x| even_profile(l, x) * odd_profile(l, x), -l, l, 4000);
    assert!((even2 - 20.0 / 3.0).abs() < 1e-5);
    assert!((odd2 - 20.0 / 3.0).abs() < 1e-5);
    assert!(cross.abs() < 1e-12);

    let system = PairSystem::new(Mesh1D::new(l, 100).unwrap(), None).unwrap();
    let target = builtin_target(&system).unwrap();
    assert!((target.rho.integral() - 2.0).abs() < 1e-12);
    for &x in system.mesh.nodes() {
        let want = (even_profile(l, x).powi(2) + odd_profile(l, x).powi(2)) * 3.0 / 20.0;
        assert!((target.rho.eval(x) - want).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn free_pair_ground_energy() {
    let config = McalConfig {
        kernel: Kernel::Constant(0.0),
        ..McalConfig::default()
    };
    let mcal = Mcal::new(config).unwrap();
    let cols = mcal.generate_columns(&DVector::zeros(mcal.family.len()), &[]).unwrap();
    let want = 5.0 * PI * PI / 800.0;
    assert!((cols.defect - want).abs() <= 1e-3 * want, "{} vs {want}", cols.defect);

    // four columns, orthonormal in the pair Gram form
    assert_eq!(cols.states.len(), 4);
    for (i, a) in cols.states.iter().enumerate() {
        for (j, b) in cols.states.iter().enumerate() {
            let g = mcal.system.gram.bilinear(&a.coeffs, &b.coeffs);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-8, "({i}, {j}): {g}");
        }
    }
}

#[test]
fn constant_potential_shifts_the_spectrum() {
    let mcal = Mcal::new(small(30, 6)).unwrap();
    let zero = mcal.generate_columns(&DVector::zeros(6), &[]).unwrap();
    let c = 0.37;
    let shifted = mcal.generate_columns(&DVector::from_element(6, c), &[]).unwrap();
    for (a, b) in zero.energies.iter().zip(&shifted.energies) {
        assert!((b - (a - 2.0 * c)).abs() < 1e-8, "{a} -> {b}");
    }
    let direct = ground_energy(&mcal.system, |_| c, &[]).unwrap();
    assert!((direct - shifted.defect).abs() < 1e-8);
}

#[test]
fn two_state_dual_matches_brute_force() {
    let config = McalConfig {
        q_vec: 2,
        ..small(20, 2)
    };
    let mut mcal = Mcal::new(config).unwrap();
    let cols = mcal.generate_columns(&DVector::zeros(2), &[]).unwrap();
    let psi = cols.states.clone();
    let mix = SparseState {
        weights: vec![0.5, 0.5],
        states: psi.clone(),
    };
    mcal.b = mcal.pool_moments(&mix).unwrap();

    let primal = mcal.primal_step(&mix, &[], &[]).unwrap();
    let state = McalState {
        iteration: 1,
        pool: primal.pool,
        reserve: primal.reserve,
        potential: DVector::zeros(2),
        history: vec![HistoryRow::initial(primal.value, primal.moment_residual)],
        converged: false,
        warm: Vec::new(),
    };
    assert_eq!(state.pool_states().len(), 2);
    let dual = mcal.dual_step(&state).unwrap();

    // the same SDP assembled directly on the two columns
    let h = mcal.hamiltonian();
    let c = DMatrix::from_fn(2, 2, |k, l| h.bilinear(&psi[k].coeffs, &psi[l].coeffs));
    let a: Vec<DMatrix<f64>> = (0..2)
        .map(|m| {
            DMatrix::from_fn(2, 2, |k, l| {
                let rho = mcal.system.density(&psi[k], &psi[l]).unwrap();
                mcal.family.moments_of(&rho)[m]
            })
        })
        .collect();
    let c = (&c + c.transpose()) * 0.5;
    let a: Vec<DMatrix<f64>> = a.iter().map(|m| (m + m.transpose()) * 0.5).collect();
    // the two hats sum to one, so A_0 + A_1 is twice the identity
    let t = 0.5 * min_eig_sym(&c).unwrap() - 1.0;
    let problem = SdpProblem::new(c, a, mcal.b.clone()).unwrap();
    let oracle = boundary_grid_oracle(&problem, &DVector::from_element(2, t));
    assert!(
        (dual.value - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
        "{} vs {oracle}",
        dual.value
    );
}

#[test]
fn ground_state_density_is_matched_immediately() {
    let config = small(20, 5);
    let system = PairSystem::new(Mesh1D::new(10.0, 20).unwrap(), Some(config.kernel)).unwrap();
    let probe = Mcal::new(config.clone()).unwrap();
    let y = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, -0.4]);
    let cols = probe.generate_columns(&y, &[]).unwrap();
    let psi: PairWavefunction = cols.states[0].clone();
    let rho = system.density(&psi, &psi).unwrap();
    let target = TargetDensity {
        rho,
        initial: psi.clone(),
    };
    let mcal = Mcal::with_target(config, system, target).unwrap();

    let ys: Vec<f64> = y.iter().copied().collect();
    let e_v = ground_energy(&mcal.system, |x| mcal.family.combine(&ys, x), &mcal.family.nodes()).unwrap();
    let expected = e_v + y.dot(&mcal.b);
    let energy = mcal.hamiltonian().quad_form(&psi.coeffs);
    assert!((energy - expected).abs() < 1e-7 * (1.0 + expected.abs()));

    let report = mcal.run().unwrap();
    assert_eq!(report.status, RunStatus::Converged);
    assert!((report.upper - expected).abs() < 1e-6 * (1.0 + expected.abs()));
    assert!(report.state.iteration <= 3);
}

#[test]
fn bounds_are_consistent_along_a_run() {
    let mcal = Mcal::new(small(30, 6)).unwrap();
    let report = mcal.run().unwrap();
    assert_eq!(report.status, RunStatus::Converged);
    let history = &report.state.history;
    let scale = 1.0 + report.upper.abs();
    for w in history.windows(2) {
        assert!(
            w[1].primal_value <= w[0].primal_value + 1e-9 * scale,
            "upper bound rose at n = {}",
            w[1].n
        );
    }
    let mut best = f64::INFINITY;
    for row in &history[1..] {
        assert!(row.lower_bound <= row.dual_value + 1e-12);
        assert!(row.lower_bound <= report.upper + 1e-8 * scale);
        best = best.min(row.primal_value - row.lower_bound);
    }
    assert!(best <= 1e-6 * scale);
    let (lower, upper) = certified_bounds(&report.state).unwrap();
    assert_eq!((lower, upper), (report.lower, report.upper));
    assert!(report.moment_residuals.iter().all(|r| r.abs() < 1e-7));
}

#[test]
fn resumed_run_reaches_the_same_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    let straight = Mcal::new(small(30, 6)).unwrap().run().unwrap();

    let first = Mcal::new(McalConfig {
        max_iters: 2,
        checkpoint: Some(path.clone()),
        ..small(30, 6)
    })
    .unwrap();
    let partial = first.run().unwrap();
    assert_eq!(partial.status, RunStatus::MaxIterations);

    let second = Mcal::new(small(30, 6)).unwrap();
    let state = second.resume(&path).unwrap();
    assert_eq!(state.iteration, 2);
    let resumed = second.run_from(state).unwrap();
    assert_eq!(resumed.status, RunStatus::Converged);
    assert!((resumed.upper - straight.upper).abs() < 1e-8);

    let other = Mcal::new(small(32, 6)).unwrap();
    assert!(other.resume(&path).is_err());
}
