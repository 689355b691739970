#![allow(dead_code)]

use std::time::Instant;

use mcal::driver::{HistoryRow, Mcal, McalConfig};
use mcal::linalg::min_eig_sym;
use mcal::sdp::SdpProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// SDP instance with a known optimum, built from a complementary pair
/// `X* S* = 0`. A direction in the kernel of the constraints keeps the primal
/// strictly feasible, and the first constraint is the projector onto the range
/// of `X*`, so shifting `y_1` down makes the dual slack positive definite.
pub struct KktInstance {
    pub problem: SdpProblem,
    pub value: f64,
    pub y_star: DVector<f64>,
    /// A dual point with positive definite slack.
    pub y_interior: DVector<f64>,
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

pub fn kkt_instance(rng: &mut ChaCha8Rng, k: usize, rank: usize, j: usize) -> KktInstance {
    assert!(k >= 1 && (1..=k).contains(&rank));
    let q = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let diag = |d: Vec<f64>| &q * DMatrix::from_diagonal(&DVector::from_vec(d)) * q.transpose();
    let x_star = diag(
        (0..k)
            .map(|i| if i < rank { rng.random_range(0.5..2.0) } else { 0.0 })
            .collect(),
    );
    let s_star = diag(
        (0..k)
            .map(|i| if i < rank { 0.0 } else { rng.random_range(0.5..2.0) })
            .collect(),
    );
    let range = diag((0..k).map(|i| if i < rank { 1.0 } else { 0.0 }).collect());
    let null = diag((0..k).map(|i| if i < rank { 0.0 } else { 1.0 }).collect());
    let null_norm = null.dot(&null);

    let mut a = vec![range];
    while a.len() < j {
        let mut m = random_symmetric(rng, k);
        if rank < k {
            m -= &null * (m.dot(&null) / null_norm);
        }
        a.push(m);
    }
    let y_star = DVector::from_fn(j, |_, _| rng.random_range(-1.0..1.0));
    let mut c = s_star.clone();
    for (yj, aj) in y_star.iter().zip(&a) {
        c += aj * *yj;
    }
    let c = (&c + c.transpose()) * 0.5;
    let b = DVector::from_iterator(j, a.iter().map(|m| m.dot(&x_star)));
    let value = c.dot(&x_star);
    let mut y_interior = y_star.clone();
    y_interior[0] -= 1.0;
    KktInstance {
        problem: SdpProblem::new(c, a, b).expect("independent constraints"),
        value,
        y_star,
        y_interior,
    }
}

/// Largest dimension `J` such that generic constraints orthogonal to the null
/// projector stay independent.
pub fn max_constraints(k: usize, rank: usize) -> usize {
    k * (k + 1) / 2 - usize::from(rank < k)
}

fn slack_min_eig(p: &SdpProblem, y: &DVector<f64>) -> f64 {
    let mut s = p.c.clone();
    for (yj, aj) in y.iter().zip(&p.a) {
        s -= aj * *yj;
    }
    min_eig_sym(&s).expect("finite slack")
}

/// Distance from the interior point `y0` to the boundary of the dual feasible
/// set along `d`, by doubling then bisection; `None` if no boundary is met.
fn boundary_distance(p: &SdpProblem, y0: &DVector<f64>, d: &DVector<f64>) -> Option<f64> {
    let mut hi = 1.0;
    while slack_min_eig(p, &(y0 + d * hi)) >= 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slack_min_eig(p, &(y0 + d * mid)) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Brute-force dual optimum for one or two constraints: the largest `bᵀy`
/// over boundary points reached from `y0`, scanning directions on a grid and
/// refining around the best one.
pub fn boundary_grid_oracle(p: &SdpProblem, y0: &DVector<f64>) -> f64 {
    let j = p.b.len();
    let value_along = |d: DVector<f64>| -> f64 {
        match boundary_distance(p, y0, &d) {
            Some(t) => p.b.dot(&(y0 + d * t)),
            None if p.b.dot(&d) > 0.0 => f64::INFINITY,
            None => p.b.dot(y0),
        }
    };
    match j {
        1 => value_along(DVector::from_element(1, 1.0)).max(value_along(DVector::from_element(1, -1.0))),
        2 => {
            let dir = |th: f64| DVector::from_vec(vec![th.cos(), th.sin()]);
            let n = 720;
            let step = std::f64::consts::TAU / n as f64;
            let (best_i, _) =
                (0..n)
                    .map(|i| (i, value_along(dir(i as f64 * step))))
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
                    );
            // golden section on the bracketing cells
            let (mut a, mut b) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if value_along(dir(c)) > value_along(dir(d)) {
                    b = d;
                } else {
                    a = c;
                }
            }
            value_along(dir(0.5 * (a + b)))
        }
        _ => panic!("grid oracle handles at most two constraints"),
    }
}

/// A driver run stepped by hand so that the full pool size after every
/// iteration can be recorded.
pub struct RecordedRun {
    pub moments: usize,
    pub tol_sdp: f64,
    pub tol_stop: f64,
    pub history: Vec<HistoryRow>,
    /// Support plus reserve after each iteration, starting with `n = 0`.
    pub pool_sizes: Vec<usize>,
    pub final_support: usize,
    pub converged: bool,
    pub error: Option<String>,
    /// Scaled moment residual of the final state, recomputed from its density.
    pub final_residual: f64,
    pub seconds: f64,
}

impl RecordedRun {
    pub fn last(&self) -> &HistoryRow {
        self.history.last().expect("history starts with n = 0")
    }
}

pub fn recorded_run(config: McalConfig) -> RecordedRun {
    let start = Instant::now();
    let mcal = Mcal::new(config.clone()).expect("valid configuration");
    let mut state = mcal.initialize().expect("initial state");
    let mut pool_sizes = vec![state.pool.len() + state.reserve.len()];
    let mut error = None;
    while !state.converged && state.iteration < config.max_iters {
        if let Err(e) = mcal.step(&mut state) {
            error = Some(e.to_string());
            break;
        }
        pool_sizes.push(state.pool.len() + state.reserve.len());
    }
    let got = mcal.pool_moments(&state.pool).expect("moments of the final state");
    let final_residual = got
        .iter()
        .zip(mcal.b.iter())
        .map(|(g, b)| (g - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    RecordedRun {
        moments: config.moments,
        tol_sdp: config.tol_sdp,
        tol_stop: config.tol_stop,
        history: state.history,
        pool_sizes,
        final_support: state.pool.len(),
        converged: state.converged,
        error,
        final_residual,
        seconds: start.elapsed().as_secs_f64(),
    }
}
