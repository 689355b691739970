//! Turning a pool weight matrix into a short list of weighted states, and
//! Carathéodory reduction of discrete measures.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_sorted;
use crate::pair_space::PairWavefunction;

/// Default relative drop tolerance on occupation numbers.
pub const DROP_TOL: f64 = 1e-10;

/// `Γ = Σ_k ω_k |Ψ_k⟩⟨Ψ_k|` with G-orthonormal states and descending weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    pub weights: Vec<f64>,
    pub states: Vec<PairWavefunction>,
}

impl SparseState {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Keeps the atoms listed in `keep` with the given new weights, sorted
    /// descending by weight.
    pub fn reweighted(&self, keep: &[usize], weights: &[f64]) -> SparseState {
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        SparseState {
            weights: order.iter().map(|&i| weights[i]).collect(),
            states: order.iter().map(|&i| self.states[keep[i]].clone()).collect(),
        }
    }
}

/// Eigendecomposes the pool weight matrix `s` and rotates the pool onto its
/// eigenvectors, keeping eigenvalues above `drop_tol · λ_max`.
pub fn spectral_sparsify(s: &DMatrix<f64>, pool: &[PairWavefunction], drop_tol: f64) -> Result<SparseState> {
    spectral_split(s, pool, drop_tol).map(|(kept, _)| kept)
}

/// Like [`spectral_sparsify`], but also returns the rotated directions whose
/// occupation fell below the cutoff, ordered by decreasing eigenvalue.
pub fn spectral_split(
    s: &DMatrix<f64>,
    pool: &[PairWavefunction],
    drop_tol: f64,
) -> Result<(SparseState, Vec<PairWavefunction>)> {
    let k = s.nrows();
    if s.ncols() != k || pool.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} weight matrix for a pool of {}",
            s.nrows(),
            s.ncols(),
            pool.len()
        )));
    }
    if k == 0 {
        return Err(Error::EmptyPool);
    }
    crate::linalg::check_finite(s)?;
    let sym = (s + s.transpose()) * 0.5;
    let (vals, vecs) = sym_eigen_sorted(&sym);
    let lmax = vals[k - 1].max(0.0);
    let cut = drop_tol * lmax;
    if vals[0] < -10.0 * cut {
        return Err(Error::NotPsd(vals[0]));
    }
    let n = pool[0].len();
    let rotate = |c: usize| {
        let mut coeffs = vec![0.0; n];
        for (l, p) in pool.iter().enumerate() {
            let u = vecs[(l, c)];
            for (o, x) in coeffs.iter_mut().zip(&p.coeffs) {
                *o += u * x;
            }
        }
        PairWavefunction::normalized(coeffs)
    };
    let mut weights = Vec::new();
    let mut states = Vec::new();
    let mut dropped = Vec::new();
    for c in (0..k).rev() {
        if vals[c] > cut {
            weights.push(vals[c]);
            states.push(rotate(c));
        } else {
            dropped.push(rotate(c));
        }
    }
    if weights.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok((SparseState { weights, states }, dropped))
}

/// Reduces a positive discrete measure to at most `J0` atoms (the moment
/// vector length) with the same weighted moment sums.
///
/// Returns the indices of surviving atoms, ascending, and their new weights.
pub fn caratheodory_reduce(weights: &[f64], moments: &[Vec<f64>]) -> Result<(Vec<usize>, Vec<f64>)> {
    if weights.is_empty() || weights.len() != moments.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} moment vectors",
            weights.len(),
            moments.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
    }
    let j0 = moments[0].len();
    if j0 == 0 || moments.iter().any(|m| m.len() != j0) {
        return Err(Error::DimensionMismatch("moment vectors differ in length".into()));
    }
    if moments.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("moment vector".into()));
    }

    let mut alive: Vec<usize> = (0..weights.len()).collect();
    let mut alpha: Vec<f64> = weights.to_vec();
    while alive.len() > j0 {
        let group = &alive[..j0 + 1];
        // padded square matrix whose last right singular vector spans a null direction
        let mut v = DMatrix::zeros(j0 + 1, j0 + 1);
        for (c, &i) in group.iter().enumerate() {
            for r in 0..j0 {
                v[(r, c)] = moments[i][r];
            }
        }
        let svd = v.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let imin = svd.singular_values.imin();
        let mut z: Vec<f64> = vt.row(imin).iter().copied().collect();
        let zmax = z.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !z.iter().any(|&x| x > 1e-14 * zmax) {
            z.iter_mut().for_each(|x| *x = -*x);
        }
        // step until the first positive-z atom hits zero; ties go to the smallest index
        let mut t = f64::INFINITY;
        let mut hit = 0;
        for (c, &i) in group.iter().enumerate() {
            if z[c] > 1e-14 * zmax {
                let ti = alpha[i] / z[c];
                if ti < t {
                    t = ti;
                    hit = c;
                }
            }
        }
        for (c, &i) in group.iter().enumerate() {
            alpha[i] -= t * z[c];
        }
        alpha[group[hit]] = 0.0;
        let hit_atom = group[hit];
        alive.retain(|&i| i != hit_atom && alpha[i] > 0.0);
    }
    let out_w = alive.iter().map(|&i| alpha[i]).collect();
    Ok((alive, out_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_pool(k: usize) -> Vec<PairWavefunction> {
        (0..k)
            .map(|i| {
                let mut c = vec![0.0; k];
                c[i] = 1.0;
                PairWavefunction::normalized(c)
            })
            .collect()
    }

    #[test]
    fn diagonal_matrix_drops_zero() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.7, 0.3, 0.0]));
        let out = spectral_sparsify(&s, &unit_pool(3), DROP_TOL).unwrap();
        assert_eq!(out.len(), 2);
        assert_relative_eq!(out.weights[0], 0.7, epsilon = 1e-15);
        assert_relative_eq!(out.weights[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn rank_one_gives_single_state() {
        let w = nalgebra::DVector::from_vec(vec![0.3, -0.4, 1.2]);
        let s = &w * w.transpose();
        let out = spectral_sparsify(&s, &unit_pool(3), DROP_TOL).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out.weights[0], w.norm_squared(), epsilon = 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -0.1]));
        assert!(matches!(
            spectral_sparsify(&s, &unit_pool(2), DROP_TOL),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn mass_only_moment_collapses() {
        let (idx, w) = caratheodory_reduce(&[0.2, 0.3, 0.5], &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(idx.len(), 1);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn three_atoms_in_the_plane() {
        let m = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let (idx, w) = caratheodory_reduce(&[1.0, 1.0, 1.0], &m).unwrap();
        assert!(idx.len() <= 2);
        let mut sum = [0.0; 2];
        for (&i, wi) in idx.iter().zip(&w) {
            assert!(*wi > 0.0);
            sum[0] += wi * m[i][0];
            sum[1] += wi * m[i][1];
        }
        assert_relative_eq!(sum[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(sum[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn small_input_is_untouched() {
        let (idx, w) = caratheodory_reduce(&[0.4, 0.6], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(idx, vec![0, 1]);
        assert_eq!(w, vec![0.4, 0.6]);
    }

    #[test]
    fn rejects_nonpositive_weight() {
        assert!(caratheodory_reduce(&[0.4, 0.0], &[vec![1.0], vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn reduction_preserves_moments(
            atoms in prop::collection::vec((0.01f64..1.0, prop::collection::vec(-1.0f64..1.0, 4)), 1..30)
        ) {
            let weights: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            let moments: Vec<Vec<f64>> = atoms.iter().map(|a| a.1.clone()).collect();
            let (idx, w) = caratheodory_reduce(&weights, &moments).unwrap();
            prop_assert!(idx.len() <= 4);
            prop_assert!(w.iter().all(|&x| x > 0.0));
            for r in 0..4 {
                let before: f64 = weights.iter().zip(&moments).map(|(a, m)| a * m[r]).sum();
                let after: f64 = idx.iter().zip(&w).map(|(&i, a)| a * moments[i][r]).sum();
                let scale: f64 = weights.iter().zip(&moments).map(|(a, m)| (a * m[r]).abs()).sum();
                prop_assert!((before - after).abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }
}
