//! Antisymmetric two-particle Galerkin space spanned by wedges `φ_i ∧ φ_j`.

mod basis;
mod density;
mod interaction;
mod operator;

pub use basis::{PairBasis, PairWavefunction};
pub use density::{cross_density, pair_density, pool_cross_densities, DensityFactor};
pub use interaction::{assemble_interaction, Kernel};
pub use operator::{assemble_pair_gram, assemble_pair_kinetic, assemble_pair_onebody, PairOperator};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem1d::{assemble_mass, assemble_stiffness, assemble_weighted_mass, Mesh1D, TriDiagSym};

/// Relative Gram eigenvalue cutoff below which pool directions are dropped.
pub const GRAM_RANK_CUTOFF: f64 = 1e-10;

/// Everything assembled once per discretization.
#[derive(Debug, Clone)]
pub struct PairSystem {
    pub mesh: Mesh1D,
    pub basis: PairBasis,
    pub mass: TriDiagSym,
    pub stiffness: TriDiagSym,
    pub gram: PairOperator,
    pub kinetic: PairOperator,
    pub interaction: Option<PairOperator>,
    pub kernel: Option<Kernel>,
}

impl PairSystem {
    /// Assembles all forms; `kernel = None` gives a non-interacting system.
    pub fn new(mesh: Mesh1D, kernel: Option<Kernel>) -> Result<Self> {
        let basis = PairBasis::new(mesh.n_interior())?;
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let gram = assemble_pair_gram(&basis, &mass);
        let kinetic = assemble_pair_kinetic(&basis, &stiffness, &mass);
        let interaction = kernel.map(|k| assemble_interaction(&mesh, &basis, k)).transpose()?;
        Ok(Self {
            mesh,
            basis,
            mass,
            stiffness,
            gram,
            kinetic,
            interaction,
            kernel,
        })
    }

    pub fn n2(&self) -> usize {
        self.basis.n2()
    }

    /// `T + W`, the Hamiltonian without external potential.
    pub fn hamiltonian(&self) -> PairOperator {
        match &self.interaction {
            Some(w) => self.kinetic.add_scaled(w, 1.0).expect("same basis"),
            None => self.kinetic.clone(),
        }
    }

    /// Form of `v(x_1) + v(x_2)`; `v` must be linear between `breakpoints` for exactness.
    pub fn onebody<F: Fn(f64) -> f64>(&self, v: F, breakpoints: &[f64]) -> Result<PairOperator> {
        let vmass = assemble_weighted_mass(&self.mesh, v, breakpoints)?;
        Ok(assemble_pair_onebody(&self.basis, &vmass, &self.mass))
    }

    pub fn density(&self, a: &PairWavefunction, b: &PairWavefunction) -> Result<crate::fem1d::PiecewiseQuadratic> {
        pair_density(&self.mesh, &self.basis, &self.mass, a, b)
    }

    /// Lowest two-particle kinetic energy, the sum of the two lowest
    /// generalized eigenvalues of `(½K, M)`.
    pub fn kinetic_floor(&self) -> f64 {
        let k = self.stiffness.to_dense() * 0.5;
        let m = self.mass.to_dense();
        let vals = crate::linalg::generalized_eigen(&k, &m)
            .map(|(v, _)| v)
            .unwrap_or_else(|_| nalgebra::DVector::zeros(2));
        vals[0] + vals[1]
    }
}

/// G-orthonormal basis of the span of `pool`, with its dimension.
///
/// Directions whose Gram eigenvalue falls below [`GRAM_RANK_CUTOFF`] times the
/// largest one are dropped; a second pass restores orthonormality to
/// rounding level.
pub fn gram_orthonormalize(pool: &[PairWavefunction], gram: &PairOperator) -> Result<(Vec<PairWavefunction>, usize)> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let refs: Vec<&[f64]> = pool.iter().map(|p| p.coeffs.as_slice()).collect();
    let first = canonical_pass(&refs, gram, GRAM_RANK_CUTOFF)?;
    let refs: Vec<&[f64]> = first.iter().map(|v| v.as_slice()).collect();
    let second = canonical_pass(&refs, gram, 1e-3)?;
    let rank = second.len();
    Ok((second.into_iter().map(PairWavefunction::normalized).collect(), rank))
}

fn canonical_pass(vectors: &[&[f64]], gram: &PairOperator, cutoff: f64) -> Result<Vec<Vec<f64>>> {
    let s = gram.projected(vectors);
    let eig = s.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    if !(lmax > 0.0) {
        return Err(Error::InvalidArgument("pool spans the zero vector only".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| eig.eigenvalues[k] > cutoff * lmax)
        .collect();
    let n = vectors[0].len();
    if kept.len() == vectors.len() && (&s - DMatrix::identity(s.nrows(), s.ncols())).amax() < 1e-3 {
        // nearly orthonormal input: symmetric S^{-1/2} keeps vectors in place
        let mut inv_sqrt = eig.eigenvectors.clone();
        for (c, lam) in eig.eigenvalues.iter().enumerate() {
            inv_sqrt.column_mut(c).scale_mut(1.0 / lam.sqrt());
        }
        let corr = inv_sqrt * eig.eigenvectors.transpose();
        return Ok(combine(vectors, &corr, n));
    }
    let mut coef = DMatrix::zeros(vectors.len(), kept.len());
    for (c, &k) in kept.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[k].sqrt();
        let mut col = eig.eigenvectors.column(k).clone_owned();
        // deterministic sign: largest component positive
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        coef.set_column(c, &(col * scale));
    }
    Ok(combine(vectors, &coef, n))
}

fn combine(vectors: &[&[f64]], coef: &DMatrix<f64>, n: usize) -> Vec<Vec<f64>> {
    (0..coef.ncols())
        .map(|c| {
            let mut out = vec![0.0; n];
            for (r, v) in vectors.iter().enumerate() {
                let w = coef[(r, c)];
                if w != 0.0 {
                    for (o, x) in out.iter_mut().zip(v.iter()) {
                        *o += w * x;
                    }
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_system() -> PairSystem {
        PairSystem::new(Mesh1D::new(1.0, 8).unwrap(), None).unwrap()
    }

    fn random_state(sys: &PairSystem, seed: usize) -> PairWavefunction {
        let c: Vec<f64> = (0..sys.n2())
            .map(|k| (((k + 1) * (seed + 3)) as f64 * 0.7).sin())
            .collect();
        let n = sys.gram.quad_form(&c).sqrt();
        PairWavefunction::normalized(c.iter().map(|x| x / n).collect())
    }

    #[test]
    fn single_state_is_returned() {
        let sys = small_system();
        let psi = random_state(&sys, 1);
        let (out, rank) = gram_orthonormalize(std::slice::from_ref(&psi), &sys.gram).unwrap();
        assert_eq!(rank, 1);
        for (a, b) in out[0].coeffs.iter().zip(&psi.coeffs) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn duplicates_collapse() {
        let sys = small_system();
        let psi = random_state(&sys, 1);
        let (_, rank) = gram_orthonormalize(&[psi.clone(), psi], &sys.gram).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn tiny_perturbation_is_below_cutoff() {
        // Gram eigenvalue of the difference direction is ~1e-28, far below 1e-10
        let sys = small_system();
        let psi = random_state(&sys, 1);
        let phi = random_state(&sys, 2);
        let near: Vec<f64> = psi.coeffs.iter().zip(&phi.coeffs).map(|(a, b)| a + 1e-14 * b).collect();
        let (_, rank) = gram_orthonormalize(&[psi, PairWavefunction::new(near)], &sys.gram).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn output_is_g_orthonormal() {
        let sys = small_system();
        let pool: Vec<_> = (0..5).map(|s| random_state(&sys, s)).collect();
        let (out, rank) = gram_orthonormalize(&pool, &sys.gram).unwrap();
        assert_eq!(rank, 5);
        let refs: Vec<&[f64]> = out.iter().map(|p| p.coeffs.as_slice()).collect();
        let s = sys.gram.projected(&refs);
        assert!((s - DMatrix::identity(5, 5)).amax() < 1e-13);
    }

    #[test]
    fn zero_pool_is_error() {
        let sys = small_system();
        let z = PairWavefunction::new(vec![0.0; sys.n2()]);
        assert!(gram_orthonormalize(&[z], &sys.gram).is_err());
        assert!(gram_orthonormalize(&[], &sys.gram).is_err());
    }
}
