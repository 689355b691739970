use nalgebra::DMatrix;

use super::basis::{PairBasis, PairWavefunction};
use crate::error::{Error, Result};
use crate::fem1d::{Mesh1D, PiecewiseQuadratic, TriDiagSym};

/// Precomputed one-particle factors of a wedge state: `Â` and `Â M`.
pub struct DensityFactor {
    a: DMatrix<f64>,
    am: DMatrix<f64>,
}

impl DensityFactor {
    pub fn new(basis: &PairBasis, mass: &TriDiagSym, psi: &PairWavefunction) -> Result<Self> {
        if psi.len() != basis.n2() {
            return Err(Error::DimensionMismatch(format!(
                "wavefunction has {} coefficients, basis has {}",
                psi.len(),
                basis.n2()
            )));
        }
        let a = basis.antisymmetric_matrix(&psi.coeffs);
        let n = basis.n1();
        let mut am = DMatrix::zeros(n, n);
        for j in 0..n {
            for r in 0..n {
                let mut s = mass.diag[j] * a[(r, j)];
                if j > 0 {
                    s += mass.off[j - 1] * a[(r, j - 1)];
                }
                if j + 1 < n {
                    s += mass.off[j] * a[(r, j + 1)];
                }
                am[(r, j)] = s;
            }
        }
        Ok(Self { a, am })
    }
}

/// `P_ik = Σ_jl Â_ij M_jl B̂_kl` on the tridiagonal band, symmetrized.
fn reduced_band(fa: &DensityFactor, fb: &DensityFactor) -> (Vec<f64>, Vec<f64>) {
    let n = fa.a.nrows();
    let dot =
        |x: &DMatrix<f64>, i: usize, y: &DMatrix<f64>, k: usize| -> f64 { (0..n).map(|j| x[(i, j)] * y[(k, j)]).sum() };
    let diag: Vec<f64> = (0..n).map(|i| dot(&fa.a, i, &fb.am, i)).collect();
    let off: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| 0.5 * (dot(&fa.a, i, &fb.am, i + 1) + dot(&fa.a, i + 1, &fb.am, i)))
        .collect();
    (diag, off)
}

/// Cross density `ρ_ab(x) = 2 ∫ Ψ_a(x, y) Ψ_b(x, y) dy` as an exact per-element quadratic.
pub fn cross_density(mesh: &Mesh1D, fa: &DensityFactor, fb: &DensityFactor) -> PiecewiseQuadratic {
    let (diag, off) = reduced_band(fa, fb);
    let coeffs = (0..mesh.intervals())
        .map(|e| {
            let [l, r] = mesh.element_dofs(e);
            let c0 = l.map_or(0.0, |i| 2.0 * diag[i]);
            let c2 = r.map_or(0.0, |j| 2.0 * diag[j]);
            let c1 = match (l, r) {
                (Some(i), Some(_)) => 2.0 * off[i],
                _ => 0.0,
            };
            [c0, c1, c2]
        })
        .collect();
    PiecewiseQuadratic::new(mesh.clone(), coeffs).expect("one coefficient triple per element")
}

pub fn pair_density(
    mesh: &Mesh1D,
    basis: &PairBasis,
    mass: &TriDiagSym,
    a: &PairWavefunction,
    b: &PairWavefunction,
) -> Result<PiecewiseQuadratic> {
    let fa = DensityFactor::new(basis, mass, a)?;
    let fb = DensityFactor::new(basis, mass, b)?;
    Ok(cross_density(mesh, &fa, &fb))
}

/// All cross densities `ρ_kl`, `k <= l`, of a pool, row-major over the upper triangle.
pub fn pool_cross_densities(
    mesh: &Mesh1D,
    basis: &PairBasis,
    mass: &TriDiagSym,
    pool: &[PairWavefunction],
) -> Result<Vec<PiecewiseQuadratic>> {
    use rayon::prelude::*;
    let factors = pool
        .iter()
        .map(|p| DensityFactor::new(basis, mass, p))
        .collect::<Result<Vec<_>>>()?;
    let k = pool.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(a, b)| cross_density(mesh, &factors[a], &factors[b]))
        .collect())
}
