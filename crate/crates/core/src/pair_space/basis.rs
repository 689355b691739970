use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Index map between ordered one-body pairs `i < j` and wedge coordinates.
///
/// Pairs are enumerated row by row: `(0,1), (0,2), …, (0,n1-1), (1,2), …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBasis {
    n1: usize,
    n2: usize,
    row_start: Vec<usize>,
}

impl PairBasis {
    pub fn new(n1: usize) -> Result<Self> {
        if n1 < 2 {
            return Err(Error::InvalidArgument(format!(
                "wedge space needs at least 2 one-body functions, got {n1}"
            )));
        }
        let mut row_start = Vec::with_capacity(n1);
        let mut acc = 0;
        for i in 0..n1 {
            row_start.push(acc);
            acc += n1 - i - 1;
        }
        Ok(Self { n1, n2: acc, row_start })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Linear index of the pair `(i, j)`, `i < j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n1);
        self.row_start[i] + (j - i - 1)
    }

    /// Pair `(i, j)` with `i < j` at linear index `k`.
    pub fn pair(&self, k: usize) -> (usize, usize) {
        let i = self.row_start.partition_point(|&s| s <= k) - 1;
        (i, i + 1 + (k - self.row_start[i]))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n1).flat_map(move |i| ((i + 1)..self.n1).map(move |j| (i, j)))
    }

    /// Antisymmetric `n1 × n1` coefficient matrix `Â` with
    /// `Ψ(x, y) = Σ_{ij} Â_ij φ_i(x) φ_j(y)`.
    pub fn antisymmetric_matrix(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = DMatrix::zeros(self.n1, self.n1);
        for (k, (i, j)) in self.pairs().enumerate() {
            a[(i, j)] = s * coeffs[k];
            a[(j, i)] = -s * coeffs[k];
        }
        a
    }

    /// Wedge coefficients of `u ∧ v`.
    pub fn wedge(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        self.pairs().map(|(i, j)| u[i] * v[j] - u[j] * v[i]).collect()
    }
}

/// A two-fermion state expanded in the wedge basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWavefunction {
    pub coeffs: Vec<f64>,
    pub normalized: bool,
}

impl PairWavefunction {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            normalized: false,
        }
    }

    pub fn normalized(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            normalized: true,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}
