use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::basis::PairBasis;
use crate::error::{Error, Result};
use crate::fem1d::TriDiagSym;

/// Sparse symmetric bilinear form on the wedge space, stored as full CSR.
///
/// Only the upper triangle is ever computed; the lower triangle is a mirror,
/// so symmetry holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl PairOperator {
    /// Builds from upper-triangle entries `(r, c, v)` with `r <= c`; duplicates are summed.
    pub fn from_upper(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in entries {
            debug_assert!(r <= c && c < n);
            *upper.entry((r, c)).or_insert(0.0) += v;
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(r, c), &v) in &upper {
            rows[r].push((c, v));
            if r != c {
                rows[c].push((r, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, std::iter::empty())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Largest `|r - c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|r| {
                let mut s = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    s += self.vals[k] * y[self.cols[k]];
                }
                x[r] * s
            })
            .sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &PairOperator, alpha: f64) -> Result<PairOperator> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "operator sizes {} and {}",
                self.n, other.n
            )));
        }
        let entries = (0..self.n).flat_map(|r| {
            self.row(r)
                .filter(move |&(c, _)| c >= r)
                .map(move |(c, v)| (r, c, v))
                .chain(
                    other
                        .row(r)
                        .filter(move |&(c, _)| c >= r)
                        .map(move |(c, v)| (r, c, alpha * v)),
                )
        });
        Ok(Self::from_upper(self.n, entries))
    }

    /// Dense `K × K` matrix `⟨ψ_k | O | ψ_l⟩` for a set of coefficient vectors.
    pub fn projected(&self, vectors: &[&[f64]]) -> DMatrix<f64> {
        let k = vectors.len();
        let images: Vec<Vec<f64>> = vectors.iter().map(|v| self.matvec(v)).collect();
        let mut out = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = vectors[a].iter().zip(&images[b]).map(|(x, y)| x * y).sum();
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Candidate wedge columns coupled to row `(i, j)` by a nearest-neighbour
/// tensor stencil, as sorted linear indices.
pub(crate) fn stencil_columns(basis: &PairBasis, i: usize, j: usize) -> Vec<usize> {
    let n1 = basis.n1() as isize;
    let mut cols = Vec::with_capacity(18);
    for di in -1..=1isize {
        for dj in -1..=1isize {
            let a = i as isize + di;
            let b = j as isize + dj;
            if a < 0 || b < 0 || a >= n1 || b >= n1 || a == b {
                continue;
            }
            let (k, l) = if a < b { (a, b) } else { (b, a) };
            cols.push(basis.index(k as usize, l as usize));
        }
    }
    cols.sort_unstable();
    cols.dedup();
    cols
}

/// Assembles the wedge form of a particle-exchange-symmetric two-body operator
/// given its product-basis entries `prod(i, j, k, l) = ⟨φ_i⊗φ_j | O | φ_k⊗φ_l⟩`.
pub(crate) fn assemble_from_product<F>(basis: &PairBasis, prod: F) -> PairOperator
where
    F: Fn(usize, usize, usize, usize) -> f64,
{
    let mut entries = Vec::new();
    for (r, (i, j)) in basis.pairs().enumerate() {
        for c in stencil_columns(basis, i, j) {
            if c < r {
                continue;
            }
            let (k, l) = basis.pair(c);
            let v = prod(i, j, k, l) - prod(i, j, l, k);
            if v != 0.0 {
                entries.push((r, c, v));
            }
        }
    }
    PairOperator::from_upper(basis.n2(), entries)
}

/// Gram form `G[(ij),(kl)] = M_ik M_jl - M_il M_jk`.
pub fn assemble_pair_gram(basis: &PairBasis, mass: &TriDiagSym) -> PairOperator {
    assemble_from_product(basis, |i, j, k, l| mass.get(i, k) * mass.get(j, l))
}

/// Two-particle kinetic form of `-½Δ` from the raw one-body stiffness.
pub fn assemble_pair_kinetic(basis: &PairBasis, stiffness: &TriDiagSym, mass: &TriDiagSym) -> PairOperator {
    assemble_from_product(basis, |i, j, k, l| {
        0.5 * (stiffness.get(i, k) * mass.get(j, l) + mass.get(i, k) * stiffness.get(j, l))
    })
}

/// Form of `v(x_1) + v(x_2)` given the weighted mass of `v`.
pub fn assemble_pair_onebody(basis: &PairBasis, vmass: &TriDiagSym, mass: &TriDiagSym) -> PairOperator {
    assemble_from_product(basis, |i, j, k, l| {
        vmass.get(i, k) * mass.get(j, l) + mass.get(i, k) * vmass.get(j, l)
    })
}
