//! Two-body interaction `w(x - y)` on the wedge space.
//!
//! Element pairs `(e, f)` with `|e - f| >= 2` are integrated in the product
//! basis with tensor Gauss rules. Pairs touching the diagonal are integrated
//! directly against antisymmetrized basis functions, whose products vanish on
//! `x = y`; this keeps the Coulomb kernel integrable. Same-element cells are
//! split along the diagonal into two collapsed-Gauss triangles and
//! corner-adjacent cells use a Duffy map from the shared corner, so the kernel
//! is never evaluated at `r = 0`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::basis::PairBasis;
use super::operator::{stencil_columns, PairOperator};
use crate::error::{Error, Result};
use crate::fem1d::Mesh1D;
use crate::quadrature::GaussRule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `1 / sqrt(r^2 + eps^2)`.
    SoftCoulomb { eps: f64 },
    /// `1 / |r|`.
    Coulomb,
    /// `w ≡ c`; only useful for testing normalization.
    Constant(f64),
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::SoftCoulomb { eps } if !(eps > 0.0 && eps.is_finite()) => Err(Error::InvalidArgument(format!(
                "softcore eps must be positive, got {eps}"
            ))),
            Kernel::Constant(c) if !c.is_finite() => Err(Error::NonFinite(format!("constant kernel {c}"))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Kernel::SoftCoulomb { eps } => 1.0 / (r * r + eps * eps).sqrt(),
            Kernel::Coulomb => 1.0 / r.abs(),
            Kernel::Constant(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::SoftCoulomb { .. } => "softcore",
            Kernel::Coulomb => "exact",
            Kernel::Constant(_) => "constant",
        }
    }
}

/// Product-basis band tensor: `T[(a, da), (b, db)] = ∫∫ φ_a φ_{a+da}(x) w(x-y) φ_b φ_{b+db}(y)`.
struct BandTensor {
    n1: usize,
    data: Vec<f64>,
}

impl BandTensor {
    fn zeros(n1: usize) -> Self {
        Self {
            n1,
            data: vec![0.0; 4 * n1 * n1],
        }
    }

    #[inline]
    fn slot(&self, a: usize, da: usize, b: usize, db: usize) -> usize {
        ((a * 2 + da) * self.n1 + b) * 2 + db
    }

    /// `⟨φ_i⊗φ_j | w | φ_k⊗φ_l⟩` restricted to the cells this tensor covers.
    #[inline]
    fn prod(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let dx = i.abs_diff(k);
        let dy = j.abs_diff(l);
        if dx > 1 || dy > 1 {
            return 0.0;
        }
        self.data[self.slot(i.min(k), dx, j.min(l), dy)]
    }
}

pub fn assemble_interaction(mesh: &Mesh1D, basis: &PairBasis, kernel: Kernel) -> Result<PairOperator> {
    kernel.validate()?;
    let d = mesh.intervals();
    let far = far_field_tensor(mesh, kernel);
    let near = near_field_entries(mesh, basis, kernel);

    let mut entries = Vec::new();
    for (r, (i, j)) in basis.pairs().enumerate() {
        for c in stencil_columns(basis, i, j) {
            if c < r {
                continue;
            }
            let (k, l) = basis.pair(c);
            let v = far.prod(i, j, k, l) - far.prod(i, j, l, k);
            if v != 0.0 {
                entries.push((r, c, v));
            }
        }
    }
    entries.extend(near.into_iter().map(|((r, c), v)| (r, c, v)));
    debug_assert!(d >= 3);
    Ok(PairOperator::from_upper(basis.n2(), entries))
}

fn far_order(kernel: Kernel, gap: usize) -> usize {
    match kernel {
        Kernel::Coulomb if gap <= 4 => 8,
        Kernel::Coulomb => 4,
        _ => 4,
    }
}

fn far_field_tensor(mesh: &Mesh1D, kernel: Kernel) -> BandTensor {
    let d = mesh.intervals();
    let h = mesh.h();
    let rules: Vec<GaussRule> = (0..=8).map(|n| GaussRule::new(n.max(1))).collect();
    // local integrals for every far cell, computed per x-element in parallel
    let locals: Vec<Vec<(usize, [[f64; 3]; 3])>> = (0..d)
        .into_par_iter()
        .map(|e| {
            let (xa, _) = mesh.element(e);
            let mut out = Vec::new();
            for f in 0..d {
                if e.abs_diff(f) < 2 {
                    continue;
                }
                let (ya, _) = mesh.element(f);
                let rule = &rules[far_order(kernel, e.abs_diff(f))];
                let mut loc = [[0.0; 3]; 3];
                for (&s, &ws) in rule.points.iter().zip(&rule.weights) {
                    let x = xa + h * s;
                    let px = [(1.0 - s) * (1.0 - s), (1.0 - s) * s, s * s];
                    for (&t, &wt) in rule.points.iter().zip(&rule.weights) {
                        let y = ya + h * t;
                        let py = [(1.0 - t) * (1.0 - t), (1.0 - t) * t, t * t];
                        let wk = ws * wt * h * h * kernel.eval(x - y);
                        for a in 0..3 {
                            for b in 0..3 {
                                loc[a][b] += wk * px[a] * py[b];
                            }
                        }
                    }
                }
                out.push((f, loc));
            }
            out
        })
        .collect();

    let mut tensor = BandTensor::zeros(mesh.n_interior());
    for (e, row) in locals.into_iter().enumerate() {
        let xs = local_slots(mesh, e);
        for (f, loc) in row {
            let ys = local_slots(mesh, f);
            for (a, xa) in xs.iter().enumerate() {
                let Some((ia, da)) = *xa else { continue };
                for (b, yb) in ys.iter().enumerate() {
                    let Some((jb, db)) = *yb else { continue };
                    let slot = tensor.slot(ia, da, jb, db);
                    tensor.data[slot] += loc[a][b];
                }
            }
        }
    }
    tensor
}

/// Band slots of the local products `LL`, `LR`, `RR` on element `e`.
fn local_slots(mesh: &Mesh1D, e: usize) -> [Option<(usize, usize)>; 3] {
    let [l, r] = mesh.element_dofs(e);
    [
        l.map(|i| (i, 0)),
        match (l, r) {
            (Some(i), Some(_)) => Some((i, 1)),
            _ => None,
        },
        r.map(|j| (j, 0)),
    ]
}

/// Quadrature points `(x, y, weight)` over the cell `e × f`, `|e - f| <= 1`.
fn near_cell_points(mesh: &Mesh1D, e: usize, f: usize, rule: &GaussRule) -> Vec<(f64, f64, f64)> {
    let h = mesh.h();
    let (xa, _) = mesh.element(e);
    let (ya, _) = mesh.element(f);
    let mut pts = Vec::with_capacity(2 * rule.len() * rule.len());
    if e == f {
        // two triangles t > s and s > t, collapsed toward the origin corner
        for (&u, &wu) in rule.points.iter().zip(&rule.weights) {
            for (&v, &wv) in rule.points.iter().zip(&rule.weights) {
                let w = wu * wv * u * h * h;
                let (big, small) = (u, u * v);
                pts.push((xa + h * small, ya + h * big, w));
                pts.push((xa + h * big, ya + h * small, w));
            }
        }
    } else {
        // shared corner c; s = distance of x from c, t = distance of y from c
        let c = if f == e + 1 {
            mesh.element(e).1
        } else {
            mesh.element(e).0
        };
        let sx = if f == e + 1 { -1.0 } else { 1.0 };
        for (&u, &wu) in rule.points.iter().zip(&rule.weights) {
            for (&v, &wv) in rule.points.iter().zip(&rule.weights) {
                let w = wu * wv * u * h * h;
                let (big, small) = (u * h, u * v * h);
                pts.push((c + sx * big, c - sx * small, w));
                pts.push((c + sx * small, c - sx * big, w));
            }
        }
        let _ = (xa, ya);
    }
    pts
}

fn hat(mesh: &Mesh1D, i: usize, x: f64) -> f64 {
    (1.0 - (x - mesh.interior_node(i)).abs() / mesh.h()).max(0.0)
}

fn near_field_entries(mesh: &Mesh1D, basis: &PairBasis, kernel: Kernel) -> BTreeMap<(usize, usize), f64> {
    let d = mesh.intervals();
    let order = match kernel {
        Kernel::SoftCoulomb { eps } if eps < mesh.h() => 16,
        _ => 8,
    };
    let rule = GaussRule::new(order);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in 0..d {
        for f in e.saturating_sub(1)..(e + 2).min(d) {
            let de: Vec<usize> = mesh.element_dofs(e).into_iter().flatten().collect();
            let df: Vec<usize> = mesh.element_dofs(f).into_iter().flatten().collect();
            // wedge pairs with a non-zero restriction to this cell
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            for &p in &de {
                for &q in &df {
                    if p != q {
                        pairs.push((p.min(q), p.max(q)));
                    }
                }
            }
            pairs.sort_unstable();
            pairs.dedup();
            if pairs.is_empty() {
                continue;
            }
            let mut local = vec![0.0; pairs.len() * pairs.len()];
            let mut vals = vec![0.0; pairs.len()];
            for (x, y, w) in near_cell_points(mesh, e, f, &rule) {
                let wk = w * kernel.eval(x - y);
                for (a, &(p, q)) in pairs.iter().enumerate() {
                    vals[a] = s * (hat(mesh, p, x) * hat(mesh, q, y) - hat(mesh, q, x) * hat(mesh, p, y));
                }
                for a in 0..pairs.len() {
                    for b in a..pairs.len() {
                        local[a * pairs.len() + b] += wk * vals[a] * vals[b];
                    }
                }
            }
            for a in 0..pairs.len() {
                let ra = basis.index(pairs[a].0, pairs[a].1);
                for b in a..pairs.len() {
                    let rb = basis.index(pairs[b].0, pairs[b].1);
                    let key = (ra.min(rb), ra.max(rb));
                    *acc.entry(key).or_insert(0.0) += local[a * pairs.len() + b];
                }
            }
        }
    }
    acc
}
