//! Uniform P1 finite elements on `(-L, L)` with homogeneous Dirichlet conditions.
//!
//! Only interior degrees of freedom are stored: interior index `i` refers to
//! the hat function centred at node `i + 1`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    half_width: f64,
    intervals: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(half_width: f64, intervals: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if intervals < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 intervals, got {intervals}"
            )));
        }
        let h = 2.0 * half_width / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|k| -half_width + k as f64 * h).collect();
        nodes[intervals] = half_width;
        Ok(Self {
            half_width,
            intervals,
            h,
            nodes,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of interior degrees of freedom, `D - 1`.
    pub fn n_interior(&self) -> usize {
        self.intervals - 1
    }

    pub fn interior_node(&self, i: usize) -> f64 {
        self.nodes[i + 1]
    }

    /// Endpoints of element `e`, `0 <= e < D`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Interior DOF indices of the left and right node of element `e`.
    pub fn element_dofs(&self, e: usize) -> [Option<usize>; 2] {
        let left = if e >= 1 { Some(e - 1) } else { None };
        let right = if e + 1 < self.intervals { Some(e) } else { None };
        [left, right]
    }

    /// Element containing `x` (clamped to the domain).
    pub fn locate(&self, x: f64) -> usize {
        let t = ((x + self.half_width) / self.h).floor();
        (t.max(0.0) as usize).min(self.intervals - 1)
    }

    /// Evaluates the P1 function with interior nodal values `u` at `x`.
    pub fn eval(&self, u: &[f64], x: f64) -> f64 {
        let e = self.locate(x);
        let (a, _) = self.element(e);
        let t = (x - a) / self.h;
        let [l, r] = self.element_dofs(e);
        let ul = l.map_or(0.0, |i| u[i]);
        let ur = r.map_or(0.0, |i| u[i]);
        ul * (1.0 - t) + ur * t
    }
}

/// Symmetric tridiagonal bilinear form on the interior hat functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiagSym {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TriDiagSym {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d * s).collect(),
            off: self.off.iter().map(|d| d * s).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

pub fn assemble_mass(mesh: &Mesh1D) -> TriDiagSym {
    let n = mesh.n_interior();
    let h = mesh.h();
    TriDiagSym {
        diag: vec![2.0 * h / 3.0; n],
        off: vec![h / 6.0; n - 1],
    }
}

/// Raw stiffness `∫ φ_i' φ_j'`; the factor 1/2 of the kinetic operator is applied later.
pub fn assemble_stiffness(mesh: &Mesh1D) -> TriDiagSym {
    let n = mesh.n_interior();
    let h = mesh.h();
    TriDiagSym {
        diag: vec![2.0 / h; n],
        off: vec![-1.0 / h; n - 1],
    }
}

/// Galerkin form of `∫ v φ_i φ_j` using 4-point Gauss per element.
///
/// Elements are additionally split at every point of `breakpoints` lying in
/// their interior, so the result is exact for any `v` that is linear between
/// consecutive breakpoints and mesh nodes.
pub fn assemble_weighted_mass<F>(mesh: &Mesh1D, v: F, breakpoints: &[f64]) -> Result<TriDiagSym>
where
    F: Fn(f64) -> f64,
{
    let rule = GaussRule::new(4);
    let n = mesh.n_interior();
    let mut out = TriDiagSym::zeros(n);
    let mut sorted: Vec<f64> = breakpoints.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    for e in 0..mesh.intervals() {
        let (a, b) = mesh.element(e);
        let h = b - a;
        let mut ll = 0.0;
        let mut lr = 0.0;
        let mut rr = 0.0;
        for (s0, s1) in split_interval(a, b, &sorted) {
            for (x, w) in rule.on(s0, s1) {
                let vx = v(x);
                if !vx.is_finite() {
                    return Err(Error::NonFinite(format!("potential at x = {x} in element {e}")));
                }
                let t = (x - a) / h;
                let pl = 1.0 - t;
                let pr = t;
                ll += w * vx * pl * pl;
                lr += w * vx * pl * pr;
                rr += w * vx * pr * pr;
            }
        }
        let [l, r] = mesh.element_dofs(e);
        if let Some(i) = l {
            out.diag[i] += ll;
        }
        if let Some(j) = r {
            out.diag[j] += rr;
        }
        if let (Some(i), Some(_)) = (l, r) {
            out.off[i] += lr;
        }
    }
    Ok(out)
}

/// Sub-intervals of `[a, b]` cut at the sorted breakpoints strictly inside it.
pub(crate) fn split_interval(a: f64, b: f64, sorted: &[f64]) -> Vec<(f64, f64)> {
    let tol = 1e-12 * (b - a);
    let start = sorted.partition_point(|&p| p <= a + tol);
    let mut pieces = Vec::new();
    let mut lo = a;
    for &p in &sorted[start..] {
        if p >= b - tol {
            break;
        }
        pieces.push((lo, p));
        lo = p;
    }
    pieces.push((lo, b));
    pieces
}

/// Nodal interpolant on interior nodes; boundary values of `f` are discarded.
pub fn interpolate<F>(mesh: &Mesh1D, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    (0..mesh.n_interior())
        .map(|i| {
            let x = mesh.interior_node(i);
            let fx = f(x);
            if fx.is_finite() {
                Ok(fx)
            } else {
                Err(Error::NonFinite(format!("f({x})")))
            }
        })
        .collect()
}

/// A function that is quadratic on every mesh element.
///
/// On element `e` with local coordinate `t ∈ [0, 1]` the value is
/// `c0 (1-t)^2 + c1 2t(1-t) + c2 t^2` (Bernstein form), so `c0` and `c2` are
/// the values at the element endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    mesh: Mesh1D,
    coeffs: Vec<[f64; 3]>,
}

impl PiecewiseQuadratic {
    pub fn new(mesh: Mesh1D, coeffs: Vec<[f64; 3]>) -> Result<Self> {
        if coeffs.len() != mesh.intervals() {
            return Err(Error::DimensionMismatch(format!(
                "{} element coefficient triples for {} elements",
                coeffs.len(),
                mesh.intervals()
            )));
        }
        Ok(Self { mesh, coeffs })
    }

    /// Continuous piecewise-linear function from values at all `D + 1` nodes.
    pub fn from_nodal(mesh: Mesh1D, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.intervals() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} nodal values for {} nodes",
                values.len(),
                mesh.intervals() + 1
            )));
        }
        let coeffs = values.windows(2).map(|w| [w[0], 0.5 * (w[0] + w[1]), w[1]]).collect();
        Ok(Self { mesh, coeffs })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let e = self.mesh.locate(x);
        let (a, _) = self.mesh.element(e);
        let t = (x - a) / self.mesh.h();
        bernstein(&self.coeffs[e], t)
    }

    pub fn integral(&self) -> f64 {
        // ∫ of each Bernstein basis function over [0,1] is 1/3
        let h = self.mesh.h();
        self.coeffs.iter().map(|c| h * (c[0] + c[1] + c[2]) / 3.0).sum()
    }

    /// `∫ g ρ` where `g` is linear between consecutive `breakpoints`; exact.
    pub fn integrate_against<F>(&self, g: F, breakpoints: &[f64]) -> f64
    where
        F: Fn(f64) -> f64,
    {
        let rule = GaussRule::new(2);
        let h = self.mesh.h();
        let mut total = 0.0;
        for (e, c) in self.coeffs.iter().enumerate() {
            let (a, b) = self.mesh.element(e);
            for (s0, s1) in split_interval(a, b, breakpoints) {
                for (x, w) in rule.on(s0, s1) {
                    total += w * g(x) * bernstein(c, (x - a) / h);
                }
            }
        }
        total
    }

    /// Smallest value over the Bernstein hull; a lower bound of the minimum.
    pub fn min_coefficient(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Values at all `D + 1` mesh nodes.
    pub fn nodal_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.coeffs.iter().map(|c| c[0]).collect();
        v.push(self.coeffs.last().map_or(0.0, |c| c[2]));
        v
    }
}

pub(crate) fn bernstein(c: &[f64; 3], t: f64) -> f64 {
    let s = 1.0 - t;
    c[0] * s * s + c[1] * 2.0 * t * s + c[2] * t * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_benchmark_setting() {
        let m = Mesh1D::new(10.0, 100).unwrap();
        assert_relative_eq!(m.h(), 0.2, epsilon = 1e-15);
        assert_eq!(m.n_interior(), 99);
        assert_eq!(m.nodes()[0], -10.0);
        assert_eq!(m.nodes()[100], 10.0);
        assert!(m.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mesh_small_nodes() {
        let m = Mesh1D::new(1.0, 4).unwrap();
        assert_eq!(m.nodes(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn mesh_rejects_too_few_intervals() {
        assert!(Mesh1D::new(10.0, 2).is_err());
        assert!(Mesh1D::new(-1.0, 10).is_err());
    }

    #[test]
    fn mass_entries() {
        let m = Mesh1D::new(10.0, 100).unwrap();
        let mass = assemble_mass(&m);
        assert_relative_eq!(mass.diag[0], 0.2 * 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(mass.off[0], 0.2 / 6.0, epsilon = 1e-15);
        for i in 1..m.n_interior() - 1 {
            let row = mass.get(i, i - 1) + mass.get(i, i) + mass.get(i, i + 1);
            assert_relative_eq!(row, m.h(), epsilon = 1e-14);
        }
        let m = Mesh1D::new(1.0, 4).unwrap();
        let mass = assemble_mass(&m);
        assert_relative_eq!(mass.diag[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(mass.off[1], 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn stiffness_entries() {
        let m = Mesh1D::new(10.0, 100).unwrap();
        let k = assemble_stiffness(&m);
        assert_relative_eq!(k.diag[3], 10.0, epsilon = 1e-12);
        assert_relative_eq!(k.off[3], -5.0, epsilon = 1e-12);
        let ones = vec![1.0; m.n_interior()];
        // only the two boundary rows see a non-cancelling stencil
        let direct: f64 = (0..m.n_interior())
            .flat_map(|i| (0..m.n_interior()).map(move |j| (i, j)))
            .map(|(i, j)| k.get(i, j))
            .sum();
        assert_relative_eq!(k.quad_form(&ones), 2.0 / m.h(), epsilon = 1e-10);
        assert_relative_eq!(direct, 2.0 / m.h(), epsilon = 1e-10);
        let m = Mesh1D::new(3.0, 6).unwrap();
        let k = assemble_stiffness(&m);
        assert_eq!((k.diag[0], k.off[0]), (2.0, -1.0));
    }

    #[test]
    fn weighted_mass_identities() {
        let m = Mesh1D::new(10.0, 100).unwrap();
        let mass = assemble_mass(&m);
        let w1 = assemble_weighted_mass(&m, |_| 1.0, &[]).unwrap();
        let w0 = assemble_weighted_mass(&m, |_| 0.0, &[]).unwrap();
        let w3 = assemble_weighted_mass(&m, |_| -3.5, &[]).unwrap();
        for i in 0..m.n_interior() {
            assert_relative_eq!(w1.diag[i], mass.diag[i], epsilon = 1e-14);
            assert_eq!(w0.diag[i], 0.0);
            assert_relative_eq!(w3.diag[i], -3.5 * mass.diag[i], epsilon = 1e-13);
        }
        for i in 0..m.n_interior() - 1 {
            assert_relative_eq!(w1.off[i], mass.off[i], epsilon = 1e-14);
            assert_relative_eq!(w3.off[i], -3.5 * mass.off[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn weighted_mass_linear_potential() {
        // ∫ x φ_i^2 over the two elements around x_i = (2h/3) x_i by symmetry
        let m = Mesh1D::new(10.0, 100).unwrap();
        let w = assemble_weighted_mass(&m, |x| x, &[]).unwrap();
        let h = m.h();
        for i in 0..m.n_interior() {
            let xi = m.interior_node(i);
            assert_relative_eq!(w.diag[i], 2.0 * h / 3.0 * xi, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_mass_rejects_nan() {
        let m = Mesh1D::new(1.0, 4).unwrap();
        let err = assemble_weighted_mass(&m, |x| if x > 0.6 { f64::NAN } else { 1.0 }, &[]);
        let msg = err.unwrap_err().to_string();
        assert!(msg.contains("element 3"), "{msg}");
    }

    #[test]
    fn weighted_mass_breakpoints_make_kinked_potential_exact() {
        // |x - 0.13| has a kink inside an element; splitting there is exact
        let m = Mesh1D::new(1.0, 4).unwrap();
        let v = |x: f64| (x - 0.13).abs();
        let w = assemble_weighted_mass(&m, v, &[0.13]).unwrap();
        // brute force with a very fine midpoint rule
        let n = 200_000;
        let mut diag1 = 0.0;
        for k in 0..n {
            let x = -1.0 + 2.0 * (k as f64 + 0.5) / n as f64;
            let phi = (1.0 - (x - m.interior_node(1)).abs() / m.h()).max(0.0);
            diag1 += v(x) * phi * phi * 2.0 / n as f64;
        }
        assert_relative_eq!(w.diag[1], diag1, epsilon = 1e-9);
    }

    #[test]
    fn interpolate_hat_density() {
        let m = Mesh1D::new(10.0, 100).unwrap();
        let u = interpolate(&m, |_| 1.0).unwrap();
        assert_eq!(u, vec![1.0; 99]);
        let u = interpolate(&m, |x| 1.0 - x.abs() / 10.0).unwrap();
        for (i, ui) in u.iter().enumerate() {
            assert_relative_eq!(*ui, 1.0 - m.interior_node(i).abs() / 10.0, epsilon = 1e-14);
        }
        assert!(interpolate(&m, |x| if x > 5.0 { f64::INFINITY } else { 0.0 }).is_err());
    }

    #[test]
    fn mass_and_stiffness_are_spd() {
        let m = Mesh1D::new(2.0, 12).unwrap();
        for form in [assemble_mass(&m), assemble_stiffness(&m)] {
            let eig = form.to_dense().symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    fn l2_interp_error(d: usize) -> f64 {
        let m = Mesh1D::new(1.0, d).unwrap();
        let f = |x: f64| (std::f64::consts::PI * x).cos() * (1.0 - x * x);
        let u = interpolate(&m, f).unwrap();
        let rule = GaussRule::new(6);
        let mut err = 0.0;
        for e in 0..m.intervals() {
            let (a, b) = m.element(e);
            for (x, w) in rule.on(a, b) {
                let diff = f(x) - m.eval(&u, x);
                err += w * diff * diff;
            }
        }
        err.sqrt()
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let e1 = l2_interp_error(20);
        let e2 = l2_interp_error(40);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn piecewise_quadratic_integrals() {
        let m = Mesh1D::new(1.0, 4).unwrap();
        let nodal = [0.0, 1.0, 2.0, 1.0, 0.0];
        let p = PiecewiseQuadratic::from_nodal(m.clone(), &nodal).unwrap();
        assert_relative_eq!(p.integral(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.eval(0.25), 1.5, epsilon = 1e-15);
        let xint = p.integrate_against(|x| x + 1.0, &[]);
        assert_relative_eq!(xint, 2.0, epsilon = 1e-14);
        assert_eq!(p.nodal_values(), nodal.to_vec());
    }

    #[test]
    fn split_interval_cuts_inside_only() {
        let pieces = split_interval(0.0, 1.0, &[-1.0, 0.0, 0.25, 0.5, 1.0, 2.0]);
        assert_eq!(pieces, vec![(0.0, 0.25), (0.25, 0.5), (0.5, 1.0)]);
    }
}
