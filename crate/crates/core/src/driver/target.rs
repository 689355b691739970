use std::path::Path;

use crate::error::{Error, Result};
use crate::fem1d::{interpolate, PiecewiseQuadratic};
use crate::pair_space::{PairSystem, PairWavefunction};

/// Target density together with the single state that reproduces it.
#[derive(Debug, Clone)]
pub struct TargetDensity {
    pub rho: PiecewiseQuadratic,
    pub initial: PairWavefunction,
}

/// Tent profile `1 - |x|/L`.
pub fn even_profile(half_width: f64, x: f64) -> f64 {
    1.0 - x.abs() / half_width
}

/// Odd double tent: `1 - |2x + L|/L` on the left half, `|2x - L|/L - 1` on the right.
pub fn odd_profile(half_width: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0 - (2.0 * x + half_width).abs() / half_width
    } else {
        (2.0 * x - half_width).abs() / half_width - 1.0
    }
}

/// The built-in benchmark: the wedge of the normalized interpolants of the
/// even and odd tent profiles, and its density.
pub fn builtin_target(system: &PairSystem) -> Result<TargetDensity> {
    let l = system.mesh.half_width();
    let u = interpolate(&system.mesh, |x| even_profile(l, x))?;
    let v = interpolate(&system.mesh, |x| odd_profile(l, x))?;
    wedge_target(system, u, v)
}

/// Builds a two-orbital state whose density interpolates the given nodal
/// density (all `D + 1` nodes, rescaled to integrate to 2).
///
/// With `F(x) = ½ ∫_{-L}^x ρ` the orbitals `√ρ cos(πF)` and `√ρ sin(πF)` are
/// orthonormal and their squares sum to `ρ`.
pub fn target_from_nodal(system: &PairSystem, values: &[f64]) -> Result<TargetDensity> {
    let mesh = &system.mesh;
    if values.len() != mesh.intervals() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "density has {} values, mesh has {} nodes",
            values.len(),
            mesh.intervals() + 1
        )));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("density value {v} at node {i}")));
    }
    let h = mesh.h();
    let total: f64 = values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("density integrates to zero".into()));
    }
    let rho: Vec<f64> = values.iter().map(|v| 2.0 * v / total).collect();
    let mut cumulative = vec![0.0; rho.len()];
    for i in 1..rho.len() {
        cumulative[i] = cumulative[i - 1] + 0.25 * h * (rho[i - 1] + rho[i]);
    }
    let n1 = mesh.n_interior();
    let u: Vec<f64> = (0..n1)
        .map(|i| rho[i + 1].sqrt() * (std::f64::consts::PI * cumulative[i + 1]).cos())
        .collect();
    let v: Vec<f64> = (0..n1)
        .map(|i| rho[i + 1].sqrt() * (std::f64::consts::PI * cumulative[i + 1]).sin())
        .collect();
    wedge_target(system, u, v)
}

/// Reads nodal density values, one per line. Lines may hold `x, rho` pairs
/// (the last field is used); blank lines, `#` comments and a non-numeric
/// header row are skipped.
pub fn read_density_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .rfind(|t| !t.is_empty())
            .unwrap_or("");
        match last.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() => continue,
            Err(_) => {
                return Err(Error::InvalidArgument(format!(
                    "{}:{}: `{last}` is not a number",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

fn wedge_target(system: &PairSystem, u: Vec<f64>, mut v: Vec<f64>) -> Result<TargetDensity> {
    let m = &system.mass;
    let uu = m.quad_form(&u);
    if !(uu > 0.0) {
        return Err(Error::InvalidArgument("first orbital vanishes on the mesh".into()));
    }
    let uv = m.bilinear(&u, &v);
    for (vi, ui) in v.iter_mut().zip(&u) {
        *vi -= uv / uu * ui;
    }
    let vv = m.quad_form(&v);
    if !(vv > 1e-14 * uu) {
        return Err(Error::InvalidArgument("orbitals are linearly dependent".into()));
    }
    let u: Vec<f64> = u.iter().map(|x| x / uu.sqrt()).collect();
    let v: Vec<f64> = v.iter().map(|x| x / vv.sqrt()).collect();
    let mut psi = system.basis.wedge(&u, &v);
    let norm = system.gram.quad_form(&psi).sqrt();
    psi.iter_mut().for_each(|c| *c /= norm);
    let initial = PairWavefunction::normalized(psi);
    let rho = system.density(&initial, &initial)?;
    Ok(TargetDensity { rho, initial })
}
