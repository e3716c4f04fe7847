//! Initial data and profiles of the standard test problems.
//!
//! All problems live on `x in [0, 2]` with the default velocity grid
//! (`n_v = 150`, `v in [-15, 15]`). Distributions are cell averages in `x`
//! of moment-matched discrete Maxwellians, taken with the 3-point Gauss rule.

use crate::error::Result;
use crate::imex_bgk::{EpsProfile, KineticField};
use crate::kinetic::{discrete_maxwellian_into, ConservedState, Primitive, VelocityGrid};
use crate::space_fv::{Boundary, SpatialMesh};

pub const X_LO: f64 = 0.0;
pub const X_HI: f64 = 2.0;

pub fn periodic_mesh(n_x: usize) -> Result<SpatialMesh> {
    SpatialMesh::new(n_x, X_LO, X_HI, Boundary::Periodic)
}

/// `rho = 1 + 0.2 sin(pi x)`, `u = 1`, `T = 1 / rho`.
pub fn smooth_primitive(x: f64) -> Primitive {
    let rho = 1.0 + 0.2 * (std::f64::consts::PI * x).sin();
    Primitive::new(rho, 1.0, 1.0 / rho)
}

/// Sum of weighted Maxwellians at each `x`.
fn mixture(
    mesh: SpatialMesh,
    grid: &VelocityGrid,
    parts: impl Fn(f64) -> Vec<(f64, Primitive)>,
) -> Result<KineticField> {
    let mut buf = vec![0.0; grid.n_v()];
    KineticField::from_fn(mesh, grid.clone(), |x, out| {
        out.fill(0.0);
        for (w, p) in parts(x) {
            discrete_maxwellian_into(ConservedState::from(p), grid, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        Ok(())
    })
}

/// `f = M[rho, u, T]` with the smooth fields.
pub fn consistent_initial(n_x: usize, grid: &VelocityGrid) -> Result<KineticField> {
    mixture(periodic_mesh(n_x)?, grid, |x| vec![(1.0, smooth_primitive(x))])
}

/// `f = 0.5 M[rho, u, T] + 0.3 M[rho, -0.5 u, T]`, away from equilibrium
/// at every `x`.
pub fn inconsistent_initial(n_x: usize, grid: &VelocityGrid) -> Result<KineticField> {
    mixture(periodic_mesh(n_x)?, grid, |x| {
        let p = smooth_primitive(x);
        let q = Primitive::new(p.rho, -0.5 * p.u, p.temperature);
        vec![(0.5, p), (0.3, q)]
    })
}

pub const SOD_LEFT: Primitive = Primitive {
    rho: 1.0,
    u: 0.0,
    temperature: 1.0,
};
pub const SOD_RIGHT: Primitive = Primitive {
    rho: 0.125,
    u: 0.0,
    temperature: 0.25,
};

/// Shock tube: equilibrium at `SOD_LEFT` for `x <= 1`, `SOD_RIGHT` beyond,
/// with frozen boundary states.
pub fn sod_initial(n_x: usize, grid: &VelocityGrid) -> Result<KineticField> {
    let mesh = SpatialMesh::new(n_x, X_LO, X_HI, Boundary::DirichletGhost)?;
    let left = crate::kinetic::discrete_maxwellian(ConservedState::from(SOD_LEFT), grid)?;
    let right = crate::kinetic::discrete_maxwellian(ConservedState::from(SOD_RIGHT), grid)?;
    // cell-wise data: the jump sits on a cell face whenever n_x is even
    let n_v = grid.n_v();
    let mut values = vec![0.0; n_x * n_v];
    for j in 0..n_x {
        let src = if mesh.center(j) <= 1.0 { &left } else { &right };
        for k in 0..n_v {
            values[k * n_x + j] = src[k];
        }
    }
    KineticField::new(values, mesh, grid.clone())
}

/// Knudsen profile of the mixed-regime problem: near `eps0` at both ends,
/// about 1.52 at `x = 1`.
pub fn mixed_regime_eps() -> EpsProfile {
    EpsProfile::mixed_regime()
}

/// Uniform equilibrium `(rho, u, T)` on a periodic mesh.
pub fn uniform_equilibrium(n_x: usize, grid: &VelocityGrid, p: Primitive) -> Result<KineticField> {
    let m = crate::kinetic::discrete_maxwellian(ConservedState::from(p), grid)?;
    let mesh = periodic_mesh(n_x)?;
    let mut values = Vec::with_capacity(n_x * grid.n_v());
    for &mk in &m {
        values.extend(std::iter::repeat(mk).take(n_x));
    }
    KineticField::new(values, mesh, grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::primitive_from_conserved;

    #[test]
    fn inconsistent_moments() {
        let grid = VelocityGrid::default();
        let f = inconsistent_initial(40, &grid).unwrap();
        let u = f.cell_moments();
        for (j, uj) in u.iter().enumerate() {
            // density of 0.8 times a cell average of 1 + 0.2 sin(pi x)
            let x0 = f.mesh().center(j) - 0.5 * f.mesh().dx();
            let x1 = x0 + f.mesh().dx();
            let pi = std::f64::consts::PI;
            let exact = 1.0 + 0.2 * ((pi * x0).cos() - (pi * x1).cos()) / (pi * f.mesh().dx());
            assert!((uj.rho - 0.8 * exact).abs() < 1e-7, "{j}");
            // momentum is rho (0.5 - 0.15)
            assert!((uj.m - 0.35 * exact).abs() < 1e-7);
        }
    }

    #[test]
    fn sod_states() {
        let grid = VelocityGrid::default();
        let f = sod_initial(80, &grid).unwrap();
        let u = f.cell_moments();
        let l = primitive_from_conserved(u[0]).unwrap();
        let r = primitive_from_conserved(u[79]).unwrap();
        assert!((l.rho - 1.0).abs() < 1e-12 && (l.temperature - 1.0).abs() < 1e-12);
        assert!((r.rho - 0.125).abs() < 1e-12 && (r.temperature - 0.25).abs() < 1e-12);
        assert!((u[39].rho - 1.0).abs() < 1e-12 && (u[40].rho - 0.125).abs() < 1e-12);
    }
}
