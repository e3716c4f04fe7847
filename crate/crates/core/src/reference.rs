//! Validation solvers: an explicit SSP-RK2 kinetic scheme that resolves
//! `eps`, and the kinetic-flux scheme for the Euler limit.

use rayon::prelude::*;

use crate::error::{Error, Result, StateComponent};
use crate::imex_bgk::{nodal_equilibrium, EpsProfile, KineticField};
use crate::kinetic::{discrete_maxwellian_into, moments, ConservedState, Tau, VelocityGrid};
use crate::space_fv::{
    cell_maxwellian_or_average_into, gauss_point_states, transport_rhs_row, Legendre3, RowBc,
    RowScratch, SpatialMesh, SpatialScheme, StateBc, POSITIVITY_CFL,
};
use crate::tableau::TableauPair;

/// Stiffness safety factor: the explicit scheme wants `dt <= THETA * eps_min`.
pub const THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExplicitStepReport {
    pub cfl_exceeded: bool,
    pub stiffness_exceeded: bool,
}

/// Explicit right-hand side `T(f) + tau (M - f) / eps`.
fn explicit_rhs(f: &KineticField, eps: &EpsProfile, tau: &Tau, spatial: SpatialScheme) -> Result<Vec<f64>> {
    let mesh = f.mesh();
    let grid = f.grid();
    let (n_x, n_v) = (mesh.n_x(), grid.n_v());
    let values = f.values();
    let dx = mesh.dx();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(n_x)
        .enumerate()
        .for_each_init(RowScratch::default, |s, (k, o)| {
            let row = &values[k * n_x..(k + 1) * n_x];
            transport_rhs_row(row, &f.row_bc(k), grid.nodes()[k], dx, spatial, s, o);
        });

    let u = f.cell_moments();
    check_admissible(&u)?;
    let upwind = spatial == SpatialScheme::Upwind1;
    if eps.constant().is_none() && !upwind {
        let bcs: Vec<RowBc> = (0..n_v).map(|k| f.row_bc(k)).collect();
        let eq = nodal_equilibrium(values, &u, &bcs, grid)?;
        let mut rate = vec![[0.0; 3]; n_x];
        for j in 0..n_x {
            let xs = mesh.gauss_nodes(j);
            for l in 0..3 {
                rate[j][l] = tau.of_state(eq.states[j][l])? / eps.eval(xs[l]);
            }
        }
        let w = Legendre3::WEIGHTS;
        for k in 0..n_v {
            for j in 0..n_x {
                let g = eq.values[k * n_x + j];
                let mut q = 0.0;
                for l in 0..3 {
                    q += w[l] * rate[j][l] * (eq.nodal[(3 * j + l) * n_v + k] - g[l]);
                }
                out[k * n_x + j] += q;
            }
        }
        return Ok(out);
    }
    let states: Vec<[ConservedState; 3]> = if upwind {
        u.iter().map(|x| [*x; 3]).collect()
    } else {
        gauss_point_states(&u, &f.state_bc())?
    };
    let mut maxw = vec![0.0; n_x * n_v];
    maxw.par_chunks_mut(n_v).enumerate().try_for_each_init(
        || vec![0.0; 3 * n_v],
        |nodal, (j, cell)| -> Result<()> {
            if upwind {
                discrete_maxwellian_into(u[j], grid, cell).map(|_| ())
            } else {
                cell_maxwellian_or_average_into(&states[j], u[j], grid, nodal, cell).map(|_| ())
            }
        },
    )?;
    for j in 0..n_x {
        let r = tau.of_state(u[j])? / eps.eval(mesh.center(j));
        for k in 0..n_v {
            out[k * n_x + j] += r * (maxw[j * n_v + k] - values[k * n_x + j]);
        }
    }
    Ok(out)
}

fn check_admissible(u: &[ConservedState]) -> Result<()> {
    for (cell, x) in u.iter().enumerate() {
        if !(x.rho > 0.0) {
            return Err(Error::InadmissibleCell {
                cell,
                component: StateComponent::Density,
                value: x.rho,
            });
        }
        if !(x.internal_energy() > 0.0) {
            return Err(Error::InadmissibleCell {
                cell,
                component: StateComponent::InternalEnergy,
                value: x.internal_energy(),
            });
        }
    }
    Ok(())
}

/// Bounds that the explicit scheme should respect at step size `dt`.
pub fn explicit_step_report(mesh: &SpatialMesh, grid: &VelocityGrid, eps: &EpsProfile, dt: f64, spatial: SpatialScheme) -> ExplicitStepReport {
    let cx = match spatial {
        SpatialScheme::Upwind1 => 1.0,
        _ => POSITIVITY_CFL,
    };
    ExplicitStepReport {
        cfl_exceeded: dt > cx * mesh.dx() / grid.max_speed() * (1.0 + 1e-12),
        stiffness_exceeded: dt > THETA * eps.min_on(mesh),
    }
}

/// One Heun step `f1 = f + dt L(f)`, `f^{n+1} = (f + f1 + dt L(f1)) / 2`.
pub fn ssp_rk2_step(
    f: &KineticField,
    dt: f64,
    eps: &EpsProfile,
    tau: &Tau,
    spatial: SpatialScheme,
) -> Result<(KineticField, ExplicitStepReport)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("time step {dt} must be positive")));
    }
    let report = explicit_step_report(f.mesh(), f.grid(), eps, dt, spatial);
    let l0 = explicit_rhs(f, eps, tau, spatial)?;
    let v1: Vec<f64> = f.values().iter().zip(&l0).map(|(a, b)| a + dt * b).collect();
    let f1 = f.with_values(v1);
    let l1 = explicit_rhs(&f1, eps, tau, spatial)?;
    let v2 = f
        .values()
        .iter()
        .zip(f1.values())
        .zip(&l1)
        .map(|((a, b), c)| 0.5 * a + 0.5 * (b + dt * c))
        .collect();
    let mut out = f.with_values(v2);
    out.time = f.time + dt;
    Ok((out, report))
}

/// Repeats [`ssp_rk2_step`] up to `t_end`, shortening the last step. Bound
/// violations are logged once.
pub fn run_ssp_rk2(
    mut f: KineticField,
    dt: f64,
    t_end: f64,
    eps: &EpsProfile,
    tau: &Tau,
    spatial: SpatialScheme,
) -> Result<(KineticField, ExplicitStepReport)> {
    let t0 = f.time;
    let n = ((t_end - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut seen = ExplicitStepReport::default();
    for i in 0..n {
        let t_next = if i + 1 == n { t_end } else { t0 + (i + 1) as f64 * dt };
        let (g, r) = ssp_rk2_step(&f, t_next - f.time, eps, tau, spatial)?;
        if r.stiffness_exceeded && !seen.stiffness_exceeded {
            log::warn!("explicit reference: dt = {dt:e} exceeds {THETA} eps_min");
        }
        if r.cfl_exceeded && !seen.cfl_exceeded {
            log::warn!("explicit reference: dt = {dt:e} exceeds the transport CFL bound");
        }
        seen.cfl_exceeded |= r.cfl_exceeded;
        seen.stiffness_exceeded |= r.stiffness_exceeded;
        f = g;
        f.time = t_next;
    }
    Ok((f, seen))
}

/// `d U_j / dt = <phi T(E[U])_j>`: moments of the transported cell
/// Maxwellians. On a Dirichlet mesh the boundary cells are replicated into
/// the ghost cells.
pub fn kinetic_flux_rhs(
    u: &[ConservedState],
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    spatial: SpatialScheme,
) -> Result<Vec<ConservedState>> {
    let (n_x, n_v) = (mesh.n_x(), grid.n_v());
    if u.len() != n_x {
        return Err(Error::InvalidMesh(format!("expected {n_x} states, got {}", u.len())));
    }
    check_admissible(u)?;
    let dirichlet = mesh.boundary() == crate::space_fv::Boundary::DirichletGhost;
    let state_bc = if dirichlet {
        StateBc::Frozen {
            left: [u[0]; 3],
            right: [u[n_x - 1]; 3],
        }
    } else {
        StateBc::Periodic
    };
    let upwind = spatial == SpatialScheme::Upwind1;
    let states = if upwind {
        u.iter().map(|x| [*x; 3]).collect()
    } else {
        gauss_point_states(u, &state_bc)?
    };
    let mut cells = vec![0.0; n_x * n_v];
    cells.par_chunks_mut(n_v).enumerate().try_for_each_init(
        || vec![0.0; 3 * n_v],
        |nd, (j, c)| -> Result<()> {
            if upwind {
                discrete_maxwellian_into(u[j], grid, c).map(|_| ())
            } else {
                cell_maxwellian_or_average_into(&states[j], u[j], grid, nd, c).map(|_| ())
            }
        },
    )?;
    let (ghost_l, ghost_r) = if dirichlet {
        let mut l = vec![0.0; n_v];
        let mut r = vec![0.0; n_v];
        discrete_maxwellian_into(u[0], grid, &mut l)?;
        discrete_maxwellian_into(u[n_x - 1], grid, &mut r)?;
        (l, r)
    } else {
        (Vec::new(), Vec::new())
    };
    let dx = mesh.dx();
    let mut t = vec![0.0; n_x * n_v];
    t.par_chunks_mut(n_x)
        .enumerate()
        .for_each_init(
            || (RowScratch::default(), vec![0.0; n_x]),
            |(s, row), (k, o)| {
                for j in 0..n_x {
                    row[j] = cells[j * n_v + k];
                }
                let bc = if dirichlet {
                    RowBc::Frozen {
                        left: [ghost_l[k]; 3],
                        right: [ghost_r[k]; 3],
                    }
                } else {
                    RowBc::Periodic
                };
                transport_rhs_row(row, &bc, grid.nodes()[k], dx, spatial, s, o);
            },
        );
    let mut col = vec![0.0; n_v];
    Ok((0..n_x)
        .map(|j| {
            for k in 0..n_v {
                col[k] = t[k * n_x + j];
            }
            moments(&col, grid)
        })
        .collect())
}

/// Forward-Euler kinetic-flux scheme
/// `U_j^{n+1} = <phi (M_j - dt/dx (M^_{j+1/2} - M^_{j-1/2}))>` with limited
/// WENO fluxes.
pub fn kinetic_euler_step(
    u: &[ConservedState],
    dt: f64,
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
) -> Result<Vec<ConservedState>> {
    kinetic_rk_step(u, dt, mesh, grid, SpatialScheme::Weno5Limited, None)
}

/// Explicit Runge-Kutta step of `U' = kinetic_flux_rhs(U)` using the
/// explicit half of `tableau`; `None` is forward Euler. This is the
/// `eps -> 0` limit of a GSA scheme once the data is in equilibrium.
pub fn kinetic_rk_step(
    u: &[ConservedState],
    dt: f64,
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    spatial: SpatialScheme,
    tableau: Option<&TableauPair>,
) -> Result<Vec<ConservedState>> {
    let Some(t) = tableau else {
        let r = kinetic_flux_rhs(u, mesh, grid, spatial)?;
        return Ok(u.iter().zip(&r).map(|(a, b)| a.add(b.scaled(dt))).collect());
    };
    let nu = t.nu();
    let mut rhs: Vec<Vec<ConservedState>> = Vec::with_capacity(nu);
    for i in 0..nu {
        let mut ui = u.to_vec();
        for (j, r) in rhs.iter().enumerate() {
            let c = t.at(i, j);
            if c != 0.0 {
                for (x, y) in ui.iter_mut().zip(r) {
                    *x = x.add(y.scaled(dt * c));
                }
            }
        }
        rhs.push(kinetic_flux_rhs(&ui, mesh, grid, spatial)?);
    }
    let mut out = u.to_vec();
    for (i, r) in rhs.iter().enumerate() {
        let w = t.w_explicit()[i];
        if w != 0.0 {
            for (x, y) in out.iter_mut().zip(r) {
                *x = x.add(y.scaled(dt * w));
            }
        }
    }
    Ok(out)
}
