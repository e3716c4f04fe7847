use rayon::prelude::*;

use super::config::{FstarChoice, PositivityMode, SimConfig, CLAMP_TOL};
use super::diagnostics::StepDiagnostics;
use super::field::{cell_moments, KineticField};
use super::nodal::nodal_equilibrium;
use crate::error::{Error, Result, StateComponent};
use crate::kinetic::{discrete_maxwellian_into, ConservedState, VelocityGrid};
use crate::space_fv::{
    cell_maxwellian_or_average_into, gauss_point_states, transport_rhs_row, Legendre3,
    RowBc, RowScratch, SpatialMesh, SpatialScheme, StateBc, POSITIVITY_CFL,
};
use crate::tableau::{scheme_cfl, shu_osher_coefficients, SchemeKind, ShuOsherCoefficients};

/// Where the relaxation rate is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RelaxMode {
    /// One rate per cell; the update is conservative.
    Cell,
    /// Rates at the Gauss nodes of each cell, for `eps` varying in `x`.
    GaussPoint,
}

/// Equilibrium data of one stage.
struct Equilibrium {
    u: Vec<ConservedState>,
    states: Vec<[ConservedState; 3]>,
    /// Cell Maxwellian, `j * n_v + k`.
    cell: Vec<f64>,
    /// Gauss-point Maxwellians, `(3 j + l) * n_v + k`; empty in cell mode.
    nodal: Vec<f64>,
    /// Gauss-point values of the distribution, `k * n_x + j`; empty in cell
    /// mode.
    gauss: Vec<[f64; 3]>,
}

/// IMEX Runge-Kutta integrator with correction step for the BGK equation
/// `f_t + v f_x = tau (M[f] - f) / eps`.
///
/// Stages are advanced in Butcher form
/// `rhs_i = f^n + dt sum_{j<i} (ã_ij T_j + a_ij K_j)` with
/// `K_j = (f^(j) - rhs_j) / (dt a_jj)`, so no `1/eps` factor is ever
/// formed explicitly. Each implicit stage is the relaxation
/// `f^(i) = (rhs_i + b E[rhs_i]) / (1 + b)` with `b = dt a_ii tau / eps`,
/// where `E` maps cell averages to the conservative cell Maxwellian built
/// from Gauss-point states. For `eps` varying in `x` the relaxation is done
/// at the Gauss nodes of each cell, with node states taken from the
/// reconstructed distribution so that the cell moments are kept.
pub struct Stepper {
    cfg: SimConfig,
    mesh: SpatialMesh,
    grid: VelocityGrid,
    bcs: Vec<RowBc>,
    state_bc: StateBc,
    dt: f64,
    mode: RelaxMode,
    eps: Vec<[f64; 3]>,
    need_t: Vec<bool>,
    need_k: Vec<bool>,
    shu_osher: Option<ShuOsherCoefficients<f64>>,
    /// Positivity bound on `dt`.
    dt_bound: f64,
}

impl Stepper {
    pub fn new(cfg: SimConfig, field: &KineticField) -> Result<Self> {
        let mesh = *field.mesh();
        let grid = field.grid().clone();
        let dt = cfg.dt(&mesh, grid.max_speed())?;
        let t = &cfg.scheme;
        let nu = t.nu();
        let mode = if cfg.eps.constant().is_some() || cfg.spatial == SpatialScheme::Upwind1 {
            RelaxMode::Cell
        } else {
            RelaxMode::GaussPoint
        };
        let eps: Vec<[f64; 3]> = (0..mesh.n_x())
            .map(|j| match mode {
                RelaxMode::Cell => [cfg.eps.eval(mesh.center(j)); 3],
                RelaxMode::GaussPoint => mesh.gauss_nodes(j).map(|x| cfg.eps.eval(x)),
            })
            .collect();
        if let Some(e) = eps.iter().flatten().find(|e| !(**e > 0.0)) {
            return Err(Error::InvalidConfig(format!("Knudsen number {e} must be positive")));
        }
        let shu_osher = if cfg.diagnostics.shu_osher_check {
            let first = match t.kind() {
                SchemeKind::TypeA => Some(1),
                SchemeKind::TypeARS => Some(2),
                SchemeKind::TypeCK => None,
            };
            first.map(|first| {
                shu_osher_coefficients(nu, first, |i, j| t.at(i - 1, j - 1), |i, j| t.a(i - 1, j - 1))
            })
        } else {
            None
        };
        let gsa = t.is_gsa();
        let need_t = (0..nu)
            .map(|i| {
                shu_osher.is_some()
                    || (i + 1..nu).any(|l| t.at(l, i) != 0.0)
                    || (!gsa && t.w_explicit()[i] != 0.0)
            })
            .collect();
        let need_k = (0..nu)
            .map(|i| (i + 1..nu).any(|l| t.a(l, i) != 0.0) || (!gsa && t.w_implicit()[i] != 0.0))
            .collect();
        let cx = match cfg.spatial {
            SpatialScheme::Upwind1 => 1.0,
            _ => POSITIVITY_CFL,
        };
        let dt_bound = scheme_cfl(t).unwrap_or(1.0) * cx * mesh.dx() / grid.max_speed();
        Ok(Stepper {
            dt_bound,
            bcs: field.row_bcs(),
            state_bc: field.state_bc(),
            cfg,
            mesh,
            grid,
            dt,
            mode,
            eps,
            need_t,
            need_k,
            shu_osher,
        })
    }

    /// Nominal time step from the configured rule.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Advances `field` by `dt`.
    pub fn step(&self, field: &mut KineticField, dt: f64) -> Result<StepDiagnostics> {
        let t = &self.cfg.scheme;
        let nu = t.nu();
        let f_n = field.values();
        let len = f_n.len();
        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(nu);
        let mut t_terms: Vec<Option<Vec<f64>>> = Vec::with_capacity(nu);
        let mut k_terms: Vec<Option<Vec<f64>>> = Vec::with_capacity(nu);
        let mut neg_rhs = 0;
        let mut neg_stage = 0;
        let mut so_disc: Option<f64> = None;

        for i in 0..nu {
            let mut rhs = f_n.to_vec();
            for j in 0..i {
                let (at, a) = (t.at(i, j), t.a(i, j));
                if at != 0.0 {
                    axpy(dt * at, t_terms[j].as_ref().expect("transport term kept"), &mut rhs);
                }
                if a != 0.0 {
                    axpy(dt * a, k_terms[j].as_ref().expect("collision term kept"), &mut rhs);
                }
            }
            neg_rhs += self.screen(&mut rhs, i + 1)?;
            if let Some(so) = &self.shu_osher {
                if i + 1 >= so.first {
                    let d = self.shu_osher_rhs(so, i + 1, f_n, &stages, &t_terms, dt);
                    let diff = d.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    so_disc = Some(so_disc.unwrap_or(0.0).max(diff));
                }
            }
            let aii = t.a(i, i);
            let mut fi = vec![0.0; len];
            let mut ki = None;
            if aii == 0.0 {
                fi.copy_from_slice(&rhs);
                if self.need_k[i] {
                    let eq = self.equilibrium(&fi, i + 1)?;
                    let b = self.rates(&eq, 1.0, 1, None)?;
                    let mut k = vec![0.0; len];
                    self.collide(&fi, &eq, &b, &mut k);
                    ki = Some(k);
                }
            } else {
                let eq = self.equilibrium(&rhs, i + 1)?;
                let b = self.rates(&eq, dt * aii, 1, None)?;
                self.relax(&rhs, &eq, &b, &mut fi);
                if self.need_k[i] {
                    let s = 1.0 / (dt * aii);
                    ki = Some(fi.iter().zip(&rhs).map(|(f, r)| (f - r) * s).collect());
                }
            }
            neg_stage = neg_stage.max(fi.iter().filter(|&&x| x < 0.0).count());
            t_terms.push(self.need_t[i].then(|| self.transport(&fi)));
            k_terms.push(ki);
            stages.push(fi);
        }

        let mut f_tilde = if t.is_gsa() {
            stages.pop().expect("at least one stage")
        } else {
            let mut s = f_n.to_vec();
            for i in 0..nu {
                if t.w_explicit()[i] != 0.0 {
                    axpy(dt * t.w_explicit()[i], t_terms[i].as_ref().expect("kept"), &mut s);
                }
                if t.w_implicit()[i] != 0.0 {
                    axpy(dt * t.w_implicit()[i], k_terms[i].as_ref().expect("kept"), &mut s);
                }
            }
            neg_rhs += self.screen(&mut s, nu + 1)?;
            s
        };

        let alpha = t.alpha();
        let f_new = if alpha > 0.0 {
            let eq = self.equilibrium(&f_tilde, nu + 1)?;
            let tau_star: Option<Vec<f64>> = if self.cfg.tau.is_unit() {
                None
            } else {
                let u = match self.cfg.fstar {
                    FstarChoice::Fn => cell_moments(f_n, self.mesh.n_x(), &self.grid),
                    FstarChoice::Fnp1 => eq.u.clone(),
                };
                Some(u.iter().map(|&x| self.cfg.tau.of_state(x)).collect::<Result<_>>()?)
            };
            let b = self.rates(&eq, alpha * dt * dt, 2, tau_star.as_deref())?;
            let mut out = vec![0.0; len];
            self.relax(&f_tilde, &eq, &b, &mut out);
            out
        } else {
            std::mem::take(&mut f_tilde)
        };

        field.values_mut().copy_from_slice(&f_new);
        field.time += dt;

        let mut d = StepDiagnostics::of_field(field, 0, dt, self.cfg.diagnostics.entropy);
        d.negative_stage_count = neg_stage;
        d.negative_rhs_count = neg_rhs;
        d.shu_osher_discrepancy = so_disc;
        d.cfl_exceeded = dt > self.dt_bound * (1.0 + 1e-12);
        if self.cfg.diagnostics.equilibrium_distance {
            d.max_distance_to_equilibrium = self.distance_to_equilibrium(field.values()).ok();
        }
        Ok(d)
    }

    /// `max_{j,k} |f - E(f)|`.
    pub fn distance_to_equilibrium(&self, values: &[f64]) -> Result<f64> {
        let eq = self.equilibrium(values, 0)?;
        let (n_x, n_v) = (self.mesh.n_x(), self.grid.n_v());
        let mut m = 0.0f64;
        for k in 0..n_v {
            for j in 0..n_x {
                m = m.max((values[k * n_x + j] - eq.cell[j * n_v + k]).abs());
            }
        }
        Ok(m)
    }

    /// Clamps round-off negatives; counts or rejects the rest.
    fn screen(&self, rhs: &mut [f64], stage: usize) -> Result<usize> {
        let n_x = self.mesh.n_x();
        let mut count = 0;
        for (idx, x) in rhs.iter_mut().enumerate() {
            if *x < 0.0 {
                if *x >= -CLAMP_TOL {
                    *x = 0.0;
                } else {
                    if self.cfg.positivity == PositivityMode::Strict {
                        return Err(Error::PositivityViolated {
                            stage,
                            cell: idx % n_x,
                            node: idx / n_x,
                            value: *x,
                        });
                    }
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    fn shu_osher_rhs(
        &self,
        so: &ShuOsherCoefficients<f64>,
        i: usize,
        f_n: &[f64],
        stages: &[Vec<f64>],
        t_terms: &[Option<Vec<f64>>],
        dt: f64,
    ) -> Vec<f64> {
        let mut out: Vec<f64> = f_n.iter().map(|x| so.c(i, 0) * x).collect();
        if so.first > 1 {
            // f^(1) = f^n for type ARS
            axpy(dt * so.c_tilde(i, 0), t_terms[0].as_ref().expect("kept"), &mut out);
        }
        for j in so.first..i {
            axpy(so.c(i, j), &stages[j - 1], &mut out);
            axpy(dt * so.c_tilde(i, j), t_terms[j - 1].as_ref().expect("kept"), &mut out);
        }
        out
    }

    /// Transport operator applied row by row.
    fn transport(&self, values: &[f64]) -> Vec<f64> {
        let n_x = self.mesh.n_x();
        let dx = self.mesh.dx();
        let mut out = vec![0.0; values.len()];
        out.par_chunks_mut(n_x)
            .enumerate()
            .for_each_init(RowScratch::default, |s, (k, o)| {
                let row = &values[k * n_x..(k + 1) * n_x];
                transport_rhs_row(row, &self.bcs[k], self.grid.nodes()[k], dx, self.cfg.spatial, s, o);
            });
        out
    }

    fn equilibrium(&self, values: &[f64], stage: usize) -> Result<Equilibrium> {
        let (n_x, n_v) = (self.mesh.n_x(), self.grid.n_v());
        let u = cell_moments(values, n_x, &self.grid);
        for (cell, uj) in u.iter().enumerate() {
            if !(uj.rho > 0.0) {
                return Err(Error::InadmissibleStage {
                    stage,
                    cell,
                    component: StateComponent::Density,
                    value: uj.rho,
                });
            }
            if !(uj.internal_energy() > 0.0) {
                return Err(Error::InadmissibleStage {
                    stage,
                    cell,
                    component: StateComponent::InternalEnergy,
                    value: uj.internal_energy(),
                });
            }
        }
        let grid = &self.grid;
        if self.mode == RelaxMode::GaussPoint {
            let eq = nodal_equilibrium(values, &u, &self.bcs, grid)?;
            if eq.fallback_cells > 0 {
                log::debug!("stage {stage}: {} cells relaxed with constant node data", eq.fallback_cells);
            }
            return Ok(Equilibrium {
                u,
                states: eq.states,
                cell: eq.cell,
                nodal: eq.nodal,
                gauss: eq.values,
            });
        }
        let upwind = self.cfg.spatial == SpatialScheme::Upwind1;
        let states = if upwind {
            u.iter().map(|x| [*x; 3]).collect()
        } else {
            gauss_point_states(&u, &self.state_bc)?
        };
        let mut cell = vec![0.0; n_x * n_v];
        cell.par_chunks_mut(n_v).enumerate().try_for_each_init(
            || vec![0.0; 3 * n_v],
            |nd, (j, c)| -> Result<()> {
                if upwind {
                    discrete_maxwellian_into(u[j], grid, c).map(|_| ())
                } else {
                    cell_maxwellian_or_average_into(&states[j], u[j], grid, nd, c).map(|_| ())
                }
            },
        )?;
        Ok(Equilibrium {
            u,
            states,
            cell,
            nodal: Vec::new(),
            gauss: Vec::new(),
        })
    }

    /// `b = coeff * tau * extra_j / eps^power` per cell and Gauss node.
    fn rates(&self, eq: &Equilibrium, coeff: f64, power: i32, extra: Option<&[f64]>) -> Result<Vec<[f64; 3]>> {
        let unit = self.cfg.tau.is_unit();
        let mut out = Vec::with_capacity(eq.u.len());
        for j in 0..eq.u.len() {
            let x = extra.map_or(1.0, |e| e[j]);
            let e = &self.eps[j];
            let b = match self.mode {
                RelaxMode::Cell => {
                    let tau = if unit { 1.0 } else { self.cfg.tau.of_state(eq.u[j])? };
                    [coeff * tau * x / e[0].powi(power); 3]
                }
                RelaxMode::GaussPoint => {
                    let mut b = [0.0; 3];
                    for l in 0..3 {
                        let tau = if unit { 1.0 } else { self.cfg.tau.of_state(eq.states[j][l])? };
                        b[l] = coeff * tau * x / e[l].powi(power);
                    }
                    b
                }
            };
            out.push(b);
        }
        Ok(out)
    }

    /// Implicit relaxation `(f + b E) / (1 + b)`.
    fn relax(&self, f: &[f64], eq: &Equilibrium, b: &[[f64; 3]], out: &mut [f64]) {
        let (n_x, n_v) = (self.mesh.n_x(), self.grid.n_v());
        match self.mode {
            RelaxMode::Cell => {
                out.par_chunks_mut(n_x).enumerate().for_each(|(k, o)| {
                    let row = &f[k * n_x..(k + 1) * n_x];
                    for j in 0..n_x {
                        let bj = b[j][0];
                        o[j] = if bj == 0.0 {
                            row[j]
                        } else {
                            let m = eq.cell[j * n_v + k];
                            m + (row[j] - m) / (1.0 + bj)
                        };
                    }
                });
            }
            RelaxMode::GaussPoint => {
                let w = Legendre3::WEIGHTS;
                out.par_chunks_mut(n_x).enumerate().for_each(|(k, o)| {
                    for j in 0..n_x {
                        let gv = eq.gauss[k * n_x + j];
                        let mut s = 0.0;
                        for l in 0..3 {
                            let m = eq.nodal[(3 * j + l) * n_v + k];
                            s += w[l] * (m + (gv[l] - m) / (1.0 + b[j][l]));
                        }
                        o[j] = s;
                    }
                });
            }
        }
    }

    /// Explicit collision term `b (E - f)`, with `b = tau / eps`.
    fn collide(&self, f: &[f64], eq: &Equilibrium, b: &[[f64; 3]], out: &mut [f64]) {
        let (n_x, n_v) = (self.mesh.n_x(), self.grid.n_v());
        match self.mode {
            RelaxMode::Cell => {
                out.par_chunks_mut(n_x).enumerate().for_each(|(k, o)| {
                    for j in 0..n_x {
                        o[j] = b[j][0] * (eq.cell[j * n_v + k] - f[k * n_x + j]);
                    }
                });
            }
            RelaxMode::GaussPoint => {
                let w = Legendre3::WEIGHTS;
                out.par_chunks_mut(n_x).enumerate().for_each(|(k, o)| {
                    for j in 0..n_x {
                        let gv = eq.gauss[k * n_x + j];
                        o[j] = (0..3)
                            .map(|l| w[l] * b[j][l] * (eq.nodal[(3 * j + l) * n_v + k] - gv[l]))
                            .sum();
                    }
                });
            }
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: KineticField,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Nominal time step.
    pub dt: f64,
}

/// Integrates to `cfg.t_end`; the last step is shortened to land on it.
pub fn run(field: KineticField, cfg: &SimConfig) -> Result<RunOutput> {
    run_with(field, cfg, |_, _| {})
}

/// As [`run`], calling `observe` after every step (and once for the
/// initial data).
pub fn run_with(
    mut field: KineticField,
    cfg: &SimConfig,
    mut observe: impl FnMut(&KineticField, &StepDiagnostics),
) -> Result<RunOutput> {
    let stepper = Stepper::new(cfg.clone(), &field)?;
    let dt = stepper.dt();
    let t0 = field.time;
    let span = cfg.t_end - t0;
    if span < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "final time {} precedes the initial time {t0}",
            cfg.t_end
        )));
    }
    let n_steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    let mut d0 = StepDiagnostics::of_field(&field, 0, 0.0, cfg.diagnostics.entropy);
    if cfg.diagnostics.equilibrium_distance {
        d0.max_distance_to_equilibrium = stepper.distance_to_equilibrium(field.values()).ok();
    }
    observe(&field, &d0);
    diagnostics.push(d0);
    for n in 0..n_steps {
        let t_next = if n + 1 == n_steps { cfg.t_end } else { t0 + (n + 1) as f64 * dt };
        let h = t_next - field.time;
        let mut d = stepper.step(&mut field, h)?;
        field.time = t_next;
        d.step = n + 1;
        d.time = t_next;
        observe(&field, &d);
        diagnostics.push(d);
    }
    Ok(RunOutput {
        field,
        diagnostics,
        dt,
    })
}
