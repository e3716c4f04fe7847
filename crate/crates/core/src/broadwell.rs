//! Broadwell three-velocity model
//! `f±_t ± f±_x = q / eps`, `f0_t = -q / eps`, `q = f0^2 - f+ f-`,
//! in moment variables `rho = f+ + 2 f0 + f-`, `m = f+ - f-`, `z = f+ + f-`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imex_bgk::CLAMP_TOL;
use crate::space_fv::{transport_rhs_row, RowBc, RowScratch, SpatialMesh, SpatialScheme, POSITIVITY_CFL};
use crate::tableau::TableauPair;

/// `(f+, f0, f-)`
pub type Triple = [f64; 3];

/// `(rho, m, z)` of a triple.
#[inline]
pub fn to_moments(f: Triple) -> [f64; 3] {
    [f[0] + 2.0 * f[1] + f[2], f[0] - f[2], f[0] + f[2]]
}

#[inline]
pub fn from_moments(rho: f64, m: f64, z: f64) -> Triple {
    [0.5 * (z + m), 0.5 * (rho - z), 0.5 * (z - m)]
}

/// Equilibrium closure `z = (rho^2 + m^2) / (2 rho)`.
#[inline]
pub fn equilibrium_z(rho: f64, m: f64) -> f64 {
    (rho * rho + m * m) / (2.0 * rho)
}

pub fn broadwell_collision(f: Triple) -> Triple {
    let q = f[1] * f[1] - f[0] * f[2];
    [q, -q, q]
}

/// Solves `f - b Q(f) = g` for `g >= 0`, `b >= 0`. Density and momentum
/// carry over and `z_f = (b (rho^2 + m^2) / 2 + z_g) / (1 + b rho)`.
pub fn broadwell_relax(g: Triple, b: f64) -> Result<Triple> {
    if let Some(i) = g.iter().position(|x| !(*x >= 0.0)) {
        return Err(Error::Negative { index: i, value: g[i] });
    }
    if !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("relaxation coefficient {b} must be nonnegative")));
    }
    if b == 0.0 {
        return Ok(g);
    }
    let [rho, m, zg] = to_moments(g);
    let z = (0.5 * b * (rho * rho + m * m) + zg) / (1.0 + b * rho);
    // z is a convex combination of z_g and the closure, both in [|m|, rho],
    // so a negative component can only come from rounding
    Ok(from_moments(rho, m, z).map(|x| x.max(0.0)))
}

/// Component-major values: `values[c * n_x + j]` for `c` in `(+, 0, -)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadwellField {
    values: Vec<f64>,
    mesh: SpatialMesh,
    pub time: f64,
    ghosts: Option<[Triple; 2]>,
}

impl BroadwellField {
    pub fn new(values: Vec<f64>, mesh: SpatialMesh) -> Result<Self> {
        let n = mesh.n_x();
        if values.len() != 3 * n {
            return Err(Error::InvalidMesh(format!("expected {} values, got {}", 3 * n, values.len())));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite Broadwell value".into()));
        }
        let ghosts = (mesh.boundary() == crate::space_fv::Boundary::DirichletGhost).then(|| {
            [
                [values[0], values[n], values[2 * n]],
                [values[n - 1], values[2 * n - 1], values[3 * n - 1]],
            ]
        });
        Ok(BroadwellField {
            values,
            mesh,
            time: 0.0,
            ghosts,
        })
    }

    pub fn from_triples(triples: &[Triple], mesh: SpatialMesh) -> Result<Self> {
        let n = triples.len();
        let mut v = vec![0.0; 3 * n];
        for (j, t) in triples.iter().enumerate() {
            for c in 0..3 {
                v[c * n + j] = t[c];
            }
        }
        Self::new(v, mesh)
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_x(&self) -> usize {
        self.mesh.n_x()
    }

    pub fn triple(&self, j: usize) -> Triple {
        let n = self.n_x();
        [self.values[j], self.values[n + j], self.values[2 * n + j]]
    }

    pub fn triples(&self) -> Vec<Triple> {
        (0..self.n_x()).map(|j| self.triple(j)).collect()
    }

    /// `(rho, m, z)` per cell.
    pub fn moments(&self) -> Vec<[f64; 3]> {
        (0..self.n_x()).map(|j| to_moments(self.triple(j))).collect()
    }

    /// `dx * sum_j (rho, m)`.
    pub fn totals(&self) -> [f64; 2] {
        let dx = self.mesh.dx();
        let mut t = [0.0; 2];
        for mo in self.moments() {
            t[0] += mo[0];
            t[1] += mo[1];
        }
        [t[0] * dx, t[1] * dx]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn row_bc(&self, c: usize) -> RowBc {
        match &self.ghosts {
            None => RowBc::Periodic,
            Some([l, r]) => RowBc::Frozen {
                left: [l[c]; 3],
                right: [r[c]; 3],
            },
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        BroadwellField {
            values,
            mesh: self.mesh,
            time: self.time,
            ghosts: self.ghosts,
        }
    }

    /// CSV with columns `x,rho,m,z`.
    pub fn snapshot_csv(&self) -> String {
        let mut s = String::from("x,rho,m,z\n");
        for (j, mo) in self.moments().iter().enumerate() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.mesh.center(j),
                mo[0],
                mo[1],
                mo[2]
            ));
        }
        s
    }
}

/// `dx sum_j (f+ log f+ + 2 f0 log f0 + f- log f-)` with `0 log 0 = 0`.
pub fn broadwell_entropy(f: &BroadwellField) -> Result<f64> {
    let n = f.n_x();
    let mut s = 0.0;
    for (i, &x) in f.values.iter().enumerate() {
        if x < 0.0 {
            return Err(Error::Negative { index: i, value: x });
        }
        if x > 0.0 {
            let w = if i / n == 1 { 2.0 } else { 1.0 };
            s += w * x * x.ln();
        }
    }
    Ok(s * f.mesh.dx())
}

/// Transport speeds of the three components.
const SPEEDS: [f64; 3] = [1.0, 0.0, -1.0];

fn transport(f: &BroadwellField, values: &[f64], spatial: SpatialScheme) -> Vec<f64> {
    let n = f.n_x();
    let dx = f.mesh.dx();
    let mut out = vec![0.0; 3 * n];
    out.par_chunks_mut(n).enumerate().for_each(|(c, o)| {
        if SPEEDS[c] != 0.0 {
            let mut s = RowScratch::default();
            transport_rhs_row(&values[c * n..(c + 1) * n], &f.row_bc(c), SPEEDS[c], dx, spatial, &mut s, o);
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BroadwellStepReport {
    /// Largest number of negative entries in any stage value.
    pub negative_stage_count: usize,
    pub min_value: f64,
    pub cfl_exceeded: bool,
}

/// Largest positivity-preserving step: `c_sch * dx / 12` (unit speeds).
pub fn broadwell_positivity_dt(scheme: &TableauPair, mesh: &SpatialMesh) -> Option<f64> {
    crate::tableau::scheme_cfl(scheme).map(|c| c * POSITIVITY_CFL * mesh.dx())
}

/// One corrected IMEX step with limited WENO transport and `f* = f^n`.
pub fn broadwell_imex_step(
    f: &BroadwellField,
    scheme: &TableauPair,
    dt: f64,
    eps: f64,
) -> Result<(BroadwellField, BroadwellStepReport)> {
    broadwell_imex_step_with(f, scheme, dt, eps, SpatialScheme::Weno5Limited)
}

pub fn broadwell_imex_step_with(
    f: &BroadwellField,
    scheme: &TableauPair,
    dt: f64,
    eps: f64,
    spatial: SpatialScheme,
) -> Result<(BroadwellField, BroadwellStepReport)> {
    if !(dt > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("dt = {dt} and eps = {eps} must be positive")));
    }
    let t = scheme;
    let nu = t.nu();
    let n = f.n_x();
    let f_n = f.values();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(nu);
    let mut tt: Vec<Vec<f64>> = Vec::with_capacity(nu);
    let mut kk: Vec<Vec<f64>> = Vec::with_capacity(nu);
    let mut report = BroadwellStepReport::default();
    let screen = |v: &mut [f64], stage: usize| -> Result<()> {
        for (idx, x) in v.iter_mut().enumerate() {
            if *x < 0.0 {
                if *x >= -CLAMP_TOL {
                    *x = 0.0;
                } else {
                    return Err(Error::PositivityViolated {
                        stage,
                        cell: idx % n,
                        node: idx / n,
                        value: *x,
                    });
                }
            }
        }
        Ok(())
    };
    let relax_all = |v: &[f64], b: f64| -> Result<Vec<f64>> {
        let mut out = vec![0.0; 3 * n];
        for j in 0..n {
            let r = broadwell_relax([v[j], v[n + j], v[2 * n + j]], b)?;
            for c in 0..3 {
                out[c * n + j] = r[c];
            }
        }
        Ok(out)
    };
    for i in 0..nu {
        let mut rhs = f_n.to_vec();
        for j in 0..i {
            let (at, a) = (t.at(i, j), t.a(i, j));
            for (r, (x, y)) in rhs.iter_mut().zip(tt[j].iter().zip(&kk[j])) {
                *r += dt * (at * x + a * y);
            }
        }
        screen(&mut rhs, i + 1)?;
        let aii = t.a(i, i);
        let (fi, ki) = if aii == 0.0 {
            let mut k = vec![0.0; 3 * n];
            for j in 0..n {
                let q = broadwell_collision([rhs[j], rhs[n + j], rhs[2 * n + j]]);
                for c in 0..3 {
                    k[c * n + j] = q[c] / eps;
                }
            }
            (rhs, k)
        } else {
            let fi = relax_all(&rhs, dt * aii / eps)?;
            let s = 1.0 / (dt * aii);
            let k = fi.iter().zip(&rhs).map(|(a, b)| (a - b) * s).collect();
            (fi, k)
        };
        report.negative_stage_count = report
            .negative_stage_count
            .max(fi.iter().filter(|&&x| x < 0.0).count());
        tt.push(transport(f, &fi, spatial));
        kk.push(ki);
        stages.push(fi);
    }
    let mut f_tilde = if t.is_gsa() {
        stages.pop().expect("at least one stage")
    } else {
        let mut s = f_n.to_vec();
        for i in 0..nu {
            let (wt, w) = (t.w_explicit()[i], t.w_implicit()[i]);
            for (r, (x, y)) in s.iter_mut().zip(tt[i].iter().zip(&kk[i])) {
                *r += dt * (wt * x + w * y);
            }
        }
        screen(&mut s, nu + 1)?;
        s
    };
    let alpha = t.alpha();
    let out = if alpha > 0.0 {
        let mut out = vec![0.0; 3 * n];
        for j in 0..n {
            let rho_star = f_n[j] + 2.0 * f_n[n + j] + f_n[2 * n + j];
            let b = alpha * dt * dt * rho_star / (eps * eps);
            let r = broadwell_relax([f_tilde[j], f_tilde[n + j], f_tilde[2 * n + j]], b)?;
            for c in 0..3 {
                out[c * n + j] = r[c];
            }
        }
        out
    } else {
        std::mem::take(&mut f_tilde)
    };
    let cx = match spatial {
        SpatialScheme::Upwind1 => 1.0,
        _ => POSITIVITY_CFL,
    };
    report.cfl_exceeded = dt > crate::tableau::scheme_cfl(t).unwrap_or(1.0) * cx * f.mesh.dx() * (1.0 + 1e-12);
    let mut g = f.with_values(out);
    g.time = f.time + dt;
    report.min_value = g.min_value();
    Ok((g, report))
}

/// `d(rho, m)/dt` of the kinetic-flux scheme for the limit system
/// `rho_t + m_x = 0`, `m_t + z_x = 0`, `z = (rho^2 + m^2) / (2 rho)`:
/// equilibrium triples are transported and their moments taken.
pub fn broadwell_kinetic_rhs(rho_m: &[[f64; 2]], mesh: &SpatialMesh) -> Result<Vec<[f64; 2]>> {
    let n = mesh.n_x();
    let mut triples = Vec::with_capacity(n);
    for (j, &[rho, m]) in rho_m.iter().enumerate() {
        if !(rho > 0.0) {
            return Err(Error::Negative { index: j, value: rho });
        }
        triples.push(from_moments(rho, m, equilibrium_z(rho, m)));
    }
    let field = BroadwellField::from_triples(&triples, *mesh)?;
    let t = transport(&field, field.values(), SpatialScheme::Weno5Limited);
    Ok((0..n)
        .map(|j| {
            let mo = to_moments([t[j], t[n + j], t[2 * n + j]]);
            [mo[0], mo[1]]
        })
        .collect())
}
