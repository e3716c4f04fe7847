//! Experiment drivers behind the subcommands. Each returns a report with
//! its CSV payloads and the outcome of the command's built-in checks.

use anyhow::{bail, ensure, Context, Result};
use bgk_imex::broadwell::{
    broadwell_entropy, broadwell_imex_step_with, broadwell_positivity_dt, equilibrium_z, from_moments,
    BroadwellField,
};
use bgk_imex::imex_bgk::{
    diagnostics_csv, run, EpsProfile, KineticField, PositivityMode, SimConfig, StepDiagnostics,
    TimeStepRule,
};
use bgk_imex::kinetic::{primitive_from_conserved, ConservedState, Tau, VelocityGrid};
use bgk_imex::reference::run_ssp_rk2;
use bgk_imex::setups::{consistent_initial, inconsistent_initial, mixed_regime_eps, periodic_mesh, sod_initial};
use bgk_imex::space_fv::SpatialScheme;
use bgk_imex::stability::{stability_boundary_slice, stable_mask, Window};
use bgk_imex::tableau::{
    check_order_conditions, positivity_analysis, resolve, CorrectionVariant, OrderReport,
    PositivityReport, TableauPair,
};
use serde::{Deserialize, Serialize};

/// Velocity grid and spatial options shared by the kinetic commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticOptions {
    pub nv: usize,
    pub vmax: f64,
    pub limiter: bool,
}

impl Default for KineticOptions {
    fn default() -> Self {
        KineticOptions {
            nv: 150,
            vmax: 15.0,
            limiter: true,
        }
    }
}

impl KineticOptions {
    pub fn grid(&self) -> Result<VelocityGrid> {
        Ok(VelocityGrid::new(self.nv, self.vmax)?)
    }

    pub fn spatial(&self) -> SpatialScheme {
        if self.limiter {
            SpatialScheme::Weno5Limited
        } else {
            SpatialScheme::Weno5Unlimited
        }
    }
}

fn fmt_e(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// check-tableau
// ---------------------------------------------------------------------------

pub const ORDER_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TableauCheck {
    pub name: String,
    pub order: OrderReport,
    pub positivity: Option<PositivityReport>,
}

impl TableauCheck {
    pub fn c_sch(&self) -> Option<f64> {
        self.positivity.as_ref().filter(|p| p.feasible).and_then(|p| p.c_sch.value())
    }

    pub fn feasible(&self) -> bool {
        self.positivity.as_ref().is_some_and(|p| p.feasible)
    }

    pub fn passed(&self) -> bool {
        self.order.satisfied(ORDER_TOL) && self.feasible()
    }

    pub fn text(&self) -> String {
        let mut s = format!("scheme: {}\n{}\n", self.name, self.order);
        match &self.positivity {
            Some(p) => {
                s.push_str(&format!("{p}\n"));
                for r in p.binding_ratios() {
                    s.push_str(&format!("  binding pair: ({}, {})\n", r.i, r.j));
                }
            }
            None => s.push_str("positivity analysis: not applicable to this tableau kind\n"),
        }
        let status = if self.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!(
            "{status}: order residuals {} {ORDER_TOL:e}, positivity {}\n",
            if self.order.satisfied(ORDER_TOL) { "<=" } else { ">" },
            if self.feasible() { "feasible" } else { "infeasible" }
        ));
        s
    }
}

pub fn check_tableau(scheme: &str, order: u8, variant: CorrectionVariant) -> Result<TableauCheck> {
    let t = resolve(scheme).with_context(|| format!("loading tableau `{scheme}`"))?;
    Ok(check_tableau_pair(&t, order, variant))
}

pub fn check_tableau_pair(t: &TableauPair, order: u8, variant: CorrectionVariant) -> TableauCheck {
    TableauCheck {
        name: t.name().unwrap_or("(unnamed)").to_string(),
        order: check_order_conditions(t, order, variant),
        positivity: positivity_analysis(t).ok(),
    }
}

// ---------------------------------------------------------------------------
// accuracy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Consistent,
    Inconsistent,
}

impl std::str::FromStr for InitKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(InitKind::Consistent),
            "inconsistent" => Ok(InitKind::Inconsistent),
            _ => bail!("unknown initial data `{s}` (consistent | inconsistent)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AccuracyParams {
    pub scheme: TableauPair,
    pub eps: Vec<f64>,
    pub nx: Vec<usize>,
    pub init: InitKind,
    pub t_end: f64,
    pub cfl: f64,
    pub opts: KineticOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub eps: f64,
    pub nx: usize,
    /// `||f_nx - f_2nx||` in discrete `L^2(x, v)`; absent on the finest mesh.
    pub error: Option<f64>,
    /// `log2(error_nx / error_2nx)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub scheme: String,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("scheme,eps,nx,error,order\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.scheme,
                fmt_e(r.eps),
                r.nx,
                r.error.map_or(String::new(), fmt_e),
                r.order.map_or(String::new(), fmt_e)
            ));
        }
        s
    }

    /// Order from the finest pair at `eps`.
    pub fn finest_order(&self, eps: f64) -> Option<f64> {
        self.rows.iter().filter(|r| r.eps == eps).filter_map(|r| r.order).last()
    }
}

/// `dt = t_end / N` with the smallest `N` keeping `dt <= cfl dx / v_max`.
pub fn landing_dt(t_end: f64, cfl: f64, dx: f64, vmax: f64) -> f64 {
    let n = (t_end / (cfl * dx / vmax) - 1e-9).ceil().max(1.0);
    t_end / n
}

/// Final field of one accuracy run.
pub fn accuracy_run(p: &AccuracyParams, eps: f64, nx: usize) -> Result<KineticField> {
    let grid = p.opts.grid()?;
    let f0 = match p.init {
        InitKind::Consistent => consistent_initial(nx, &grid)?,
        InitKind::Inconsistent => inconsistent_initial(nx, &grid)?,
    };
    let mut cfg = SimConfig::new(p.scheme.clone(), EpsProfile::Constant(eps), p.t_end);
    cfg.spatial = p.opts.spatial();
    cfg.positivity = PositivityMode::Track;
    cfg.diagnostics.entropy = false;
    cfg.time_step = TimeStepRule::Fixed {
        dt: landing_dt(p.t_end, p.cfl, f0.mesh().dx(), grid.max_speed()),
    };
    Ok(run(f0, &cfg)?.field)
}

/// Discrete `L^2(x, v)` distance after averaging `fine` onto the coarse
/// cells.
pub fn self_convergence_error(coarse: &KineticField, fine: &KineticField) -> Result<f64> {
    let (n, nv) = (coarse.n_x(), coarse.n_v());
    ensure!(fine.n_x() == 2 * n && fine.n_v() == nv, "meshes are not nested by a factor of two");
    let mut s = 0.0;
    for k in 0..nv {
        for j in 0..n {
            let avg = 0.5 * (fine.get(2 * j, k) + fine.get(2 * j + 1, k));
            let d = coarse.get(j, k) - avg;
            s += d * d;
        }
    }
    Ok((s * coarse.mesh().dx() * coarse.grid().dv()).sqrt())
}

pub fn accuracy(p: &AccuracyParams) -> Result<AccuracyReport> {
    ensure!(p.nx.len() >= 2, "accuracy needs at least two resolutions");
    for w in p.nx.windows(2) {
        ensure!(w[1] == 2 * w[0], "resolutions must double: {} -> {}", w[0], w[1]);
    }
    let mut rows = Vec::new();
    for &eps in &p.eps {
        let fields = p
            .nx
            .iter()
            .map(|&nx| accuracy_run(p, eps, nx))
            .collect::<Result<Vec<_>>>()?;
        let errors: Vec<f64> = fields
            .windows(2)
            .map(|w| self_convergence_error(&w[0], &w[1]))
            .collect::<Result<_>>()?;
        for (i, &nx) in p.nx.iter().enumerate() {
            let error = errors.get(i).copied();
            let order = match (error, errors.get(i + 1)) {
                (Some(a), Some(&b)) => Some((a / b).log2()),
                _ => None,
            };
            rows.push(AccuracyRow { eps, nx, error, order });
        }
    }
    Ok(AccuracyReport {
        scheme: p.scheme.name().unwrap_or("(unnamed)").to_string(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// sod
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SodParams {
    pub scheme: TableauPair,
    pub eps: f64,
    pub nx: usize,
    pub t_end: f64,
    /// `dt = dt_factor * dx / v_max`
    pub dt_factor: f64,
    pub opts: KineticOptions,
}

impl SodParams {
    pub fn new(scheme: TableauPair, eps: f64) -> Self {
        SodParams {
            scheme,
            eps,
            nx: 80,
            t_end: 0.3,
            dt_factor: 1.0 / 24.0,
            opts: KineticOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SodReport {
    pub scheme: String,
    pub eps: f64,
    pub diagnostics: Vec<StepDiagnostics>,
    pub snapshot: String,
}

impl SodReport {
    /// Largest negative-cell count of `f^{n+1}` over all steps.
    pub fn max_negative_cells(&self) -> usize {
        self.diagnostics.iter().map(|d| d.negative_cell_count).max().unwrap_or(0)
    }

    /// Negative entries seen anywhere: stage data, stage values or updates.
    pub fn any_negative(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.negative_cell_count + d.negative_stage_count + d.negative_rhs_count > 0)
    }

    /// Negative-cell counts per step, with the stage counts.
    pub fn counts_csv(&self) -> String {
        let mut s = String::from("step,time,neg_cells,neg_stage,neg_rhs,min_f\n");
        for d in &self.diagnostics {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.step,
                fmt_e(d.time),
                d.negative_cell_count,
                d.negative_stage_count,
                d.negative_rhs_count,
                fmt_e(d.min_cell_value)
            ));
        }
        s
    }
}

pub fn sod(p: &SodParams) -> Result<SodReport> {
    let grid = p.opts.grid()?;
    let f0 = sod_initial(p.nx, &grid)?;
    let mut cfg = SimConfig::new(p.scheme.clone(), EpsProfile::Constant(p.eps), p.t_end);
    cfg.spatial = p.opts.spatial();
    cfg.positivity = PositivityMode::Track;
    cfg.diagnostics.entropy = false;
    cfg.time_step = TimeStepRule::Cfl { number: p.dt_factor };
    let out = run(f0, &cfg)?;
    Ok(SodReport {
        scheme: p.scheme.name().unwrap_or("(unnamed)").to_string(),
        eps: p.eps,
        snapshot: out.field.snapshot_csv(),
        diagnostics: out.diagnostics,
    })
}

// ---------------------------------------------------------------------------
// mixed regime
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MixedParams {
    pub scheme: TableauPair,
    pub nx: usize,
    pub nx_ref: usize,
    pub t_end: f64,
    pub dt_factor: f64,
    pub dt_factor_ref: f64,
    pub opts: KineticOptions,
}

impl MixedParams {
    pub fn new(scheme: TableauPair) -> Self {
        MixedParams {
            scheme,
            nx: 40,
            nx_ref: 80,
            t_end: 0.5,
            dt_factor: 1.0 / 24.0,
            dt_factor_ref: 1.0 / 240.0,
            opts: KineticOptions::default(),
        }
    }
}

pub const MIXED_TOL: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct MixedReport {
    pub ap: KineticField,
    pub reference: KineticField,
    /// Relative `L^2` differences in `(rho, u, T)`, reference averaged onto
    /// the coarse mesh.
    pub rel_l2: [f64; 3],
}

impl MixedReport {
    pub fn passed(&self) -> bool {
        self.rel_l2.iter().all(|&e| e <= MIXED_TOL)
    }
}

fn primitives(u: &[ConservedState]) -> Result<Vec<[f64; 3]>> {
    u.iter()
        .map(|&x| {
            let p = primitive_from_conserved(x)?;
            Ok([p.rho, p.u, p.temperature])
        })
        .collect()
}

/// Relative `L^2` differences in `(rho, u, T)` of `coarse` against `fine`,
/// averaging conserved quantities of the fine cells onto the coarse ones.
pub fn compare_primitives(coarse: &KineticField, fine: &KineticField) -> Result<[f64; 3]> {
    let r = fine.n_x() / coarse.n_x();
    ensure!(r >= 1 && r * coarse.n_x() == fine.n_x(), "fine mesh must refine the coarse mesh");
    let uf = fine.cell_moments();
    let avg: Vec<ConservedState> = uf
        .chunks(r)
        .map(|c| c.iter().fold(ConservedState::ZERO, |a, b| a.add(*b)).scaled(1.0 / r as f64))
        .collect();
    let a = primitives(&coarse.cell_moments())?;
    let b = primitives(&avg)?;
    let mut out = [0.0; 3];
    for (q, o) in out.iter_mut().enumerate() {
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x[q] - y[q]).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y[q] * y[q]).sum();
        *o = (num / den).sqrt();
    }
    Ok(out)
}

pub fn mixed(p: &MixedParams) -> Result<MixedReport> {
    let reference = mixed_reference(p)?;
    mixed_against(p, reference)
}

/// Explicit run on the fine mesh with `dt` resolving `eps`. It does not
/// depend on the scheme under test.
pub fn mixed_reference(p: &MixedParams) -> Result<KineticField> {
    let grid = p.opts.grid()?;
    let r0 = inconsistent_initial(p.nx_ref, &grid)?;
    let dt_ref = p.dt_factor_ref * r0.mesh().dx() / grid.max_speed();
    let (reference, _) = run_ssp_rk2(r0, dt_ref, p.t_end, &mixed_regime_eps(), &Tau::unit(), p.opts.spatial())?;
    Ok(reference)
}

/// AP run of `p.scheme` compared with a precomputed reference.
pub fn mixed_against(p: &MixedParams, reference: KineticField) -> Result<MixedReport> {
    let grid = p.opts.grid()?;
    let f0 = inconsistent_initial(p.nx, &grid)?;
    let mut cfg = SimConfig::new(p.scheme.clone(), mixed_regime_eps(), p.t_end);
    cfg.spatial = p.opts.spatial();
    cfg.positivity = PositivityMode::Track;
    cfg.diagnostics.entropy = false;
    cfg.time_step = TimeStepRule::Cfl { number: p.dt_factor };
    let ap = run(f0, &cfg)?.field;
    let rel_l2 = compare_primitives(&ap, &reference)?;
    Ok(MixedReport { ap, reference, rel_l2 })
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

pub const DEFAULT_Z2: [f64; 6] = [0.0, -1.0, -2.0, -5.0, -10.0, -20.0];

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub scheme: String,
    pub z2: Vec<f64>,
    pub csv: String,
    /// Stable sets grow monotonically as `z2` decreases.
    pub nested: bool,
}

/// `|P| = 1` contours for each `z2` and the nesting check on the sampling
/// grid.
pub fn stability(t: &TableauPair, z2: &[f64], resolution: usize) -> Result<StabilityReport> {
    let window = Window::default();
    let mut csv = String::from("z2,x,y\n");
    for &z in z2 {
        let s = stability_boundary_slice(t, z, window, resolution)?;
        for (x, y) in s.boundary_points {
            csv.push_str(&format!("{},{},{}\n", fmt_e(z), fmt_e(x), fmt_e(y)));
        }
    }
    let mut order: Vec<f64> = z2.to_vec();
    order.sort_by(|a, b| b.partial_cmp(a).expect("finite z2"));
    let masks: Vec<Vec<bool>> = order.iter().map(|&z| stable_mask(t, z, &window, resolution)).collect();
    let nested = masks
        .windows(2)
        .all(|w| w[0].iter().zip(&w[1]).all(|(&a, &b)| !a || b));
    Ok(StabilityReport {
        scheme: t.name().unwrap_or("(unnamed)").to_string(),
        z2: z2.to_vec(),
        csv,
        nested,
    })
}

// ---------------------------------------------------------------------------
// entropy
// ---------------------------------------------------------------------------

pub const ENTROPY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub diagnostics: Vec<StepDiagnostics>,
}

impl EntropyReport {
    pub fn series(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.entropy.unwrap_or(f64::NAN)).collect()
    }

    /// Largest one-step increase `S^{n+1} - S^n`.
    pub fn max_increase(&self) -> f64 {
        self.series().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn monotone(&self) -> bool {
        let s = self.series();
        s.iter().all(|x| x.is_finite()) && s.windows(2).all(|w| w[1] <= w[0] + ENTROPY_SLACK)
    }

    pub fn csv(&self) -> String {
        diagnostics_csv(&self.diagnostics)
    }
}

/// First-order upwind run of `steps` steps at `fraction` of the upwind
/// positivity step `c_sch dx / v_max`.
pub fn entropy_run(
    scheme: &TableauPair,
    f0: KineticField,
    eps: f64,
    steps: usize,
    fraction: f64,
) -> Result<EntropyReport> {
    let mut cfg = SimConfig::new(scheme.clone(), EpsProfile::Constant(eps), 0.0);
    cfg.spatial = SpatialScheme::Upwind1;
    cfg.time_step = TimeStepRule::Positivity { fraction };
    cfg.diagnostics.entropy = true;
    let dt = cfg.dt(f0.mesh(), f0.grid().max_speed())?;
    cfg.t_end = f0.time + steps as f64 * dt;
    let out = run(f0, &cfg)?;
    Ok(EntropyReport {
        diagnostics: out.diagnostics,
    })
}

// ---------------------------------------------------------------------------
// broadwell
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BroadwellParams {
    pub scheme: TableauPair,
    pub eps: f64,
    pub nx: usize,
    pub steps: usize,
    /// Fraction of the positivity step `c_sch dx / 12`.
    pub fraction: f64,
    pub limiter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadwellRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub momentum: f64,
    pub entropy: f64,
    pub min_value: f64,
    /// `max_j |z_j - (rho_j^2 + m_j^2) / (2 rho_j)|`
    pub closure_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BroadwellReport {
    pub records: Vec<BroadwellRecord>,
    pub snapshot: String,
}

impl BroadwellReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("step,time,mass,momentum,entropy,min_f,closure_residual\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.step,
                fmt_e(r.time),
                fmt_e(r.mass),
                fmt_e(r.momentum),
                fmt_e(r.entropy),
                fmt_e(r.min_value),
                fmt_e(r.closure_residual)
            ));
        }
        s
    }

    pub fn positive(&self) -> bool {
        self.records.iter().all(|r| r.min_value >= 0.0)
    }

    /// Largest per-step change of the `(mass, momentum)` totals relative to
    /// the total mass.
    pub fn max_drift(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| {
                let scale = w[0].mass.abs().max(f64::MIN_POSITIVE);
                ((w[1].mass - w[0].mass).abs().max((w[1].momentum - w[0].momentum).abs())) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Smooth data away from the equilibrium closure: `rho = 1 + 0.2 sin(pi x)`,
/// `m = 0.3 rho`, `z = 0.75 rho`.
pub fn broadwell_initial(nx: usize) -> Result<BroadwellField> {
    let mesh = periodic_mesh(nx)?;
    let triples: Vec<_> = (0..nx)
        .map(|j| {
            let rho = 1.0 + 0.2 * (std::f64::consts::PI * mesh.center(j)).sin();
            from_moments(rho, 0.3 * rho, 0.75 * rho)
        })
        .collect();
    Ok(BroadwellField::from_triples(&triples, mesh)?)
}

fn broadwell_record(f: &BroadwellField, step: usize) -> Result<BroadwellRecord> {
    let tot = f.totals();
    let closure = f
        .moments()
        .iter()
        .map(|&[rho, m, z]| (z - equilibrium_z(rho, m)).abs())
        .fold(0.0, f64::max);
    Ok(BroadwellRecord {
        step,
        time: f.time,
        mass: tot[0],
        momentum: tot[1],
        entropy: broadwell_entropy(f).unwrap_or(f64::NAN),
        min_value: f.min_value(),
        closure_residual: closure,
    })
}

pub fn broadwell(p: &BroadwellParams) -> Result<BroadwellReport> {
    let mut f = broadwell_initial(p.nx)?;
    let dt = p.fraction
        * broadwell_positivity_dt(&p.scheme, f.mesh())
            .context("scheme has no positivity time step; choose scheme_a or scheme_ars")?;
    let spatial = if p.limiter {
        SpatialScheme::Weno5Limited
    } else {
        SpatialScheme::Weno5Unlimited
    };
    let mut records = vec![broadwell_record(&f, 0)?];
    for n in 1..=p.steps {
        let (g, _) = broadwell_imex_step_with(&f, &p.scheme, dt, p.eps, spatial)?;
        f = g;
        records.push(broadwell_record(&f, n)?);
    }
    Ok(BroadwellReport {
        records,
        snapshot: f.snapshot_csv(),
    })
}
