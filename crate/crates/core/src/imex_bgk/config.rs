use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic::Tau;
use crate::space_fv::{SpatialMesh, SpatialScheme, POSITIVITY_CFL};
use crate::tableau::{scheme_cfl, TableauPair};

/// Knudsen number as a function of `x`, evaluated pointwise at Gauss nodes.
#[derive(Clone)]
pub enum EpsProfile {
    Constant(f64),
    /// `eps0 + tanh(1 - 11(x-1)) + tanh(1 + 11(x-1))`
    MixedRegime { eps0: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl EpsProfile {
    pub fn mixed_regime() -> Self {
        EpsProfile::MixedRegime { eps0: 1e-5 }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            EpsProfile::Constant(e) => *e,
            EpsProfile::MixedRegime { eps0 } => {
                eps0 + (1.0 - 11.0 * (x - 1.0)).tanh() + (1.0 + 11.0 * (x - 1.0)).tanh()
            }
            EpsProfile::Custom(f) => f(x),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            EpsProfile::Constant(e) => Some(*e),
            _ => None,
        }
    }

    /// Smallest value over the Gauss nodes of `mesh`.
    pub fn min_on(&self, mesh: &SpatialMesh) -> f64 {
        match self {
            EpsProfile::Constant(e) => *e,
            _ => (0..mesh.n_x())
                .flat_map(|j| mesh.gauss_nodes(j))
                .map(|x| self.eval(x))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl fmt::Debug for EpsProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsProfile::Constant(e) => write!(f, "Constant({e:e})"),
            EpsProfile::MixedRegime { eps0 } => write!(f, "MixedRegime({eps0:e})"),
            EpsProfile::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// How `dt` is chosen from the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStepRule {
    /// `fraction * c_sch * C_x * dx / v_max` with `C_x = 1/12` for limited
    /// WENO and `1` for first-order upwind.
    Positivity { fraction: f64 },
    /// `number * dx / v_max`
    Cfl { number: f64 },
    Fixed { dt: f64 },
}

/// First-order approximation whose rate enters the correction step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FstarChoice {
    /// `f* = f^n`
    #[default]
    Fn,
    /// `f* = f~^{n+1}`
    Fnp1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityMode {
    /// Negative stage data beyond round-off is an error.
    Strict,
    /// Negative values are counted and carried along.
    Track,
}

/// Round-off band below zero that is clamped to zero before equilibria are
/// built.
pub const CLAMP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticToggles {
    pub entropy: bool,
    pub equilibrium_distance: bool,
    /// Recompute every stage right-hand side in Shu-Osher form and record
    /// the largest disagreement with the Butcher form.
    pub shu_osher_check: bool,
}

impl Default for DiagnosticToggles {
    fn default() -> Self {
        DiagnosticToggles {
            entropy: true,
            equilibrium_distance: false,
            shu_osher_check: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scheme: TableauPair,
    pub eps: EpsProfile,
    pub tau: Tau,
    pub t_end: f64,
    pub time_step: TimeStepRule,
    pub spatial: SpatialScheme,
    pub fstar: FstarChoice,
    pub positivity: PositivityMode,
    pub diagnostics: DiagnosticToggles,
}

impl SimConfig {
    /// Positivity-preserving defaults: limited WENO, `dt` at half the
    /// admissible step, strict mode when the scheme is positivity-feasible.
    pub fn new(scheme: TableauPair, eps: EpsProfile, t_end: f64) -> Self {
        let positivity = if scheme_cfl(&scheme).is_some() {
            PositivityMode::Strict
        } else {
            PositivityMode::Track
        };
        SimConfig {
            scheme,
            eps,
            tau: Tau::unit(),
            t_end,
            time_step: TimeStepRule::Positivity { fraction: 0.5 },
            spatial: SpatialScheme::Weno5Limited,
            fstar: FstarChoice::Fn,
            positivity,
            diagnostics: DiagnosticToggles::default(),
        }
    }

    /// Time step for `mesh` with maximal speed `v_max`.
    pub fn dt(&self, mesh: &SpatialMesh, v_max: f64) -> Result<f64> {
        let h = mesh.dx() / v_max;
        let dt = match self.time_step {
            TimeStepRule::Positivity { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "positivity fraction {fraction} outside (0, 1]"
                    )));
                }
                let c_sch = scheme_cfl(&self.scheme).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "scheme {} has no positivity CFL; choose a CFL or fixed time step",
                        self.scheme.name().unwrap_or("(unnamed)")
                    ))
                })?;
                let cx = match self.spatial {
                    SpatialScheme::Upwind1 => 1.0,
                    _ => POSITIVITY_CFL,
                };
                fraction * c_sch * cx * h
            }
            TimeStepRule::Cfl { number } => number * h,
            TimeStepRule::Fixed { dt } => dt,
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("time step {dt} must be positive")));
        }
        Ok(dt)
    }
}
