use serde::Serialize;

use super::field::KineticField;
use crate::error::{Error, Result};

/// Per-step record. Step 0 describes the initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    /// Negative entries of `f^{n+1}`.
    pub negative_cell_count: usize,
    /// Largest number of negative entries in any stage value.
    pub negative_stage_count: usize,
    /// Negative entries of the explicit stage data, summed over stages,
    /// after the round-off clamp.
    pub negative_rhs_count: usize,
    pub min_cell_value: f64,
    pub entropy: Option<f64>,
    /// `max |f - E(f)|` with `E` the equilibrium map of the scheme.
    pub max_distance_to_equilibrium: Option<f64>,
    /// Largest difference between the Butcher-form and Shu-Osher-form
    /// stage data.
    pub shu_osher_discrepancy: Option<f64>,
    pub cfl_exceeded: bool,
}

impl StepDiagnostics {
    /// Record for a field without stage information.
    pub fn of_field(field: &KineticField, step: usize, dt: f64, with_entropy: bool) -> Self {
        let tot = field.totals();
        StepDiagnostics {
            step,
            time: field.time,
            dt,
            mass: tot.rho,
            momentum: tot.m,
            energy: tot.energy,
            negative_cell_count: field.negative_count(),
            negative_stage_count: 0,
            negative_rhs_count: 0,
            min_cell_value: field.min_value(),
            entropy: if with_entropy { entropy(field).ok() } else { None },
            max_distance_to_equilibrium: None,
            shu_osher_discrepancy: None,
            cfl_exceeded: false,
        }
    }
}

/// `dx dv sum f log f` with `0 log 0 = 0`.
pub fn entropy(field: &KineticField) -> Result<f64> {
    let mut h = 0.0;
    for (i, &f) in field.values().iter().enumerate() {
        if f < 0.0 {
            return Err(Error::Negative { index: i, value: f });
        }
        if f > 0.0 {
            h += f * f.ln();
        }
    }
    Ok(h * field.mesh().dx() * field.grid().dv())
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,mass,momentum,energy,entropy,neg_cells,min_f";

/// Diagnostics table; a missing entropy is written as NaN.
pub fn diagnostics_csv(records: &[StepDiagnostics]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            r.step,
            r.time,
            r.mass,
            r.momentum,
            r.energy,
            r.entropy.unwrap_or(f64::NAN),
            r.negative_cell_count,
            r.min_cell_value
        ));
    }
    s
}
