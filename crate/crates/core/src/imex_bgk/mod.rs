//! Corrected IMEX Runge-Kutta schemes for the 1D BGK equation.

mod config;
mod diagnostics;
mod field;
mod nodal;
mod step;

pub use config::{
    DiagnosticToggles, EpsProfile, FstarChoice, PositivityMode, SimConfig, TimeStepRule, CLAMP_TOL,
};
pub use diagnostics::{diagnostics_csv, entropy, StepDiagnostics, DIAGNOSTICS_HEADER};
pub use field::KineticField;
pub(crate) use nodal::nodal_equilibrium;
pub use step::{run, run_with, RunOutput, Stepper};
