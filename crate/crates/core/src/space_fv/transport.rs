//! Conservative upwind transport of one velocity row.

use serde::{Deserialize, Serialize};

use super::limiter::limit_unchecked;
use super::weno::{cell_edges, WenoWeights};
use super::{extend_row, RowBc, SpatialMesh, GHOST};

/// `|v| dt / dx` bound under which a forward-Euler step of the limited
/// scheme keeps cell averages nonnegative (the end-point Lobatto weight).
pub const POSITIVITY_CFL: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialScheme {
    Weno5Limited,
    Weno5Unlimited,
    /// First-order upwind with piecewise constant cells.
    Upwind1,
}

impl SpatialScheme {
    pub fn limited(&self) -> bool {
        matches!(self, SpatialScheme::Weno5Limited)
    }
}

/// Reusable buffers for row operations.
#[derive(Debug, Default, Clone)]
pub struct RowScratch {
    pub(crate) ext: Vec<f64>,
    pub(crate) left: Vec<f64>,
    pub(crate) right: Vec<f64>,
    pub(crate) flux: Vec<f64>,
}

#[inline]
pub fn upwind_flux(v: f64, f_minus: f64, f_plus: f64) -> f64 {
    if v >= 0.0 {
        v * f_minus
    } else {
        v * f_plus
    }
}

/// Writes `T(f)_j = -(F_{j+1/2} - F_{j-1/2}) / dx` into `out`.
///
/// Cells with a negative average are left unlimited, so the limited scheme
/// degrades gracefully on data that is already non-positive.
pub fn transport_rhs_row(
    row: &[f64],
    bc: &RowBc,
    v: f64,
    dx: f64,
    scheme: SpatialScheme,
    s: &mut RowScratch,
    out: &mut [f64],
) {
    let n = row.len();
    extend_row(row, bc, &mut s.ext);
    s.flux.clear();
    match scheme {
        SpatialScheme::Upwind1 => {
            for i in 0..=n {
                let c = GHOST + i;
                s.flux.push(upwind_flux(v, s.ext[c - 1], s.ext[c]));
            }
        }
        SpatialScheme::Weno5Limited | SpatialScheme::Weno5Unlimited => {
            cell_edges(&s.ext, WenoWeights::JiangShu, &mut s.left, &mut s.right);
            if scheme.limited() {
                for e in 0..n + 2 {
                    let fbar = s.ext[e + GHOST - 1];
                    if fbar >= 0.0 {
                        let p = limit_unchecked(fbar, s.right[e], s.left[e]);
                        s.left[e] = p.left;
                        s.right[e] = p.right;
                    }
                }
            }
            for i in 0..=n {
                s.flux.push(upwind_flux(v, s.right[i], s.left[i + 1]));
            }
        }
    }
    let inv = 1.0 / dx;
    for (j, o) in out.iter_mut().enumerate() {
        *o = -(s.flux[j + 1] - s.flux[j]) * inv;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub values: Vec<f64>,
    /// `|v| dt / dx` exceeded the positivity bound of the chosen scheme.
    pub cfl_exceeded: bool,
}

/// One forward-Euler transport step `f - dt/dx (F_{j+1/2} - F_{j-1/2})`.
pub fn transport_forward_euler(
    row: &[f64],
    bc: &RowBc,
    v: f64,
    dt: f64,
    mesh: &SpatialMesh,
    scheme: SpatialScheme,
) -> TransportResult {
    let mut s = RowScratch::default();
    let mut t = vec![0.0; row.len()];
    transport_rhs_row(row, bc, v, mesh.dx(), scheme, &mut s, &mut t);
    let values = row.iter().zip(&t).map(|(f, d)| f + dt * d).collect();
    let bound = match scheme {
        SpatialScheme::Upwind1 => 1.0,
        _ => POSITIVITY_CFL,
    };
    TransportResult {
        values,
        cfl_exceeded: v.abs() * dt / mesh.dx() > bound * (1.0 + 1e-12),
    }
}
