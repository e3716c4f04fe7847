//! Finite-volume machinery in `x`: WENO5 reconstruction, the
//! scaling positivity limiter, upwind fluxes and Gauss-point states.

mod gauss_points;
mod limiter;
mod quadrature;
mod transport;
mod weno;

pub use gauss_points::{
    cell_maxwellian, cell_maxwellian_into, cell_maxwellian_or_average_into, gauss_eval_matrix, gauss_point_states,
    gauss_point_states_into, scalar_gauss_points, scalar_gauss_points_into, StateBc,
};
pub use limiter::{positivity_limit_interfaces, LimitedPair};
pub use quadrature::{Legendre3, Lobatto4, QuadratureTables};
pub use transport::{
    transport_forward_euler, transport_rhs_row, upwind_flux, RowScratch, SpatialScheme,
    TransportResult, POSITIVITY_CFL,
};
pub use weno::{weno5_cell, weno5_interfaces, InterfaceValues, WenoWeights};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ghost cells per side; enough for the five-point WENO stencil of the
/// cells adjacent to the boundary.
pub const GHOST: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Ghost cells frozen at their initial values.
    DirichletGhost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialMesh {
    n_x: usize,
    x_lo: f64,
    x_hi: f64,
    dx: f64,
    boundary: Boundary,
}

impl SpatialMesh {
    pub fn new(n_x: usize, x_lo: f64, x_hi: f64, boundary: Boundary) -> Result<Self> {
        if n_x < 5 {
            return Err(Error::InvalidMesh(format!(
                "WENO5 needs at least 5 cells, got {n_x}"
            )));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "empty domain [{x_lo}, {x_hi}]"
            )));
        }
        Ok(SpatialMesh {
            n_x,
            x_lo,
            x_hi,
            dx: (x_hi - x_lo) / n_x as f64,
            boundary,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_lo + (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.center(j)).collect()
    }

    /// Physical coordinates of the three Legendre nodes of cell `j`.
    pub fn gauss_nodes(&self, j: usize) -> [f64; 3] {
        let c = self.center(j);
        Legendre3::NODES.map(|s| c + s * self.dx)
    }
}

/// Boundary data of one scalar row: either periodic wrap or frozen ghosts
/// `left = [f_-3, f_-2, f_-1]`, `right = [f_n, f_n+1, f_n+2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowBc {
    Periodic,
    Frozen { left: [f64; 3], right: [f64; 3] },
}

impl RowBc {
    /// Ghosts replicating the boundary cells of `row`.
    pub fn frozen_from(row: &[f64]) -> Self {
        let n = row.len();
        RowBc::Frozen {
            left: [row[0]; 3],
            right: [row[n - 1]; 3],
        }
    }
}

/// Writes `row` padded with [`GHOST`] cells per side into `ext`.
pub fn extend_row(row: &[f64], bc: &RowBc, ext: &mut Vec<f64>) {
    let n = row.len();
    ext.clear();
    match bc {
        RowBc::Periodic => {
            for g in 0..GHOST {
                ext.push(row[(n + g - GHOST) % n]);
            }
            ext.extend_from_slice(row);
            for g in 0..GHOST {
                ext.push(row[g % n]);
            }
        }
        RowBc::Frozen { left, right } => {
            ext.extend_from_slice(left);
            ext.extend_from_slice(row);
            ext.extend_from_slice(right);
        }
    }
}
