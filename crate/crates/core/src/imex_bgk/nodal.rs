//! Equilibrium data at the Gauss nodes of each cell, for relaxation rates
//! that vary inside a cell.

use rayon::prelude::*;

use crate::error::Result;
use crate::kinetic::{discrete_maxwellian_into, ConservedState, VelocityGrid};
use crate::space_fv::{scalar_gauss_points_into, Legendre3, RowBc, RowScratch};

/// Node values of the distribution and their Maxwellians.
///
/// The node states are the discrete moments of the reconstructed rows, so
/// relaxing each node towards its own Maxwellian and averaging with the
/// Legendre weights conserves the cell moments.
pub(crate) struct NodalEquilibrium {
    pub states: Vec<[ConservedState; 3]>,
    /// `k * n_x + j`.
    pub values: Vec<[f64; 3]>,
    /// `(3 j + l) * n_v + k`.
    pub nodal: Vec<f64>,
    /// `sum_l w_l M_{j,l}`, `j * n_v + k`.
    pub cell: Vec<f64>,
    /// Cells that fell back to constant reconstruction.
    pub fallback_cells: usize,
}

/// Builds the node data from cell values `values[k * n_x + j]` with cell
/// moments `u` (assumed admissible).
///
/// Rows with negative entries are reconstructed as constants. A cell whose
/// node states are not admissible or not representable on the grid uses
/// constant reconstruction in every row.
pub(crate) fn nodal_equilibrium(
    values: &[f64],
    u: &[ConservedState],
    bcs: &[RowBc],
    grid: &VelocityGrid,
) -> Result<NodalEquilibrium> {
    let n_x = u.len();
    let n_v = grid.n_v();
    let mut gv = vec![[0.0; 3]; values.len()];
    gv.par_chunks_mut(n_x)
        .enumerate()
        .for_each_init(RowScratch::default, |s, (k, o)| {
            let row = &values[k * n_x..(k + 1) * n_x];
            if scalar_gauss_points_into(row, &bcs[k], s, o).is_err() {
                for (g, &f) in o.iter_mut().zip(row) {
                    *g = [f; 3];
                }
            }
        });

    let mut acc = vec![[[0.0f64; 3]; 3]; n_x];
    for (k, &v) in grid.nodes().iter().enumerate() {
        let phi = [1.0, v, 0.5 * v * v];
        for (a, g) in acc.iter_mut().zip(&gv[k * n_x..(k + 1) * n_x]) {
            for l in 0..3 {
                for c in 0..3 {
                    a[l][c] += phi[c] * g[l];
                }
            }
        }
    }
    let dv = grid.dv();
    let mut states: Vec<[ConservedState; 3]> = acc
        .iter()
        .map(|a| a.map(|m| ConservedState::new(m[0] * dv, m[1] * dv, m[2] * dv)))
        .collect();

    let mut nodal = vec![0.0; n_x * 3 * n_v];
    let failed: Vec<bool> = nodal
        .par_chunks_mut(3 * n_v)
        .zip(states.par_iter_mut())
        .enumerate()
        .map(|(j, (nd, st))| node_maxwellians(st, u[j], grid, nd))
        .collect::<Result<_>>()?;
    for (j, _) in failed.iter().enumerate().filter(|(_, &f)| f) {
        for k in 0..n_v {
            gv[k * n_x + j] = [values[k * n_x + j]; 3];
        }
    }

    let w = Legendre3::WEIGHTS;
    let mut cell = vec![0.0; n_x * n_v];
    cell.par_chunks_mut(n_v).enumerate().for_each(|(j, c)| {
        let nd = &nodal[3 * j * n_v..3 * (j + 1) * n_v];
        for (k, o) in c.iter_mut().enumerate() {
            *o = w[0] * nd[k] + w[1] * nd[n_v + k] + w[2] * nd[2 * n_v + k];
        }
    });
    Ok(NodalEquilibrium {
        states,
        values: gv,
        nodal,
        cell,
        fallback_cells: failed.iter().filter(|&&f| f).count(),
    })
}

/// Writes the three node Maxwellians of one cell into `nd`. Returns `true`
/// when the node states had to be replaced by the cell state.
fn node_maxwellians(
    st: &mut [ConservedState; 3],
    cell: ConservedState,
    grid: &VelocityGrid,
    nd: &mut [f64],
) -> Result<bool> {
    let n_v = grid.n_v();
    let ok = st.iter().all(|s| s.is_admissible())
        && (0..3).all(|l| discrete_maxwellian_into(st[l], grid, &mut nd[l * n_v..(l + 1) * n_v]).is_ok());
    if ok {
        return Ok(false);
    }
    *st = [cell; 3];
    let (first, rest) = nd.split_at_mut(n_v);
    discrete_maxwellian_into(cell, grid, first)?;
    rest[..n_v].copy_from_slice(first);
    rest[n_v..].copy_from_slice(first);
    Ok(true)
}
