//! Fifth-order finite-volume WENO reconstruction (Jiang-Shu weights).

use super::{extend_row, RowBc, GHOST};

const EPS_W: f64 = 1e-6;
const D: [f64; 3] = [0.1, 0.6, 0.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WenoWeights {
    #[default]
    JiangShu,
    /// Optimal linear weights: the underlying fifth-order linear scheme.
    Linear,
}

/// Edge values `(left, right)` of the middle cell of the five averages `s`.
#[inline]
pub fn weno5_cell(s: [f64; 5], weights: WenoWeights) -> (f64, f64) {
    let [a, b, c, d, e] = s;
    // candidate values at the right edge
    let r0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let r1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let r2 = (2.0 * c + 5.0 * d - e) / 6.0;
    // mirrored candidates at the left edge
    let l0 = (2.0 * e - 7.0 * d + 11.0 * c) / 6.0;
    let l1 = (-d + 5.0 * c + 2.0 * b) / 6.0;
    let l2 = (2.0 * c + 5.0 * b - a) / 6.0;
    match weights {
        WenoWeights::Linear => (
            D[0] * l0 + D[1] * l1 + D[2] * l2,
            D[0] * r0 + D[1] * r1 + D[2] * r2,
        ),
        WenoWeights::JiangShu => {
            let t = a - 2.0 * b + c;
            let u = a - 4.0 * b + 3.0 * c;
            let beta0 = 13.0 / 12.0 * t * t + 0.25 * u * u;
            let t = b - 2.0 * c + d;
            let u = b - d;
            let beta1 = 13.0 / 12.0 * t * t + 0.25 * u * u;
            let t = c - 2.0 * d + e;
            let u = 3.0 * c - 4.0 * d + e;
            let beta2 = 13.0 / 12.0 * t * t + 0.25 * u * u;
            let g0 = 1.0 / ((EPS_W + beta0) * (EPS_W + beta0));
            let g1 = 1.0 / ((EPS_W + beta1) * (EPS_W + beta1));
            let g2 = 1.0 / ((EPS_W + beta2) * (EPS_W + beta2));
            let (ar0, ar1, ar2) = (D[0] * g0, D[1] * g1, D[2] * g2);
            let right = (ar0 * r0 + ar1 * r1 + ar2 * r2) / (ar0 + ar1 + ar2);
            // the left-edge stencil k uses the smoothness of right stencil 2-k
            let (al0, al1, al2) = (D[0] * g2, D[1] * g1, D[2] * g0);
            let left = (al0 * l0 + al1 * l1 + al2 * l2) / (al0 + al1 + al2);
            (left, right)
        }
    }
}

/// Interface values at `x_{i-1/2}`, `i = 0..=n`: `minus[i]` comes from cell
/// `i-1`, `plus[i]` from cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceValues {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

/// Edge values of the extended cells `-1..=n` (index shifted by one) from a
/// row already padded with [`GHOST`] cells per side.
pub(crate) fn cell_edges(ext: &[f64], weights: WenoWeights, left: &mut Vec<f64>, right: &mut Vec<f64>) {
    let n = ext.len() - 2 * GHOST;
    left.clear();
    right.clear();
    for c in (GHOST - 1)..(GHOST + n + 1) {
        let s = [ext[c - 2], ext[c - 1], ext[c], ext[c + 1], ext[c + 2]];
        let (l, r) = weno5_cell(s, weights);
        left.push(l);
        right.push(r);
    }
}

pub fn weno5_interfaces(row: &[f64], bc: &RowBc, weights: WenoWeights) -> InterfaceValues {
    let mut ext = Vec::with_capacity(row.len() + 2 * GHOST);
    extend_row(row, bc, &mut ext);
    let (mut left, mut right) = (Vec::new(), Vec::new());
    cell_edges(&ext, weights, &mut left, &mut right);
    let n = row.len();
    // extended cell e = j + 1
    InterfaceValues {
        minus: (0..=n).map(|i| right[i]).collect(),
        plus: (0..=n).map(|i| left[i + 1]).collect(),
    }
}
