//! Scaling limiter keeping the Lobatto point values of a cell nonnegative.

use super::quadrature::Lobatto4;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitedPair {
    /// Limited value at the left edge, `f~+_{j-1/2}`.
    pub left: f64,
    /// Limited value at the right edge, `f~-_{j+1/2}`.
    pub right: f64,
    pub theta: f64,
}

/// Interior Lobatto value implied by the cell average and the edge values.
#[inline]
pub(crate) fn xi(fbar: f64, left: f64, right: f64) -> f64 {
    let w = Lobatto4::WEIGHTS;
    (fbar - w[0] * left - w[3] * right) / (w[1] + w[2])
}

/// Scales the edge values of cell `j` toward `fbar` so that both edges and
/// the implied interior value are nonnegative.
pub fn positivity_limit_interfaces(fbar: f64, right: f64, left: f64) -> Result<LimitedPair> {
    if !(fbar >= 0.0) {
        return Err(Error::Negative {
            index: 0,
            value: fbar,
        });
    }
    Ok(limit_unchecked(fbar, right, left))
}

#[inline]
pub(crate) fn limit_unchecked(fbar: f64, right: f64, left: f64) -> LimitedPair {
    let m = left.min(right).min(xi(fbar, left, right));
    if m >= 0.0 {
        return LimitedPair {
            left,
            right,
            theta: 1.0,
        };
    }
    let theta = (fbar / (fbar - m)).min(1.0);
    LimitedPair {
        left: theta * (left - fbar) + fbar,
        right: theta * (right - fbar) + fbar,
        theta,
    }
}
