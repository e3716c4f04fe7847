//! Linear stability of corrected IMEX schemes.
//!
//! For the test equation `f' = lambda_1 f + lambda_2 f` with the first term
//! explicit and the second implicit, one step maps `f^n = 1` to
//! `P(z1, z2)` with `z_i = lambda_i dt`. The correction step contributes
//! the divisor `1 + alpha z2^2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tableau::TableauPair;

pub const CONTOUR_TOL: f64 = 1e-3;

/// Amplification factor `P(z1, z2)`.
pub fn amplification_factor(t: &TableauPair, z1: Complex64, z2: f64) -> Result<Complex64> {
    let nu = t.nu();
    let mut stages: Vec<Complex64> = Vec::with_capacity(nu);
    for i in 0..nu {
        let mut rhs = Complex64::new(1.0, 0.0);
        for (j, fj) in stages.iter().enumerate() {
            rhs += z1 * t.at(i, j) * fj + z2 * t.a(i, j) * fj;
        }
        let denom = 1.0 - t.a(i, i) * z2;
        if denom == 0.0 {
            return Err(Error::SingularStage { stage: i + 1 });
        }
        stages.push(rhs / denom);
    }
    let mut p = Complex64::new(1.0, 0.0);
    for (i, fi) in stages.iter().enumerate() {
        p += z1 * t.w_explicit()[i] * fi + z2 * t.w_implicit()[i] * fi;
    }
    Ok(p / (1.0 + t.alpha() * z2 * z2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            x_min: -6.0,
            x_max: 1.0,
            y_min: -5.0,
            y_max: 5.0,
        }
    }
}

impl Window {
    fn has_area(&self) -> bool {
        self.x_max > self.x_min && self.y_max > self.y_min
    }

    fn point(&self, resolution: usize, ix: usize, iy: usize) -> (f64, f64) {
        let n = (resolution - 1) as f64;
        (
            self.x_min + (self.x_max - self.x_min) * ix as f64 / n,
            self.y_min + (self.y_max - self.y_min) * iy as f64 / n,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySlice {
    pub z2: f64,
    pub window: Window,
    pub resolution: usize,
    /// Points `(x, y)` on `|P(x + iy, z2)| = 1`, one per crossed cell edge.
    pub boundary_points: Vec<(f64, f64)>,
}

/// `|P| - 1` sampled on a `resolution x resolution` grid, row-major in `y`.
/// A singular stage counts as unstable (`+inf`).
pub fn sample_grid(t: &TableauPair, z2: f64, window: &Window, resolution: usize) -> Vec<f64> {
    (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (x, y) = window.point(resolution, k % resolution, k / resolution);
            level(t, x, y, z2)
        })
        .collect()
}

fn level(t: &TableauPair, x: f64, y: f64, z2: f64) -> f64 {
    amplification_factor(t, Complex64::new(x, y), z2)
        .map(|p| p.norm() - 1.0)
        .unwrap_or(f64::INFINITY)
}

/// Stable set `|P| <= 1` on the sample grid.
pub fn stable_mask(t: &TableauPair, z2: f64, window: &Window, resolution: usize) -> Vec<bool> {
    sample_grid(t, z2, window, resolution)
        .into_iter()
        .map(|g| g <= 0.0)
        .collect()
}

/// Marching-squares extraction of the `|P| = 1` contour.
///
/// Every grid edge whose endpoints straddle the level set contributes one
/// point, first placed by linear interpolation and then refined along the
/// edge until `||P| - 1| <= CONTOUR_TOL`.
pub fn stability_boundary_slice(
    t: &TableauPair,
    z2: f64,
    window: Window,
    resolution: usize,
) -> Result<StabilitySlice> {
    if resolution < 16 {
        return Err(Error::InvalidConfig(format!(
            "stability grid resolution {resolution} is below 16"
        )));
    }
    let mut slice = StabilitySlice {
        z2,
        window,
        resolution,
        boundary_points: Vec::new(),
    };
    if !window.has_area() {
        return Ok(slice);
    }
    let g = sample_grid(t, z2, &window, resolution);
    let n = resolution;
    let mut edges = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let here = g[iy * n + ix];
            if ix + 1 < n && crosses(here, g[iy * n + ix + 1]) {
                edges.push(((ix, iy), (ix + 1, iy)));
            }
            if iy + 1 < n && crosses(here, g[(iy + 1) * n + ix]) {
                edges.push(((ix, iy), (ix, iy + 1)));
            }
        }
    }
    slice.boundary_points = edges
        .par_iter()
        .filter_map(|&((ax, ay), (bx, by))| {
            let a = window.point(n, ax, ay);
            let b = window.point(n, bx, by);
            refine(t, z2, a, b, g[ay * n + ax], g[by * n + bx])
        })
        .collect();
    Ok(slice)
}

fn crosses(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && ((a <= 0.0) != (b <= 0.0))
}

/// Illinois false position along the segment `a -> b`.
fn refine(
    t: &TableauPair,
    z2: f64,
    a: (f64, f64),
    b: (f64, f64),
    ga: f64,
    gb: f64,
) -> Option<(f64, f64)> {
    let at = |s: f64| (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
    let (mut s0, mut s1, mut g0, mut g1) = (0.0, 1.0, ga, gb);
    let mut side = 0;
    for _ in 0..100 {
        let s = (s0 * g1 - s1 * g0) / (g1 - g0);
        let p = at(s);
        let gs = level(t, p.0, p.1, z2);
        if gs.abs() <= CONTOUR_TOL * 1e-3 || (s1 - s0).abs() < 1e-15 {
            return Some(p);
        }
        if (gs <= 0.0) == (g0 <= 0.0) {
            s0 = s;
            g0 = gs;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        } else {
            s1 = s;
            g1 = gs;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        }
    }
    let p = at(0.5 * (s0 + s1));
    (level(t, p.0, p.1, z2).abs() <= CONTOUR_TOL).then_some(p)
}
