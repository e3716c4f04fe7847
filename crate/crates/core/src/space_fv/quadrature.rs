//! Cell quadratures on the reference interval `[-1/2, 1/2]`.

/// Four-point Gauss-Lobatto rule, exact through degree 5.
pub struct Lobatto4;

impl Lobatto4 {
    // 1/sqrt(5)/2 = sqrt(5)/10
    pub const NODES: [f64; 4] = [-0.5, -0.223_606_797_749_978_96, 0.223_606_797_749_978_96, 0.5];
    pub const WEIGHTS: [f64; 4] = [1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0];
}

/// Three-point Gauss-Legendre rule, exact through degree 5.
pub struct Legendre3;

impl Legendre3 {
    // sqrt(3/5)/2
    pub const NODES: [f64; 3] = [-0.387_298_334_620_741_7, 0.0, 0.387_298_334_620_741_7];
    pub const WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
}

/// Both rules as plain tables, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTables {
    pub lobatto4: (Vec<f64>, Vec<f64>),
    pub legendre3: (Vec<f64>, Vec<f64>),
}

impl Default for QuadratureTables {
    fn default() -> Self {
        QuadratureTables {
            lobatto4: (Lobatto4::NODES.to_vec(), Lobatto4::WEIGHTS.to_vec()),
            legendre3: (Legendre3::NODES.to_vec(), Legendre3::WEIGHTS.to_vec()),
        }
    }
}

impl QuadratureTables {
    /// Largest error integrating `x^0 .. x^max_degree` over `[-1/2, 1/2]`.
    pub fn max_monomial_error(nodes: &[f64], weights: &[f64], max_degree: u32) -> f64 {
        (0..=max_degree)
            .map(|p| {
                let exact = if p % 2 == 1 {
                    0.0
                } else {
                    2.0 * 0.5f64.powi(p as i32 + 1) / (p as f64 + 1.0)
                };
                let q: f64 = nodes
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| w * x.powi(p as i32))
                    .sum();
                (q - exact).abs()
            })
            .fold(0.0, f64::max)
    }
}
