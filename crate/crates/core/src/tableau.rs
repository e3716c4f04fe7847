//! Double Butcher tableaus for corrected IMEX Runge-Kutta schemes.
//!
//! A [`TableauPair`] holds the explicit matrix `Ã` (strictly lower
//! triangular), the implicit matrix `A` (lower triangular), the two weight
//! vectors and the correction weight `alpha` used by the final step
//! `f^{n+1} = f~^{n+1} - alpha dt^2 / eps^2 Q'(f*) Q(f^{n+1})`.
//!
//! Besides the container itself this module verifies order conditions
//! (with the alpha-shifted sums) and runs the positivity analysis that
//! rewrites each stage as a convex combination of forward-Euler steps,
//! yielding the scheme CFL factor `c_sch`.

use std::fmt;
use std::path::Path;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inequalities `x >= 0` are accepted for `x >= -POSITIVITY_TOL`; the
/// published type A coefficients are truncated to 14 digits.
pub const POSITIVITY_TOL: f64 = 1e-12;

const STRUCTURE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(alias = "A", alias = "typeA", alias = "type_a")]
    TypeA,
    #[serde(alias = "ARS", alias = "typeARS", alias = "type_ars")]
    TypeARS,
    #[serde(alias = "CK", alias = "typeCK", alias = "type_ck")]
    TypeCK,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::TypeA => "type A",
            SchemeKind::TypeARS => "type ARS",
            SchemeKind::TypeCK => "type CK",
        })
    }
}

/// On-disk layout of a tableau; matrices are row-major `nu * nu` arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTableau {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    nu: usize,
    a_explicit: Vec<f64>,
    a_implicit: Vec<f64>,
    w_explicit: Vec<f64>,
    w_implicit: Vec<f64>,
    alpha: f64,
    kind: SchemeKind,
    gsa: bool,
}

/// Explicit/implicit Butcher pair with correction weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTableau", into = "RawTableau")]
pub struct TableauPair {
    name: Option<String>,
    nu: usize,
    a_explicit: Vec<f64>,
    a_implicit: Vec<f64>,
    w_explicit: Vec<f64>,
    w_implicit: Vec<f64>,
    alpha: f64,
    kind: SchemeKind,
    gsa: bool,
}

impl TryFrom<RawTableau> for TableauPair {
    type Error = Error;

    fn try_from(raw: RawTableau) -> Result<Self> {
        let t = TableauPair {
            name: raw.name,
            nu: raw.nu,
            a_explicit: raw.a_explicit,
            a_implicit: raw.a_implicit,
            w_explicit: raw.w_explicit,
            w_implicit: raw.w_implicit,
            alpha: raw.alpha,
            kind: raw.kind,
            gsa: raw.gsa,
        };
        t.validate()?;
        Ok(t)
    }
}

impl From<TableauPair> for RawTableau {
    fn from(t: TableauPair) -> Self {
        RawTableau {
            name: t.name,
            nu: t.nu,
            a_explicit: t.a_explicit,
            a_implicit: t.a_implicit,
            w_explicit: t.w_explicit,
            w_implicit: t.w_implicit,
            alpha: t.alpha,
            kind: t.kind,
            gsa: t.gsa,
        }
    }
}

impl TableauPair {
    /// Builds and validates a tableau. Matrices are row-major `nu * nu`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nu: usize,
        a_explicit: Vec<f64>,
        a_implicit: Vec<f64>,
        w_explicit: Vec<f64>,
        w_implicit: Vec<f64>,
        alpha: f64,
        kind: SchemeKind,
        gsa: bool,
    ) -> Result<Self> {
        RawTableau {
            name: None,
            nu,
            a_explicit,
            a_implicit,
            w_explicit,
            w_implicit,
            alpha,
            kind,
            gsa,
        }
        .try_into()
    }

    /// GSA tableau whose weights are the last rows of the two matrices.
    pub fn stiffly_accurate(
        nu: usize,
        a_explicit: Vec<f64>,
        a_implicit: Vec<f64>,
        alpha: f64,
        kind: SchemeKind,
    ) -> Result<Self> {
        if nu == 0 || a_explicit.len() != nu * nu || a_implicit.len() != nu * nu {
            return Err(Error::InvalidTableau(format!(
                "matrices must have {} entries",
                nu * nu
            )));
        }
        let w_explicit = a_explicit[(nu - 1) * nu..].to_vec();
        let w_implicit = a_implicit[(nu - 1) * nu..].to_vec();
        Self::new(
            nu, a_explicit, a_implicit, w_explicit, w_implicit, alpha, kind, true,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    /// `ã_ij`, zero-based indices.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a_explicit[i * self.nu + j]
    }

    /// `a_ij`, zero-based indices.
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a_implicit[i * self.nu + j]
    }

    pub fn w_explicit(&self) -> &[f64] {
        &self.w_explicit
    }

    pub fn w_implicit(&self) -> &[f64] {
        &self.w_implicit
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn is_gsa(&self) -> bool {
        self.gsa
    }

    fn validate(&self) -> Result<()> {
        let nu = self.nu;
        let bad = |msg: String| Err(Error::InvalidTableau(msg));
        if nu == 0 {
            return bad("stage count must be at least 1".into());
        }
        if self.a_explicit.len() != nu * nu || self.a_implicit.len() != nu * nu {
            return bad(format!("matrices must have nu*nu = {} entries", nu * nu));
        }
        if self.w_explicit.len() != nu || self.w_implicit.len() != nu {
            return bad(format!("weight vectors must have {nu} entries"));
        }
        let all = self
            .a_explicit
            .iter()
            .chain(&self.a_implicit)
            .chain(&self.w_explicit)
            .chain(&self.w_implicit)
            .chain(std::iter::once(&self.alpha));
        if all.into_iter().any(|x| !x.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        if self.alpha < 0.0 {
            return bad(format!("alpha = {} must be nonnegative", self.alpha));
        }
        for i in 0..nu {
            for j in i..nu {
                if self.at(i, j) != 0.0 {
                    return bad(format!(
                        "explicit matrix must be strictly lower triangular (entry {},{})",
                        i + 1,
                        j + 1
                    ));
                }
                if j > i && self.a(i, j) != 0.0 {
                    return bad(format!(
                        "implicit matrix must be lower triangular (entry {},{})",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        if self.gsa {
            for i in 0..nu {
                if (self.w_explicit[i] - self.at(nu - 1, i)).abs() > STRUCTURE_TOL
                    || (self.w_implicit[i] - self.a(nu - 1, i)).abs() > STRUCTURE_TOL
                {
                    return bad(format!(
                        "GSA requires the weights to equal the last matrix rows (index {})",
                        i + 1
                    ));
                }
            }
        }
        match self.kind {
            SchemeKind::TypeA => {
                if let Some(i) = (0..nu).find(|&i| self.a(i, i) == 0.0) {
                    return bad(format!("type A requires a_ii != 0 (i = {})", i + 1));
                }
            }
            SchemeKind::TypeARS => {
                if (0..nu).any(|k| self.a(0, k) != 0.0 || self.a(k, 0) != 0.0) {
                    return bad("type ARS requires a zero first row and column in A".into());
                }
                if self.w_implicit[0] != 0.0 {
                    return bad("type ARS requires w_1 = 0".into());
                }
                if let Some(i) = (1..nu).find(|&i| self.a(i, i) == 0.0) {
                    return bad(format!("type ARS requires a_ii != 0 (i = {})", i + 1));
                }
            }
            SchemeKind::TypeCK => {
                if (0..nu).any(|k| self.a(0, k) != 0.0) {
                    return bad("type CK requires a zero first row in A".into());
                }
            }
        }
        Ok(())
    }
}

/// Abscissae `c~_i = sum_{j<i} ã_ij` and `c_i = sum_{j<=i} a_ij`.
pub fn stage_weights(t: &TableauPair) -> (Vec<f64>, Vec<f64>) {
    let nu = t.nu;
    let c_tilde = (0..nu).map(|i| (0..i).map(|j| t.at(i, j)).sum()).collect();
    let c = (0..nu).map(|i| (0..=i).map(|j| t.a(i, j)).sum()).collect();
    (c_tilde, c)
}

// ---------------------------------------------------------------------------
// Order conditions
// ---------------------------------------------------------------------------

/// Which first-order approximation `f*` the correction uses; only the
/// third-order conditions depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionVariant {
    /// `f* = f^n`
    FstarFn,
    /// `f* = f~^{n+1}` or `f^{n+1}`
    FstarFnp1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderResidual {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub order: u8,
    pub variant: CorrectionVariant,
    pub residuals: Vec<OrderResidual>,
}

impl OrderReport {
    pub fn max_abs(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.value.abs())
            .fold(0.0, f64::max)
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }
}

impl fmt::Display for OrderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order conditions up to order {} ({:?})", self.order, self.variant)?;
        for r in &self.residuals {
            writeln!(f, "  {:<28} {:>+.6e}", r.name, r.value)?;
        }
        write!(f, "  max |residual| = {:.3e}", self.max_abs())
    }
}

/// Signed residuals of the order conditions of the corrected scheme.
///
/// Orders above 3 are clamped to 3. `variant` only matters for order 3.
pub fn check_order_conditions(
    t: &TableauPair,
    order: u8,
    variant: CorrectionVariant,
) -> OrderReport {
    let order = order.clamp(1, 3);
    let nu = t.nu;
    let (ct, c) = stage_weights(t);
    let wt = &t.w_explicit;
    let w = &t.w_implicit;
    let alpha = t.alpha;
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let dot3 = |x: &[f64], y: &[f64], z: &[f64]| -> f64 {
        x.iter().zip(y).zip(z).map(|((a, b), c)| a * b * c).sum()
    };
    // sum_{i,j} x_i M_ij y_j
    let quad = |x: &[f64], explicit: bool, y: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..nu {
            for j in 0..nu {
                let m = if explicit { t.at(i, j) } else { t.a(i, j) };
                s += x[i] * m * y[j];
            }
        }
        s
    };

    let mut res = Vec::new();
    let mut push = |name: &str, value: f64| {
        res.push(OrderResidual {
            name: name.to_string(),
            value,
        })
    };
    push("sum(wt)-1", wt.iter().sum::<f64>() - 1.0);
    push("sum(w)-1", w.iter().sum::<f64>() - 1.0);
    if order >= 2 {
        push("sum(wt*ct)-1/2", dot(wt, &ct) - 0.5);
        push("sum(wt*c)-1/2", dot(wt, &c) - 0.5);
        push("sum(w*ct)-1/2", dot(w, &ct) - 0.5);
        push("sum(w*c)-alpha-1/2", dot(w, &c) - alpha - 0.5);
    }
    if order >= 3 {
        let sixth = 1.0 / 6.0;
        let third = 1.0 / 3.0;
        push("sum(wt*At*ct)-1/6", quad(wt, true, &ct) - sixth);
        push("sum(wt*At*c)-1/6", quad(wt, true, &c) - sixth);
        push("sum(wt*A*ct)-1/6", quad(wt, false, &ct) - sixth);
        push("sum(wt*A*c)-1/6", quad(wt, false, &c) - sixth);
        push("sum(w*At*ct)-1/6", quad(w, true, &ct) - sixth);
        push("sum(w*At*c)-1/6", quad(w, true, &c) - sixth);
        push("sum(w*A*ct)-alpha-1/6", quad(w, false, &ct) - alpha - sixth);
        push("sum(w*A*c)-alpha-1/6", quad(w, false, &c) - alpha - sixth);
        push("sum(wt*ct*ct)-1/3", dot3(wt, &ct, &ct) - third);
        push("sum(wt*ct*c)-1/3", dot3(wt, &ct, &c) - third);
        push("sum(wt*c*c)-1/3", dot3(wt, &c, &c) - third);
        push("sum(w*ct*ct)-1/3", dot3(w, &ct, &ct) - third);
        match variant {
            CorrectionVariant::FstarFn => {
                push("sum(w*ct*c)-1/3", dot3(w, &ct, &c) - third);
                push("sum(w*c*c)-1/3", dot3(w, &c, &c) - third);
            }
            CorrectionVariant::FstarFnp1 => {
                push("sum(w*ct*c)-alpha-1/3", dot3(w, &ct, &c) - alpha - third);
                push("sum(w*c*c)-2alpha-1/3", dot3(w, &c, &c) - 2.0 * alpha - third);
            }
        }
    }
    OrderReport {
        order,
        variant,
        residuals: res,
    }
}

// ---------------------------------------------------------------------------
// Positivity analysis
// ---------------------------------------------------------------------------

/// Convex-combination coefficients of the stage rewrite
///
/// `f^(i) - dt a_ii Q(f^(i))/eps = c_i0 f^n [+ dt c~_i0 T(f^n)]
///     + sum_j (c_ij f^(j) + dt c~_ij T(f^(j)))`
///
/// Indices are one-based stage numbers; `j = 0` denotes the `f^n` term.
/// `first` is the first implicit stage (1 for type A, 2 for type ARS).
#[derive(Debug, Clone)]
pub struct ShuOsherCoefficients<S> {
    pub nu: usize,
    pub first: usize,
    c: Vec<Vec<S>>,
    c_tilde: Vec<Vec<S>>,
}

impl<S: Clone> ShuOsherCoefficients<S> {
    pub fn c(&self, i: usize, j: usize) -> S {
        self.c[i][j].clone()
    }

    pub fn c_tilde(&self, i: usize, j: usize) -> S {
        self.c_tilde[i][j].clone()
    }

    /// Index pairs `(i, j)` that enter the coefficient tables, `j = 0` first.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in self.first..=self.nu {
            out.push((i, 0));
            for j in self.first..i {
                out.push((i, j));
            }
        }
        out
    }
}

/// Runs the recursions for `b_ij`, `b~_ij` and the resulting `c`, `c~`
/// tables over any field (`f64` or exact rationals).
///
/// `at(i, j)` and `a(i, j)` take one-based indices.
pub fn shu_osher_coefficients<S, FA, FI>(
    nu: usize,
    first: usize,
    at: FA,
    a: FI,
) -> ShuOsherCoefficients<S>
where
    S: Num + Clone,
    FA: Fn(usize, usize) -> S,
    FI: Fn(usize, usize) -> S,
{
    let n = nu + 1;
    let mut b = vec![vec![S::zero(); n]; n];
    let mut bt = vec![vec![S::zero(); n]; n];
    let mut c = vec![vec![S::zero(); n]; n];
    let mut ct = vec![vec![S::zero(); n]; n];

    for i in first..=nu {
        let inv = S::one() / a(i, i);
        b[i][i] = inv.clone();
        for j in first..i {
            let mut s = S::zero();
            for l in j..i {
                s = s + a(i, l) * b[l][j].clone();
            }
            b[i][j] = S::zero() - inv.clone() * s;
        }
        for j in 1..i {
            let mut s = S::zero();
            for l in (j + 1).max(first)..i {
                s = s + a(i, l) * bt[l][j].clone();
            }
            bt[i][j] = inv.clone() * (S::zero() - at(i, j) - s);
        }

        let mut total = S::zero();
        for j in first..i {
            let mut s = S::zero();
            for l in j..i {
                s = s + a(i, l) * b[l][j].clone();
            }
            total = total + s.clone();
            c[i][j] = s;
        }
        c[i][0] = S::one() - total;

        // c~_ij for j >= first, plus c~_i0 (the T(f^n) weight) for ARS,
        // which has the same form with j = 1.
        for j in 1..i {
            let mut s = at(i, j);
            for l in (j + 1).max(first)..i {
                s = s + a(i, l) * bt[l][j].clone();
            }
            if j >= first {
                ct[i][j] = s;
            } else if j == 1 {
                ct[i][0] = s;
            }
        }
    }
    ShuOsherCoefficients {
        nu,
        first,
        c,
        c_tilde: ct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CflBound {
    Finite(f64),
    /// Zero denominator: the pair imposes no time-step restriction.
    Unbounded,
}

impl CflBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            CflBound::Finite(v) => Some(*v),
            CflBound::Unbounded => None,
        }
    }

    pub fn min(self, other: CflBound) -> CflBound {
        match (self, other) {
            (CflBound::Finite(a), CflBound::Finite(b)) => CflBound::Finite(a.min(b)),
            (CflBound::Finite(a), CflBound::Unbounded) | (CflBound::Unbounded, CflBound::Finite(a)) => {
                CflBound::Finite(a)
            }
            _ => CflBound::Unbounded,
        }
    }
}

impl fmt::Display for CflBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CflBound::Finite(v) => write!(f, "{v:.14}"),
            CflBound::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexedValue {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CflRatio {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub c_tilde: f64,
    pub ratio: CflBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// `a_ii`, `c_ij` or `ct_ij`, one-based.
    pub label: String,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub kind: SchemeKind,
    pub c: Vec<IndexedValue>,
    pub c_tilde: Vec<IndexedValue>,
    pub ratios: Vec<CflRatio>,
    /// `c_i0 + sum_j c_ij - 1` per stage; zero up to round-off.
    pub convexity_defect: Vec<IndexedValue>,
    pub feasible: bool,
    pub c_sch: CflBound,
    pub violations: Vec<Violation>,
}

impl PositivityReport {
    pub fn c(&self, i: usize, j: usize) -> Option<f64> {
        lookup(&self.c, i, j)
    }

    pub fn c_tilde(&self, i: usize, j: usize) -> Option<f64> {
        lookup(&self.c_tilde, i, j)
    }

    pub fn ratio(&self, i: usize, j: usize) -> Option<CflBound> {
        self.ratios
            .iter()
            .find(|r| r.i == i && r.j == j)
            .map(|r| r.ratio)
    }

    /// Ratio pairs attaining the minimum (more than one on ties).
    pub fn binding_ratios(&self) -> Vec<&CflRatio> {
        let Some(min) = self.c_sch.value() else {
            return Vec::new();
        };
        self.ratios
            .iter()
            .filter(|r| matches!(r.ratio, CflBound::Finite(v) if (v - min).abs() <= 1e-14 * min.abs().max(1.0)))
            .collect()
    }
}

fn lookup(v: &[IndexedValue], i: usize, j: usize) -> Option<f64> {
    v.iter().find(|x| x.i == i && x.j == j).map(|x| x.value)
}

impl fmt::Display for PositivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "positivity analysis ({})", self.kind)?;
        writeln!(f, "  {:>3} {:>3} {:>22} {:>22} {:>22}", "i", "j", "c_ij", "ct_ij", "c/ct")?;
        for r in &self.ratios {
            writeln!(
                f,
                "  {:>3} {:>3} {:>+22.14e} {:>+22.14e} {:>22}",
                r.i, r.j, r.c, r.c_tilde, r.ratio
            )?;
        }
        for v in &self.violations {
            writeln!(f, "  violated: {} = {:+.6e}", v.label, v.value)?;
        }
        writeln!(f, "  feasible: {}", self.feasible)?;
        write!(f, "  c_sch: {}", self.c_sch)
    }
}

fn analyze(t: &TableauPair, first: usize) -> PositivityReport {
    let nu = t.nu;
    let so = shu_osher_coefficients::<f64, _, _>(
        nu,
        first,
        |i, j| t.at(i - 1, j - 1),
        |i, j| t.a(i - 1, j - 1),
    );

    let mut violations = Vec::new();
    for i in first..=nu {
        let aii = t.a(i - 1, i - 1);
        if aii <= 0.0 {
            violations.push(Violation {
                label: format!("a_{i}{i}"),
                i,
                j: i,
                value: aii,
            });
        }
    }

    let mut c = Vec::new();
    let mut c_tilde = Vec::new();
    let mut ratios = Vec::new();
    let mut convexity = Vec::new();
    let mut c_sch = CflBound::Unbounded;
    for (i, j) in so.pairs() {
        let cij = so.c(i, j);
        c.push(IndexedValue { i, j, value: cij });
        if cij < -POSITIVITY_TOL {
            violations.push(Violation {
                label: format!("c_{i}{j}"),
                i,
                j,
                value: cij,
            });
        }
        // type A stages carry no transport on the f^n term
        let has_transport = j != 0 || first > 1;
        if !has_transport {
            continue;
        }
        let ctij = so.c_tilde(i, j);
        c_tilde.push(IndexedValue { i, j, value: ctij });
        if ctij < -POSITIVITY_TOL {
            violations.push(Violation {
                label: format!("ct_{i}{j}"),
                i,
                j,
                value: ctij,
            });
        }
        let ratio = if ctij.abs() <= POSITIVITY_TOL {
            CflBound::Unbounded
        } else {
            CflBound::Finite(cij / ctij)
        };
        c_sch = c_sch.min(ratio);
        ratios.push(CflRatio {
            i,
            j,
            c: cij,
            c_tilde: ctij,
            ratio,
        });
    }
    for i in first..=nu {
        let s: f64 = std::iter::once(0).chain(first..i).map(|j| so.c(i, j)).sum();
        convexity.push(IndexedValue {
            i,
            j: 0,
            value: s - 1.0,
        });
    }

    PositivityReport {
        kind: t.kind,
        c,
        c_tilde,
        ratios,
        convexity_defect: convexity,
        feasible: violations.is_empty(),
        c_sch,
        violations,
    }
}

/// Positivity conditions and CFL factor of a type A, GSA tableau.
pub fn positivity_analysis_type_a(t: &TableauPair) -> Result<PositivityReport> {
    if t.kind != SchemeKind::TypeA || !t.gsa {
        return Err(Error::WrongTableauKind {
            required: "type A and GSA",
            found: describe(t),
        });
    }
    Ok(analyze(t, 1))
}

/// Positivity conditions and CFL factor of a type ARS, GSA tableau.
pub fn positivity_analysis_type_ars(t: &TableauPair) -> Result<PositivityReport> {
    if t.kind != SchemeKind::TypeARS || !t.gsa {
        return Err(Error::WrongTableauKind {
            required: "type ARS and GSA",
            found: describe(t),
        });
    }
    Ok(analyze(t, 2))
}

/// Dispatches on the tableau kind.
pub fn positivity_analysis(t: &TableauPair) -> Result<PositivityReport> {
    match t.kind {
        SchemeKind::TypeA => positivity_analysis_type_a(t),
        SchemeKind::TypeARS => positivity_analysis_type_ars(t),
        SchemeKind::TypeCK => Err(Error::WrongTableauKind {
            required: "type A or type ARS",
            found: describe(t),
        }),
    }
}

fn describe(t: &TableauPair) -> String {
    format!("{}{}", t.kind, if t.gsa { ", GSA" } else { ", not GSA" })
}

// ---------------------------------------------------------------------------
// Built-in schemes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NamedScheme {
    pub name: &'static str,
    pub description: &'static str,
    pub tableau: TableauPair,
    /// Published CFL factor, when there is one.
    pub reported_c_sch: Option<f64>,
}

fn lower(nu: usize, rows: &[&[f64]]) -> Vec<f64> {
    let mut m = vec![0.0; nu * nu];
    for (i, row) in rows.iter().enumerate() {
        m[i * nu..i * nu + row.len()].copy_from_slice(row);
    }
    m
}

fn scheme_a() -> TableauPair {
    let at = lower(
        3,
        &[
            &[],
            &[0.73695027152854],
            &[0.32152816910844, 0.67847183089156],
        ],
    );
    let a = lower(
        3,
        &[
            &[0.62863517121833],
            &[0.24310046553707, 0.19593925696632],
            &[0.48036510509894, 0.074643281386981, 0.44499161351408],
        ],
    );
    TableauPair::stiffly_accurate(3, at, a, 0.27973737915215, SchemeKind::TypeA)
        .expect("built-in tableau")
        .with_name("scheme_a")
}

fn scheme_ars() -> TableauPair {
    let at = lower(4, &[&[], &[0.0], &[1.0, 0.0], &[0.5, 0.0, 0.5]]);
    let a = lower(
        4,
        &[&[0.0], &[0.0, 1.6], &[0.0, 0.3, 0.7], &[0.0, 0.5, 0.3, 0.2]],
    );
    TableauPair::stiffly_accurate(4, at, a, 0.8, SchemeKind::TypeARS)
        .expect("built-in tableau")
        .with_name("scheme_ars")
}

/// ARS(2,2,2) of Ascher, Ruuth & Spiteri (Appl. Numer. Math. 25, 1997),
/// with `gamma = 1 - sqrt(2)/2` and `delta = 1 - 1/(2 gamma)`. These
/// coefficients come from that reference, not from the corrected-scheme
/// construction; the scheme has no correction step (`alpha = 0`).
fn ars222() -> TableauPair {
    let gamma = 1.0 - std::f64::consts::SQRT_2 / 2.0;
    let delta = 1.0 - 1.0 / (2.0 * gamma);
    let at = lower(3, &[&[], &[gamma], &[delta, 1.0 - delta]]);
    let a = lower(3, &[&[0.0], &[0.0, gamma], &[0.0, 1.0 - gamma, gamma]]);
    TableauPair::stiffly_accurate(3, at, a, 0.0, SchemeKind::TypeARS)
        .expect("built-in tableau")
        .with_name("ars222")
}

/// Heun / two-stage SSP-RK2 explicit part. The implicit part is empty: the
/// explicit reference solver treats collisions explicitly as well.
fn ssp_rk2_explicit() -> TableauPair {
    let at = lower(2, &[&[], &[1.0]]);
    TableauPair::new(
        2,
        at,
        vec![0.0; 4],
        vec![0.5, 0.5],
        vec![0.0, 0.0],
        0.0,
        SchemeKind::TypeCK,
        false,
    )
    .expect("built-in tableau")
    .with_name("ssp_rk2_explicit")
}

/// Forward-backward Euler written as a two-stage GSA ARS tableau.
fn imex_euler() -> TableauPair {
    let at = lower(2, &[&[], &[1.0]]);
    let a = lower(2, &[&[0.0], &[0.0, 1.0]]);
    TableauPair::stiffly_accurate(2, at, a, 0.0, SchemeKind::TypeARS)
        .expect("built-in tableau")
        .with_name("imex_euler")
}

pub fn builtin_schemes() -> Vec<NamedScheme> {
    vec![
        NamedScheme {
            name: "scheme_a",
            description: "second-order positivity-preserving type A GSA scheme (3 stages)",
            tableau: scheme_a(),
            reported_c_sch: Some(0.52474575236975),
        },
        NamedScheme {
            name: "scheme_ars",
            description: "second-order positivity-preserving type ARS GSA scheme (4 stages)",
            tableau: scheme_ars(),
            reported_c_sch: Some(0.8125),
        },
        NamedScheme {
            name: "ars222",
            description: "standard ARS(2,2,2) baseline, not positivity-preserving",
            tableau: ars222(),
            reported_c_sch: None,
        },
        NamedScheme {
            name: "ssp_rk2_explicit",
            description: "explicit SSP-RK2 (Heun) transport tableau for the reference solver",
            tableau: ssp_rk2_explicit(),
            reported_c_sch: None,
        },
        NamedScheme {
            name: "imex_euler",
            description: "first-order forward-backward Euler IMEX scheme",
            tableau: imex_euler(),
            reported_c_sch: None,
        },
    ]
}

pub fn builtin_names() -> Vec<&'static str> {
    builtin_schemes().into_iter().map(|s| s.name).collect()
}

pub fn builtin(name: &str) -> Result<TableauPair> {
    builtin_schemes()
        .into_iter()
        .find(|s| s.name == name)
        .map(|s| s.tableau)
        .ok_or_else(|| Error::UnknownScheme(name.to_string()))
}

/// Built-in name or path to a JSON tableau.
pub fn resolve(name_or_path: &str) -> Result<TableauPair> {
    match builtin(name_or_path) {
        Ok(t) => Ok(t),
        Err(_) if Path::new(name_or_path).exists() => TableauPair::from_json_file(name_or_path),
        Err(e) => Err(e),
    }
}

/// Positivity-mode time-step factor: `c_sch` for feasible schemes.
pub fn scheme_cfl(t: &TableauPair) -> Option<f64> {
    positivity_analysis(t)
        .ok()
        .filter(|r| r.feasible)
        .and_then(|r| r.c_sch.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn stage_weights_of_builtin_schemes() {
        let (_, c) = stage_weights(&builtin("scheme_ars").unwrap());
        let expected = [0.0, 1.6, 1.0, 1.0];
        for (x, e) in c.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15, "{c:?}");
        }
        let (ct, _) = stage_weights(&builtin("scheme_a").unwrap());
        let expected = [0.0, 0.73695027152854, 1.0];
        for (x, e) in ct.iter().zip(expected) {
            assert!((x - e).abs() < 1e-14, "{ct:?}");
        }
    }

    #[test]
    fn single_zero_stage() {
        let t = TableauPair::new(
            1,
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
            0.0,
            SchemeKind::TypeCK,
            false,
        )
        .unwrap();
        assert_eq!(stage_weights(&t), (vec![0.0], vec![0.0]));
        let r = check_order_conditions(&t, 2, CorrectionVariant::FstarFn);
        assert_eq!(r.get("sum(wt)-1"), Some(-1.0));
        assert_eq!(r.get("sum(w)-1"), Some(-1.0));
    }

    #[test]
    fn second_order_residuals() {
        for name in ["scheme_a", "scheme_ars", "ars222"] {
            let r = check_order_conditions(&builtin(name).unwrap(), 2, CorrectionVariant::FstarFn);
            assert_eq!(r.residuals.len(), 6);
            assert!(r.satisfied(1e-10), "{name}: {r}");
        }
        let r = check_order_conditions(&builtin("scheme_ars").unwrap(), 2, CorrectionVariant::FstarFn);
        // 0.8 + 0.3 + 0.2 - 0.8 - 0.5
        assert!(r.get("sum(w*c)-alpha-1/2").unwrap().abs() < 1e-15);
    }

    #[test]
    fn third_order_variants_differ_only_in_alpha_terms() {
        let t = builtin("scheme_a").unwrap();
        let r1 = check_order_conditions(&t, 3, CorrectionVariant::FstarFn);
        let r2 = check_order_conditions(&t, 3, CorrectionVariant::FstarFnp1);
        assert_eq!(r1.residuals.len(), 20);
        assert_eq!(r2.residuals.len(), 20);
        for (a, b) in r1.residuals.iter().zip(&r2.residuals).take(18) {
            assert_eq!(a, b);
        }
        let alpha = t.alpha();
        assert!((r1.residuals[18].value - r2.residuals[18].value - alpha).abs() < 1e-14);
        assert!((r1.residuals[19].value - r2.residuals[19].value - 2.0 * alpha).abs() < 1e-14);
        // a second-order scheme is not third order
        assert!(!r1.satisfied(1e-6));
    }

    #[test]
    fn third_order_conditions_of_a_classical_explicit_rk3() {
        // Shu-Osher SSP-RK3 with an empty implicit part satisfies the
        // explicit-only third-order sums.
        let at = lower(3, &[&[], &[1.0], &[0.25, 0.25]]);
        let t = TableauPair::new(
            3,
            at,
            vec![0.0; 9],
            vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            vec![0.0; 3],
            0.0,
            SchemeKind::TypeCK,
            false,
        )
        .unwrap();
        let r = check_order_conditions(&t, 3, CorrectionVariant::FstarFn);
        assert!(r.get("sum(wt*At*ct)-1/6").unwrap().abs() < 1e-15);
        assert!(r.get("sum(wt*ct*ct)-1/3").unwrap().abs() < 1e-15);
        assert!(r.get("sum(wt*ct)-1/2").unwrap().abs() < 1e-15);
    }

    #[test]
    fn type_a_positivity() {
        let t = builtin("scheme_a").unwrap();
        let r = positivity_analysis_type_a(&t).unwrap();
        assert!(r.feasible, "{r}");
        let c_sch = r.c_sch.value().unwrap();
        assert!((c_sch - 0.52474575236975).abs() < 1e-11, "{c_sch}");
        let c21 = r.c(2, 1).unwrap();
        assert!((c21 - 0.24310046553707 / 0.62863517121833).abs() < 1e-15);
        assert!((c21 - 0.3867115).abs() < 1e-7);
        for d in &r.convexity_defect {
            assert!(d.value.abs() < 1e-14);
        }
        // the minimum is attained by the (2,1) pair
        let binding = r.binding_ratios();
        assert_eq!((binding[0].i, binding[0].j), (2, 1));
    }

    #[test]
    fn type_a_infeasible_two_stage() {
        let at = lower(2, &[&[], &[0.5]]);
        let a = lower(2, &[&[0.4], &[0.6, 0.3]]);
        let t = TableauPair::stiffly_accurate(2, at, a, 0.0, SchemeKind::TypeA).unwrap();
        let r = positivity_analysis_type_a(&t).unwrap();
        assert!(!r.feasible);
        assert!(r.c(2, 0).unwrap() < 0.0);
        assert!(r.violations.iter().any(|v| v.label == "c_20"));
    }

    #[test]
    fn type_ars_positivity() {
        let t = builtin("scheme_ars").unwrap();
        let r = positivity_analysis_type_ars(&t).unwrap();
        assert!(r.feasible, "{r}");
        assert_eq!(r.c_sch, CflBound::Finite(0.8125));
        assert!((r.c(3, 2).unwrap() - 0.1875).abs() < 1e-15);
        let CflBound::Finite(r43) = r.ratio(4, 3).unwrap() else {
            panic!()
        };
        assert!((r43 - 6.0 / 7.0).abs() < 1e-14);
        assert_eq!(r.ratio(2, 0), Some(CflBound::Unbounded));
        assert_eq!(r.ratio(3, 2), Some(CflBound::Unbounded));
        let binding = r.binding_ratios();
        assert_eq!((binding[0].i, binding[0].j), (3, 0));
    }

    #[test]
    fn ars_exact_rational_cfl() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        let at = [
            [r(0, 1); 4],
            [r(0, 1); 4],
            [r(1, 1), r(0, 1), r(0, 1), r(0, 1)],
            [r(1, 2), r(0, 1), r(1, 2), r(0, 1)],
        ];
        let a = [
            [r(0, 1); 4],
            [r(0, 1), r(8, 5), r(0, 1), r(0, 1)],
            [r(0, 1), r(3, 10), r(7, 10), r(0, 1)],
            [r(0, 1), r(1, 2), r(3, 10), r(1, 5)],
        ];
        let so = shu_osher_coefficients(4, 2, |i, j| at[i - 1][j - 1], |i, j| a[i - 1][j - 1]);
        let mut min: Option<Ratio<i64>> = None;
        for (i, j) in so.pairs() {
            let ct = so.c_tilde(i, j);
            if ct != r(0, 1) {
                let q = so.c(i, j) / ct;
                min = Some(min.map_or(q, |m| m.min(q)));
            }
        }
        assert_eq!(min, Some(r(13, 16)));
        assert_eq!(so.c(4, 3) / so.c_tilde(4, 3), r(6, 7));
    }

    #[test]
    fn ars222_is_not_positivity_preserving() {
        let r = positivity_analysis(&builtin("ars222").unwrap()).unwrap();
        assert!(!r.feasible);
        assert!(r.violations.iter().any(|v| v.label == "c_30"));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let ars = builtin("scheme_ars").unwrap();
        assert!(matches!(
            positivity_analysis_type_a(&ars),
            Err(Error::WrongTableauKind { .. })
        ));
        let a = builtin("scheme_a").unwrap();
        assert!(positivity_analysis_type_ars(&a).is_err());
        assert!(positivity_analysis(&builtin("ssp_rk2_explicit").unwrap()).is_err());
    }

    #[test]
    fn registry_values() {
        assert_eq!(builtin("scheme_a").unwrap().alpha(), 0.27973737915215);
        let ars = builtin("scheme_ars").unwrap();
        assert_eq!(ars.a(1, 1), 1.6);
        assert_eq!(ars.a(3, 3), 0.2);
        assert!(builtin("nope").is_err());
        assert_eq!(builtin_names().len(), 5);
        assert_eq!(scheme_cfl(&builtin("imex_euler").unwrap()), Some(1.0));
    }

    #[test]
    fn structural_validation() {
        // explicit entry on the diagonal
        let bad = TableauPair::new(
            1,
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![1.0],
            0.0,
            SchemeKind::TypeA,
            false,
        );
        assert!(bad.is_err());
        // negative alpha
        let bad = TableauPair::new(
            1,
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![1.0],
            -0.1,
            SchemeKind::TypeA,
            true,
        );
        assert!(bad.is_err());
        // ARS with a nonzero first column
        let bad = TableauPair::stiffly_accurate(
            2,
            lower(2, &[&[], &[1.0]]),
            lower(2, &[&[0.0], &[0.5, 0.5]]),
            0.0,
            SchemeKind::TypeARS,
        );
        assert!(bad.is_err());
        // GSA flag with mismatching weights
        let bad = TableauPair::new(
            2,
            lower(2, &[&[], &[1.0]]),
            lower(2, &[&[1.0], &[0.0, 1.0]]),
            vec![0.5, 0.5],
            vec![0.0, 1.0],
            0.0,
            SchemeKind::TypeA,
            true,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let t = builtin("scheme_ars").unwrap();
        let s = t.to_json_string().unwrap();
        assert_eq!(TableauPair::from_json_str(&s).unwrap(), t);
        assert!(TableauPair::from_json_str("{\"nu\": 2").is_err());
        let text = r#"{"nu":1,"a_explicit":[0],"a_implicit":[1],"w_explicit":[0],
                       "w_implicit":[1],"alpha":0,"kind":"A","gsa":true}"#;
        let t = TableauPair::from_json_str(text).unwrap();
        assert_eq!(t.kind(), SchemeKind::TypeA);
    }

    #[test]
    fn relabeling_padded_stage_keeps_residuals() {
        // Prepending an inert stage (zero rows/columns) relabels the stages
        // without changing any order-condition sum.
        let t = builtin("scheme_a").unwrap();
        let nu = t.nu();
        let n2 = nu + 1;
        let mut at = vec![0.0; n2 * n2];
        let mut a = vec![0.0; n2 * n2];
        for i in 0..nu {
            for j in 0..nu {
                at[(i + 1) * n2 + j + 1] = t.at(i, j);
                a[(i + 1) * n2 + j + 1] = t.a(i, j);
            }
        }
        let mut wt = vec![0.0];
        wt.extend_from_slice(t.w_explicit());
        let mut w = vec![0.0];
        w.extend_from_slice(t.w_implicit());
        let padded =
            TableauPair::new(n2, at, a, wt, w, t.alpha(), SchemeKind::TypeCK, false).unwrap();
        for order in 1..=3 {
            for v in [CorrectionVariant::FstarFn, CorrectionVariant::FstarFnp1] {
                let r0 = check_order_conditions(&t, order, v);
                let r1 = check_order_conditions(&padded, order, v);
                for (x, y) in r0.residuals.iter().zip(&r1.residuals) {
                    assert!((x.value - y.value).abs() < 1e-15);
                }
            }
        }
    }
}
