//! Closed-form polynomial roots and Euclidean projections used by the dual
//! solvers.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Coefficients of `a3·x³ + a2·x² + a1·x + a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl CubicCoefficients {
    pub fn new(a3: f64, a2: f64, a1: f64, a0: f64) -> Self {
        Self { a3, a2, a1, a0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1
    }

    fn is_finite(&self) -> bool {
        self.a3.is_finite() && self.a2.is_finite() && self.a1.is_finite() && self.a0.is_finite()
    }
}

/// Roots closer than this (relative) are reported once.
const MERGE_TOL: f64 = 1e-10;

/// All real roots of a cubic, ascending and deduplicated.
///
/// Uses Cardano's formula on the depressed cubic `t³ + p·t + q` with the
/// trigonometric form when all three roots are real, followed by a guarded
/// Newton polish on the original polynomial. A zero leading coefficient
/// falls through to the quadratic (or linear) case. A polynomial that is
/// identically zero, or a nonzero constant, has no isolated roots and yields
/// an empty list.
pub fn real_roots_cubic(c: CubicCoefficients) -> Result<Vec<f64>> {
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    if c.a3 == 0.0 {
        return Ok(real_roots_quadratic(c.a2, c.a1, c.a0));
    }

    let b = c.a2 / c.a3;
    let cc = c.a1 / c.a3;
    let d = c.a0 / c.a3;
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let mut roots: Vec<f64> = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        // One real root. Pick the cube-root branch that avoids cancellation.
        let u = (-half_q - half_q.signum() * disc.sqrt()).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - third_p / u };
        vec![t]
    } else {
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos())
            .collect()
    }
    .into_iter()
    .map(|t| polish(&c, t - shift))
    .collect();

    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL * a.abs().max(b.abs()).max(1.0));
    Ok(roots)
}

/// A few Newton steps, each accepted only if it lowers the residual.
fn polish(c: &CubicCoefficients, mut x: f64) -> f64 {
    let mut fx = c.eval(x).abs();
    for _ in 0..4 {
        let d = c.derivative(x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - c.eval(x) / d;
        let fn_ = c.eval(next).abs();
        if !(fn_ < fx) {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

/// Real roots of `a2·x² + a1·x + a0`, ascending. Degenerate (constant)
/// polynomials have no roots.
pub fn real_roots_quadratic(a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    if a2 == 0.0 {
        if a1 == 0.0 {
            return Vec::new();
        }
        return vec![-a0 / a1];
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-a1 / (2.0 * a2)];
    }
    // q has the sign of -a1, so no cancellation in either root.
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
    let mut r = vec![q / a2, a0 / q];
    r.sort_by(|x, y| x.total_cmp(y));
    r
}

/// Largest strictly positive real root of `a2·x² + a1·x + a0`, if any.
pub fn positive_root_quadratic(a2: f64, a1: f64, a0: f64) -> Result<Option<f64>> {
    if !(a2.is_finite() && a1.is_finite() && a0.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a2 == 0.0 && a1 == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    Ok(real_roots_quadratic(a2, a1, a0)
        .into_iter()
        .filter(|&r| r > 0.0)
        .last())
}

/// Euclidean projection onto the probability simplex `{w ≥ 0, Σw = 1}`
/// by Michelot's finite reduction.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    project_simplex_radius(v, 1.0)
}

/// Michelot's algorithm for the scaled simplex `{w ≥ 0, Σw = radius}`.
///
/// Each pass computes the threshold over the current active set and drops
/// every coordinate at or below it; the active set only shrinks, so the loop
/// ends after at most `len` passes.
pub fn project_simplex_radius(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    if v.iter().any(|x| !x.is_finite()) || !radius.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut active: Vec<usize> = (0..v.len()).collect();
    let tau = loop {
        let sum: f64 = active.iter().map(|&i| v[i]).sum();
        let tau = (sum - radius) / active.len() as f64;
        let before = active.len();
        active.retain(|&i| v[i] > tau);
        if active.len() == before {
            break tau;
        }
        if active.is_empty() {
            // Only possible through rounding when radius is ~0.
            break f64::INFINITY;
        }
    };
    Ok(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}

/// Sort-and-threshold simplex projection. Same result as
/// [`project_simplex_radius`]; kept as an independent route.
pub fn project_simplex_sorted(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - radius) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    Ok(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}

/// Projection onto `{p ≥ 0, Σp ≤ budget}`.
pub fn project_capped(v: &[f64], budget: f64) -> Result<Vec<f64>> {
    let clamped = project_nonneg(v);
    if clamped.iter().sum::<f64>() <= budget {
        Ok(clamped)
    } else {
        project_simplex_radius(v, budget)
    }
}

pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Water level `W` with `Σ_n (W − 1/g_n)^+ = budget` over the positive
/// gains. Zero when there is nothing to fill.
pub fn water_level(gains: &[f64], budget: f64) -> f64 {
    let mut inv: Vec<f64> = gains.iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).collect();
    if inv.is_empty() || budget <= 0.0 {
        return 0.0;
    }
    inv.sort_by(|a, b| a.total_cmp(b));
    let mut level = 0.0;
    let mut cum = 0.0;
    for (k, &v) in inv.iter().enumerate() {
        cum += v;
        let candidate = (budget + cum) / (k + 1) as f64;
        if candidate > v {
            level = candidate;
        } else {
            break;
        }
    }
    level
}
