//! Multiple-access subproblem: choose the terminal powers `P1`, `P2` to
//! maximize `min(C1, C2, C3/2)` where `C1`, `C2` are the individual uplink
//! rates and `C3` the uplink sum rate.
//!
//! For fixed multipliers the Lagrangian splits into one two-variable convex
//! problem per subcarrier, solved in closed form by the four-case KKT
//! enumeration below.

use std::f64::consts::LN_2;

use crate::channel::ChannelRealization;
use crate::bc::water_filling;
use crate::certify::Stationary;
use crate::dual::{self, DualPoint, SolverConfig, Subproblem, ALPHA_FLOOR};
use crate::error::{Error, Result};
use crate::numerics::{real_roots_cubic, water_level, CubicCoefficients};
use crate::rates::{ma_constraints, Budgets};

/// Below this a rate multiplier is treated as exactly zero; the closed
/// forms divide by it.
const LAMBDA_ZERO: f64 = 1e-12;

/// Result of the MA subproblem.
#[derive(Debug, Clone)]
pub struct MaSolution {
    pub pa1: Vec<f64>,
    pub pa2: Vec<f64>,
    /// `min(C1, C2, C3/2)` at `(pa1, pa2)`.
    pub r_ma: f64,
    pub dual: DualPoint,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Best dual bound minus `r_ma`.
    pub dual_gap: f64,
    pub dual_bound: f64,
}

/// Which branch of the KKT enumeration produced a subcarrier solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerCase {
    BothActive,
    OnlyFirst,
    OnlySecond,
    Silent,
}

#[derive(Debug, Clone, Copy)]
struct Weights {
    a: f64,
    b: f64,
    /// `2·ln2·α1`, `2·ln2·α2`
    big_a: f64,
    big_b: f64,
    mu: f64,
    l1: f64,
    l2: f64,
    l3: f64,
}

impl Weights {
    fn new(a: f64, b: f64, lambda: &[f64], alpha: &[f64], mu: f64) -> Self {
        let clean = |l: f64| if l < LAMBDA_ZERO { 0.0 } else { l };
        Self {
            a,
            b,
            big_a: 2.0 * LN_2 * alpha[0],
            big_b: 2.0 * LN_2 * alpha[1],
            mu,
            l1: clean(lambda[0]),
            l2: clean(lambda[1]),
            l3: clean(lambda[2]),
        }
    }

    /// Partial derivatives of the per-subcarrier Lagrangian term.
    fn gradient(&self, p1: f64, p2: f64) -> (f64, f64) {
        let y = 1.0 + self.a * p1 + self.b * p2;
        let k = self.mu / LN_2;
        let d1 = self.big_a / (2.0 * LN_2)
            - k * (self.l3 * self.a / (2.0 * y) + self.l1 * self.a / (1.0 + self.a * p1));
        let d2 = self.big_b / (2.0 * LN_2)
            - k * (self.l3 * self.b / (2.0 * y) + self.l2 * self.b / (1.0 + self.b * p2));
        (d1, d2)
    }

    fn objective(&self, p1: f64, p2: f64) -> f64 {
        let x1 = self.a * p1;
        let x2 = self.b * p2;
        (self.big_a * p1 + self.big_b * p2) / (2.0 * LN_2)
            - self.mu / LN_2
                * (self.l1 * x1.ln_1p() + self.l2 * x2.ln_1p() + 0.5 * self.l3 * (x1 + x2).ln_1p())
    }

    fn residual(&self, p1: f64, p2: f64) -> f64 {
        let (d1, d2) = self.gradient(p1, p2);
        p1.min(d1).abs().max(p2.min(d2).abs())
    }
}

/// Per-subcarrier inner minimizer of the MA Lagrangian for gains
/// `(g1n, g2n)` and multipliers `dual` (λ of length 3, α of length 2).
///
/// Zero prices with a positive weighted gain make the term unbounded below
/// and are rejected; the dual solver floors α instead.
pub fn inner_subcarrier_solve(g1n: f64, g2n: f64, dual: &DualPoint, mu: f64) -> Result<(f64, f64)> {
    if dual.lambda.len() != 3 || dual.alpha.len() != 2 {
        return Err(Error::InvalidParameter(
            "MA dual point needs 3 rate and 2 power multipliers".into(),
        ));
    }
    if !(g1n >= 0.0 && g2n >= 0.0) {
        return Err(Error::InvalidParameter("gains must be nonnegative".into()));
    }
    let l = &dual.lambda;
    let w1 = g1n * (l[0] + l[2]);
    let w2 = g2n * (l[1] + l[2]);
    if (dual.alpha[0] <= 0.0 && w1 > 0.0) || (dual.alpha[1] <= 0.0 && w2 > 0.0) {
        return Err(Error::UnboundedInner);
    }
    let alpha = [dual.alpha[0].max(ALPHA_FLOOR), dual.alpha[1].max(ALPHA_FLOOR)];
    let (p1, p2, _) = solve_subcarrier(g1n, g2n, &dual.lambda, &alpha, mu);
    Ok((p1, p2))
}

/// Which KKT case the inner minimizer falls in.
pub fn inner_case(g1n: f64, g2n: f64, dual: &DualPoint, mu: f64) -> InnerCase {
    let alpha = [dual.alpha[0].max(ALPHA_FLOOR), dual.alpha[1].max(ALPHA_FLOOR)];
    solve_subcarrier(g1n, g2n, &dual.lambda, &alpha, mu).2
}

fn solve_subcarrier(a: f64, b: f64, lambda: &[f64], alpha: &[f64], mu: f64) -> (f64, f64, InnerCase) {
    let w = Weights::new(a, b, lambda, alpha, mu);
    let (p1, p2, case) = enumerate_cases(&w);
    if case == InnerCase::BothActive {
        let (q1, q2) = newton_polish(&w, p1, p2);
        return (q1, q2, case);
    }
    (p1, p2, case)
}

fn enumerate_cases(w: &Weights) -> (f64, f64, InnerCase) {
    let Weights {
        a,
        b,
        big_a,
        big_b,
        mu,
        l1,
        l2,
        l3,
    } = *w;

    if l3 == 0.0 {
        // No coupling term: two independent water-fillings.
        let fill = |g: f64, l: f64, price: f64| {
            if g > 0.0 && l > 0.0 {
                (2.0 * mu * l / price - 1.0 / g).max(0.0)
            } else {
                0.0
            }
        };
        let p1 = fill(a, l1, big_a);
        let p2 = fill(b, l2, big_b);
        let case = match (p1 > 0.0, p2 > 0.0) {
            (true, true) => InnerCase::BothActive,
            (true, false) => InnerCase::OnlyFirst,
            (false, true) => InnerCase::OnlySecond,
            (false, false) => InnerCase::Silent,
        };
        return (p1, p2, case);
    }

    // Case 1: both powers positive.
    if a > 0.0 && b > 0.0 {
        if let Some((p1, p2)) = both_active(w) {
            return (p1, p2, InnerCase::BothActive);
        }
    }

    // Case 2: only T1 transmits.
    if a > 0.0 {
        let p1 = mu * (2.0 * l1 + l3) / big_a - 1.0 / a;
        if p1 > 0.0 && big_b >= 2.0 * mu * l2 * b + mu * l3 * b / (1.0 + a * p1) {
            return (p1, 0.0, InnerCase::OnlyFirst);
        }
    }

    // Case 3: only T2 transmits.
    if b > 0.0 {
        let p2 = mu * (2.0 * l2 + l3) / big_b - 1.0 / b;
        if p2 > 0.0 && big_a >= 2.0 * mu * l1 * a + mu * l3 * a / (1.0 + b * p2) {
            return (0.0, p2, InnerCase::OnlySecond);
        }
    }

    (0.0, 0.0, InnerCase::Silent)
}

/// Case 1 via the auxiliary variable `y = 1 + a·P1 + b·P2`. From the two
/// stationarity conditions, with `c_i = μλ3·g_i` and `d_i = 2μλ_i·g_i`,
///
/// ```text
/// g_i·P_i = d_i·y / (A_i·y − c_i) − 1
/// ```
///
/// and summing both gives `y + 1 = d1·y/(A·y − c1) + d2·y/(B·y − c2)`, i.e.
///
/// ```text
/// AB·y³ + (AB − A·c2 − B·c1 − B·d1 − A·d2)·y²
///       + (c1·c2 − A·c2 − B·c1 + c2·d1 + c1·d2)·y + c1·c2 = 0.
/// ```
///
/// When one of `λ1`, `λ2` vanishes the corresponding stationarity condition
/// pins `y` directly and the cubic is not needed.
fn both_active(w: &Weights) -> Option<(f64, f64)> {
    let Weights {
        a,
        b,
        big_a,
        big_b,
        mu,
        l1,
        l2,
        l3,
    } = *w;
    let c1 = mu * l3 * a;
    let c2 = mu * l3 * b;
    let d1 = 2.0 * mu * l1 * a;
    let d2 = 2.0 * mu * l2 * b;

    let recover = |y: f64| -> Option<(f64, f64)> {
        let den1 = big_a * y - c1;
        let den2 = big_b * y - c2;
        if !(y > 1.0 && den1 > 0.0 && den2 > 0.0) {
            return None;
        }
        let p1 = (d1 * y / den1 - 1.0) / a;
        let p2 = (d2 * y / den2 - 1.0) / b;
        (p1 > 0.0 && p2 > 0.0).then_some((p1, p2))
    };

    match (l1 > 0.0, l2 > 0.0) {
        (true, true) => {
            let cubic = CubicCoefficients::new(
                big_a * big_b,
                big_a * big_b - big_a * c2 - big_b * c1 - big_b * d1 - big_a * d2,
                c1 * c2 - big_a * c2 - big_b * c1 + c2 * d1 + c1 * d2,
                c1 * c2,
            );
            let roots = real_roots_cubic(cubic).ok()?;
            roots
                .into_iter()
                .filter_map(recover)
                .min_by(|x, y| w.objective(x.0, x.1).total_cmp(&w.objective(y.0, y.1)))
        }
        (false, true) => {
            // ∂/∂P1 = 0 with λ1 = 0 gives y = c1 / A.
            let y = c1 / big_a;
            let den2 = big_b * y - c2;
            if !(y > 1.0 && den2 > 0.0) {
                return None;
            }
            let p2 = (d2 * y / den2 - 1.0) / b;
            let p1 = (y - 1.0 - b * p2) / a;
            (p1 > 0.0 && p2 > 0.0).then_some((p1, p2))
        }
        (true, false) => {
            let y = c2 / big_b;
            let den1 = big_a * y - c1;
            if !(y > 1.0 && den1 > 0.0) {
                return None;
            }
            let p1 = (d1 * y / den1 - 1.0) / a;
            let p2 = (y - 1.0 - a * p1) / b;
            (p1 > 0.0 && p2 > 0.0).then_some((p1, p2))
        }
        // Only the sum-rate term is weighted: the minimizer set is a segment
        // when both users tie and a single point on an axis otherwise, which
        // Cases 2 and 3 cover.
        (false, false) => None,
    }
}

/// Newton steps on the stationarity system, kept only while they reduce
/// the residual. Cleans up cancellation in the closed form.
fn newton_polish(w: &Weights, mut p1: f64, mut p2: f64) -> (f64, f64) {
    let k = w.mu / LN_2;
    let mut res = w.residual(p1, p2);
    for _ in 0..3 {
        if res == 0.0 {
            break;
        }
        let (g1, g2) = w.gradient(p1, p2);
        let y = 1.0 + w.a * p1 + w.b * p2;
        let s = k * w.l3 / (2.0 * y * y);
        let u1 = k * w.l1 * w.a * w.a / ((1.0 + w.a * p1) * (1.0 + w.a * p1));
        let u2 = k * w.l2 * w.b * w.b / ((1.0 + w.b * p2) * (1.0 + w.b * p2));
        let h11 = s * w.a * w.a + u1;
        let h22 = s * w.b * w.b + u2;
        let h12 = s * w.a * w.b;
        let det = h11 * h22 - h12 * h12;
        if !(det > 0.0) {
            break;
        }
        let q1 = p1 - (h22 * g1 - h12 * g2) / det;
        let q2 = p2 - (h11 * g2 - h12 * g1) / det;
        if !(q1 > 0.0 && q2 > 0.0) {
            break;
        }
        let r = w.residual(q1, q2);
        if !(r < res) {
            break;
        }
        p1 = q1;
        p2 = q2;
        res = r;
    }
    (p1, p2)
}

/// Max over subcarriers of `|min(P_i, ∂L/∂P_i)|` for the MA Lagrangian.
pub fn ma_kkt_residual(g1: &[f64], g2: &[f64], p1: &[f64], p2: &[f64], dual: &DualPoint, mu: f64) -> f64 {
    (0..g1.len())
        .map(|n| Weights::new(g1[n], g2[n], &dual.lambda, &dual.alpha, mu).residual(p1[n], p2[n]))
        .fold(0.0, f64::max)
}

/// Maximizer of the uplink sum rate alone, `Σ log(1 + g1P1 + g2P2)`, under
/// both budgets, with the budget prices that support it.
///
/// With prices `α1, α2` each subcarrier goes to the terminal with the larger
/// `g_i/α_i`, so terminal 1 holds the subcarriers whose ratio `g1/g2` exceeds
/// `κ = α1/α2`. Either no subcarrier sits at `κ` and each terminal
/// water-fills its own set, or one group of equal ratios is shared with a
/// common split `θ` that makes both budgets exact.
fn sum_rate_split(g1: &[f64], g2: &[f64], budgets: [f64; 2], mu: f64) -> Option<(Vec<f64>, Vec<f64>, [f64; 2])> {
    let w = 0.5 * mu / LN_2;
    let [b1, b2] = budgets;
    let n = g1.len();
    let ratio = |i: usize| if g2[i] > 0.0 { g1[i] / g2[i] } else { f64::INFINITY };
    let mut order: Vec<usize> = (0..n).filter(|&i| g1[i] > 0.0 || g2[i] > 0.0).collect();
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if (ratio(g[0]) - ratio(i)).abs() <= 1e-12 * ratio(i) || ratio(g[0]) == ratio(i) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let rho = |g: &Vec<usize>| ratio(g[0]);
    let fill = |set: &[usize], gains: &[f64], level: f64, out: &mut [f64]| {
        for &i in set {
            if gains[i] > 0.0 {
                out[i] = (level - 1.0 / gains[i]).max(0.0);
            }
        }
    };

    // No shared subcarrier: terminal 1 takes the first k groups.
    for k in 0..=groups.len() {
        let set1: Vec<usize> = groups[..k].concat();
        let set2: Vec<usize> = groups[k..].concat();
        let pick = |set: &[usize], g: &[f64]| set.iter().map(|&i| g[i]).collect::<Vec<f64>>();
        let w1 = water_level(&pick(&set1, g1), b1);
        let w2 = water_level(&pick(&set2, g2), b2);
        if !(w1 > 0.0 && w2 > 0.0) {
            continue;
        }
        let kappa = w2 / w1;
        let above = k == 0 || rho(&groups[k - 1]) >= kappa * (1.0 - 1e-12);
        let below = k == groups.len() || rho(&groups[k]) <= kappa * (1.0 + 1e-12);
        if above && below {
            let mut p1 = vec![0.0; n];
            let mut p2 = vec![0.0; n];
            fill(&set1, g1, w1, &mut p1);
            fill(&set2, g2, w2, &mut p2);
            return Some((p1, p2, [w / w1, w / w2]));
        }
    }

    // One shared group m at ratio κ; terminal 2's level is κ times terminal 1's.
    for m in 0..groups.len() {
        let kappa = rho(&groups[m]);
        if !(kappa > 0.0 && kappa.is_finite()) {
            continue;
        }
        let set1: Vec<usize> = groups[..m].concat();
        let set2: Vec<usize> = groups[m + 1..].concat();
        let tie = &groups[m];
        let spent = |set: &[usize], g: &[f64], level: f64| -> f64 {
            set.iter().map(|&i| (level - 1.0 / g[i]).max(0.0)).sum()
        };
        let excess = |lv: f64| {
            kappa * (b1 - spent(&set1, g1, lv)) + b2 - spent(&set2, g2, kappa * lv) - kappa * spent(tie, g1, lv)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut grow = 0;
        while excess(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 2000 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let level = 0.5 * (lo + hi);
        let shared = spent(tie, g1, level);
        if !(shared > 0.0) {
            continue;
        }
        let theta = (b1 - spent(&set1, g1, level)) / shared;
        if !(-1e-9..=1.0 + 1e-9).contains(&theta) {
            continue;
        }
        let theta = theta.clamp(0.0, 1.0);
        let mut p1 = vec![0.0; n];
        let mut p2 = vec![0.0; n];
        fill(&set1, g1, level, &mut p1);
        fill(&set2, g2, kappa * level, &mut p2);
        for &i in tie {
            let x = g1[i] * (level - 1.0 / g1[i]).max(0.0);
            p1[i] = theta * x / g1[i];
            p2[i] = (1.0 - theta) * x / g2[i];
        }
        let a1 = w / level;
        return Some((p1, p2, [a1, a1 / kappa]));
    }
    None
}

struct MaProblem<'a> {
    g1: &'a [f64],
    g2: &'a [f64],
    budgets: [f64; 2],
    mu: f64,
}

impl Subproblem for MaProblem<'_> {
    fn n_subcarriers(&self) -> usize {
        self.g1.len()
    }

    fn n_rates(&self) -> usize {
        3
    }

    fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    fn inner(&self, lambda: &[f64], alpha: &[f64], out: &mut [Vec<f64>]) {
        let (first, second) = out.split_at_mut(1);
        for n in 0..self.g1.len() {
            let (p1, p2, _) = solve_subcarrier(self.g1[n], self.g2[n], lambda, alpha, self.mu);
            first[0][n] = p1;
            second[0][n] = p2;
        }
    }

    fn constraints(&self, powers: &[Vec<f64>]) -> Vec<f64> {
        ma_constraints(self.g1, self.g2, &powers[0], &powers[1], self.mu).to_vec()
    }

    fn kkt_residual(&self, powers: &[Vec<f64>], lambda: &[f64], alpha: &[f64]) -> f64 {
        let dual = DualPoint::new(lambda.to_vec(), alpha.to_vec());
        ma_kkt_residual(self.g1, self.g2, &powers[0], &powers[1], &dual, self.mu)
    }

    fn local_derivatives(&self, powers: &[Vec<f64>], n: usize, grad: &mut [Vec<f64>], hess: &mut [Vec<f64>]) {
        let k = self.mu / LN_2;
        let (a, b) = (self.g1[n], self.g2[n]);
        let (p1, p2) = (powers[0][n], powers[1][n]);
        let y1 = 1.0 + a * p1;
        let y2 = 1.0 + b * p2;
        let y = 1.0 + a * p1 + b * p2;
        grad[0][0] = k * a / y1;
        grad[0][1] = 0.0;
        grad[1][0] = 0.0;
        grad[1][1] = k * b / y2;
        grad[2][0] = 0.5 * k * a / y;
        grad[2][1] = 0.5 * k * b / y;
        hess[0].copy_from_slice(&[-k * a * a / (y1 * y1), 0.0, 0.0, 0.0]);
        hess[1].copy_from_slice(&[0.0, 0.0, 0.0, -k * b * b / (y2 * y2)]);
        let h = -0.5 * k / (y * y);
        hess[2].copy_from_slice(&[h * a * a, h * a * b, h * a * b, h * b * b]);
    }

    fn depends(&self, rate: usize, vector: usize) -> bool {
        rate == 2 || rate == vector
    }

    fn special_support(&self, support: &[usize]) -> Option<Stationary> {
        if support != [2] {
            return None;
        }
        let (p1, p2, alpha) = sum_rate_split(self.g1, self.g2, self.budgets, self.mu)?;
        Some(Stationary {
            lambda: vec![0.0, 0.0, 1.0],
            alpha: alpha.to_vec(),
            powers: vec![p1, p2],
        })
    }

    fn fill_free(&self, powers: &mut [Vec<f64>], free: &[bool], target: f64) {
        let Some(j) = free.iter().position(|&f| f) else {
            return;
        };
        let o = 1 - j;
        let gains = [self.g1, self.g2];
        let own = water_filling(gains[j], self.budgets[j]);
        let through: Vec<f64> = gains[j]
            .iter()
            .zip(gains[o])
            .zip(&powers[o])
            .map(|((&g, &go), &po)| g / (1.0 + go * po))
            .collect();
        let shared = water_filling(&through, self.budgets[j]);
        // min(C_j, C3/2) is concave along the segment from `own` to `shared`
        let worst = |t: f64, powers: &mut [Vec<f64>]| {
            for n in 0..own.len() {
                powers[j][n] = (1.0 - t) * own[n] + t * shared[n];
            }
            let c = self.constraints(powers);
            c[j].min(c[2])
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if worst(0.0, powers) < target {
            for _ in 0..80 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if worst(m1, powers) < worst(m2, powers) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
        } else {
            hi = 0.0;
        }
        worst(0.5 * (lo + hi), powers);
    }

    fn alpha_ref(&self) -> Vec<f64> {
        let n = self.g1.len() as f64;
        let k = 0.5 * self.mu / LN_2;
        [(self.g1, self.budgets[0]), (self.g2, self.budgets[1])]
            .iter()
            .map(|(g, max)| {
                let level = max / n;
                k * g.iter().map(|&g| g / (1.0 + g * level)).sum::<f64>() / n
            })
            .collect()
    }
}

/// Solves the MA subproblem by projected subgradient ascent on its dual.
pub fn solve_ma(ch: &ChannelRealization, budgets: &Budgets, cfg: &SolverConfig) -> Result<MaSolution> {
    budgets.validate()?;
    cfg.validate()?;
    let problem = MaProblem {
        g1: &ch.g1,
        g2: &ch.g2,
        budgets: [budgets.p1_max, budgets.p2_max],
        mu: budgets.mu,
    };
    let run = dual::solve(&problem, cfg);
    let mut powers = run.powers.into_iter();
    let pa1 = powers.next().expect("two power vectors");
    let pa2 = powers.next().expect("two power vectors");
    Ok(MaSolution {
        pa1,
        pa2,
        r_ma: run.rate,
        dual: run.dual,
        iterations: run.iterations,
        converged: run.converged,
        kkt_residual: run.kkt_residual,
        dual_gap: run.dual_bound - run.rate,
        dual_bound: run.dual_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gains_are_silent() {
        let dual = DualPoint::new(vec![0.2, 0.3, 0.5], vec![0.4, 0.4]);
        assert_eq!(inner_subcarrier_solve(0.0, 0.0, &dual, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(inner_case(0.0, 0.0, &dual, 0.5), InnerCase::Silent);
    }

    #[test]
    fn single_user_case_by_hand() {
        // 2·ln2·α1 = 0.5 makes the first user's level 1/0.5 − 1/g1 = 1.
        let dual = DualPoint::new(vec![1.0, 0.0, 0.0], vec![1.0 / (4.0 * LN_2), 10.0]);
        let (p1, p2) = inner_subcarrier_solve(1.0, 0.0, &dual, 0.5).unwrap();
        assert_abs_diff_eq!(p1, 1.0, epsilon = 1e-12);
        assert_eq!(p2, 0.0);
        assert_eq!(inner_case(1.0, 0.0, &dual, 0.5), InnerCase::OnlyFirst);
    }

    #[test]
    fn without_sum_weight_users_water_fill_separately() {
        let mu = 0.5;
        let dual = DualPoint::new(vec![0.4, 0.6, 0.0], vec![0.1, 0.2]);
        let (p1, p2) = inner_subcarrier_solve(2.0, 3.0, &dual, mu).unwrap();
        assert_abs_diff_eq!(p1, mu * 0.4 / (LN_2 * 0.1) - 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(p2, mu * 0.6 / (LN_2 * 0.2) - 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_price_with_weight_is_unbounded() {
        let dual = DualPoint::new(vec![0.5, 0.0, 0.5], vec![0.0, 1.0]);
        assert!(matches!(
            inner_subcarrier_solve(1.0, 1.0, &dual, 0.5),
            Err(Error::UnboundedInner)
        ));
    }

    /// Coarse grid over a box that must contain the minimizer, then
    /// coordinate descent with shrinking steps.
    fn brute_force(w: &Weights) -> f64 {
        let k = w.mu / LN_2;
        let hi1 = k * (w.l1 + 0.5 * w.l3) * 2.0 * LN_2 / w.big_a + 1.0;
        let hi2 = k * (w.l2 + 0.5 * w.l3) * 2.0 * LN_2 / w.big_b + 1.0;
        let g = 400;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=g {
            for j in 0..=g {
                let (p1, p2) = (hi1 * i as f64 / g as f64, hi2 * j as f64 / g as f64);
                let v = w.objective(p1, p2);
                if v < best.0 {
                    best = (v, p1, p2);
                }
            }
        }
        let (mut v, mut p1, mut p2) = best;
        let mut h = [hi1 / g as f64, hi2 / g as f64];
        while h[0] > 1e-13 * hi1 || h[1] > 1e-13 * hi2 {
            let mut moved = false;
            for (d1, d2) in [(h[0], 0.0), (-h[0], 0.0), (0.0, h[1]), (0.0, -h[1])] {
                let (q1, q2) = ((p1 + d1).max(0.0), (p2 + d2).max(0.0));
                let u = w.objective(q1, q2);
                if u < v {
                    (v, p1, p2) = (u, q1, q2);
                    moved = true;
                }
            }
            if !moved {
                h = [h[0] * 0.5, h[1] * 0.5];
            }
        }
        v
    }

    #[test]
    fn inner_minimizer_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let total: f64 = raw.iter().sum();
            let lambda: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let alpha = vec![rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0)];
            let (a, b) = (rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0));
            let mu = rng.gen_range(0.2..0.8);
            let dual = DualPoint::new(lambda.clone(), alpha.clone());
            let (p1, p2) = inner_subcarrier_solve(a, b, &dual, mu).unwrap();
            let w = Weights::new(a, b, &lambda, &alpha, mu);
            let reference = brute_force(&w);
            assert!(w.objective(p1, p2) <= reference + 1e-9, "{a} {b} {lambda:?} {alpha:?}");
            assert!(w.residual(p1, p2) <= 1e-8);
        }
    }

    #[test]
    fn symmetric_sum_rate_split_is_shared_water_filling() {
        let g = [1.5, 0.3, 2.0, 0.9];
        let (p1, p2, _) = sum_rate_split(&g, &g, [2.0, 2.0], 0.5).unwrap();
        let joint = water_filling(&g, 4.0);
        for n in 0..g.len() {
            assert_abs_diff_eq!(p1[n], p2[n], epsilon = 1e-9);
            assert_abs_diff_eq!(p1[n] + p2[n], joint[n], epsilon = 1e-9);
        }
    }

    #[test]
    fn sum_rate_split_meets_budgets() {
        let g1 = [1.0, 0.2, 3.0, 0.5, 0.0];
        let g2 = [0.4, 1.0, 0.5, 2.0, 0.0];
        let (p1, p2, _) = sum_rate_split(&g1, &g2, [1.0, 3.0], 0.5).unwrap();
        assert_abs_diff_eq!(p1.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p2.iter().sum::<f64>(), 3.0, epsilon = 1e-9);
        assert!(p1.iter().chain(&p2).all(|&x| x >= 0.0));
    }

    #[test]
    fn single_subcarrier_is_sum_limited() {
        let ch = ChannelRealization::flat(1, 1.0).unwrap();
        let b = Budgets::equal(1.0, 0.5).unwrap();
        let sol = solve_ma(&ch, &b, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.r_ma, 0.25 * 3f64.log2(), epsilon = 1e-9);
        assert!(sol.converged);
    }

    #[test]
    fn dead_channel_gives_zero() {
        let ch = ChannelRealization::flat(4, 0.0).unwrap();
        let b = Budgets::equal(2.0, 0.5).unwrap();
        let sol = solve_ma(&ch, &b, &SolverConfig::default()).unwrap();
        assert_eq!(sol.r_ma, 0.0);
    }
}
