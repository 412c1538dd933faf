//! Log-barrier method on the epigraph form of a max-min rate problem
//!
//! ```text
//! max t   s.t.   C_i(P) ≥ t,   Σ_n P_jn ≤ P_j,max,   P ≥ 0,
//! ```
//!
//! used when the dual iteration has not produced a certificate. Every rate
//! is a sum over subcarriers, so the barrier Hessian is block diagonal over
//! subcarriers plus one rank-one term per rate and per budget; each Newton
//! step costs O(N).
//!
//! On the central path with parameter `τ` the multipliers
//! `λ_i = 1/(τ s_i)` and `α_j = 1/(τ r_j)` (slacks `s`, `r`) are dual
//! feasible up to normalization, which is what the caller certifies.

use crate::dual::Subproblem;
use crate::lowrank::BlockLowRank;

/// Barrier terms divided by `τ` below this fraction of the rate ends the
/// path following.
const PATH_TOL: f64 = 1e-10;
const TAU_GROWTH: f64 = 20.0;
const MAX_NEWTON: usize = 400;

/// Half the squared Newton decrement below which centering stops. Past this
/// point the computed directions are dominated by rounding.
pub(crate) const CENTERED: f64 = 1e-9;
/// Newton steps allowed for one centering stage. A stage that needs more
/// is stuck on rounding and ends the path.
pub(crate) const STAGE_MAX: usize = 150;
/// Line searches give up below this step.
pub(crate) const MIN_STEP: f64 = 1e-6;

pub(crate) struct BarrierPoint {
    pub powers: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
}

struct State {
    p: Vec<Vec<f64>>,
    t: f64,
}

pub(crate) fn solve<S: Subproblem>(problem: &S) -> Option<BarrierPoint> {
    let n = problem.n_subcarriers();
    let m = problem.n_rates();
    let budgets = problem.budgets().to_vec();
    let np = budgets.len();
    if budgets.iter().any(|&b| !(b > 0.0)) {
        return None;
    }

    let p: Vec<Vec<f64>> = budgets.iter().map(|&b| vec![0.9 * b / n as f64; n]).collect();
    let c0 = problem.constraints(&p);
    let cmin = c0.iter().copied().fold(f64::INFINITY, f64::min);
    if !(cmin > 0.0) {
        return None;
    }
    let mut x = State { p, t: 0.5 * cmin };
    let n_terms = (m + np + n * np) as f64;
    let mut tau = n_terms / cmin;

    let mut grad = vec![vec![0.0; np]; m];
    let mut hess = vec![vec![0.0; np * np]; m];
    let mut newton_steps = 0;

    'path: loop {
        let stage_start = newton_steps;
        // centering
        loop {
            newton_steps += 1;
            if newton_steps > MAX_NEWTON || newton_steps - stage_start > STAGE_MAX {
                break 'path;
            }
            let c = problem.constraints(&x.p);
            let s: Vec<f64> = c.iter().map(|ci| ci - x.t).collect();
            let r: Vec<f64> = (0..np).map(|j| budgets[j] - x.p[j].iter().sum::<f64>()).collect();

            // rate gradients over all coordinates, g[i][j][n]
            let mut g = vec![vec![vec![0.0; n]; np]; m];
            // block-diagonal part, one np×np block per subcarrier
            let mut blocks = vec![vec![0.0; np * np]; n];
            for k in 0..n {
                problem.local_derivatives(&x.p, k, &mut grad, &mut hess);
                for i in 0..m {
                    for j in 0..np {
                        g[i][j][k] = grad[i][j];
                    }
                    for e in 0..np * np {
                        blocks[k][e] -= hess[i][e] / s[i];
                    }
                }
                for j in 0..np {
                    blocks[k][j * np + j] += 1.0 / (x.p[j][k] * x.p[j][k]);
                }
            }

            // gradient of the barrier objective
            let mut gp = vec![vec![0.0; n]; np];
            for j in 0..np {
                for k in 0..n {
                    let mut v = 1.0 / r[j] - 1.0 / x.p[j][k];
                    for i in 0..m {
                        v -= g[i][j][k] / s[i];
                    }
                    gp[j][k] = v;
                }
            }
            let gt = -tau + s.iter().map(|si| 1.0 / si).sum::<f64>();

            // H = D + Σ σ_k u_k u_kᵀ over z = (p, t), p laid out subcarrier
            // by subcarrier: rate terms (g_i, −1)/s_i, budget terms
            // (e_j, 0)/r_j, and −ctt·e_t e_tᵀ cancelling the t diagonal that
            // keeps D invertible.
            let dim = n * np + 1;
            let ctt: f64 = s.iter().map(|si| 1.0 / (si * si)).sum();
            let mut cols = Vec::with_capacity(m + np + 1);
            let mut signs = Vec::with_capacity(m + np + 1);
            for i in 0..m {
                let mut u = vec![0.0; dim];
                for j in 0..np {
                    for k in 0..n {
                        u[k * np + j] = g[i][j][k] / s[i];
                    }
                }
                u[dim - 1] = -1.0 / s[i];
                cols.push(u);
                signs.push(1.0);
            }
            for j in 0..np {
                let mut u = vec![0.0; dim];
                for k in 0..n {
                    u[k * np + j] = 1.0 / r[j];
                }
                cols.push(u);
                signs.push(1.0);
            }
            let mut u = vec![0.0; dim];
            u[dim - 1] = ctt.sqrt();
            cols.push(u);
            signs.push(-1.0);
            let system = BlockLowRank::new(np, blocks.concat(), ctt, cols, signs)?;
            let mut rhs = vec![0.0; dim];
            for j in 0..np {
                for k in 0..n {
                    rhs[k * np + j] = -gp[j][k];
                }
            }
            rhs[dim - 1] = -gt;
            let z = system.solve(&rhs)?;
            let dp: Vec<Vec<f64>> = (0..np).map(|j| (0..n).map(|k| z[k * np + j]).collect()).collect();
            let dt = z[dim - 1];

            let slope = dot(&gp, &dp) + gt * dt;
            if !slope.is_finite() {
                return None;
            }
            if -slope / 2.0 <= CENTERED {
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            while step >= MIN_STEP {
                let cand = State {
                    p: x
                        .p
                        .iter()
                        .zip(&dp)
                        .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a + step * b).collect())
                        .collect(),
                    t: x.t + step * dt,
                };
                if let Some(change) = barrier_change(problem, &x, &cand, tau, &budgets) {
                    if change <= 0.25 * step * slope {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }

        if n_terms / tau <= PATH_TOL * x.t.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        tau *= TAU_GROWTH;
    }

    let c = problem.constraints(&x.p);
    let inv_s: Vec<f64> = c.iter().map(|ci| 1.0 / (ci - x.t)).collect();
    let total: f64 = inv_s.iter().sum();
    let lambda = inv_s.iter().map(|v| v / total).collect();
    let alpha = (0..np)
        .map(|j| 1.0 / (total * (budgets[j] - x.p[j].iter().sum::<f64>())))
        .collect();
    Some(BarrierPoint {
        powers: x.p,
        lambda,
        alpha,
    })
}

/// Change of the barrier objective from `x` to `y`, `None` if `y` leaves
/// the strict interior. Summing log-ratios keeps the difference accurate
/// when `τ·t` dwarfs it.
fn barrier_change<S: Subproblem>(problem: &S, x: &State, y: &State, tau: f64, budgets: &[f64]) -> Option<f64> {
    let mut v = -tau * (y.t - x.t);
    for (j, (px, py)) in x.p.iter().zip(&y.p).enumerate() {
        let rx = budgets[j] - px.iter().sum::<f64>();
        let ry = budgets[j] - py.iter().sum::<f64>();
        if !(ry > 0.0) || py.iter().any(|&q| !(q > 0.0)) {
            return None;
        }
        v -= (ry / rx).ln() + px.iter().zip(py).map(|(a, b)| (b / a).ln()).sum::<f64>();
    }
    let cx = problem.constraints(&x.p);
    let cy = problem.constraints(&y.p);
    for (a, b) in cx.iter().zip(&cy) {
        let (sx, sy) = (a - x.t, b - y.t);
        if !(sy > 0.0) {
            return None;
        }
        v -= (sy / sx).ln();
    }
    v.is_finite().then_some(v)
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}
