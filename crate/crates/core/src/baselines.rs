//! Per-subcarrier ("type 2") decode-and-forward baseline.
//!
//! Each subcarrier relays independently, so a direction's rate is the sum
//! over subcarriers of the weaker hop. The exchange rate
//! `min(D12, D21, C3/2)` is concave in the three power vectors.
//!
//! The default solver is a log-barrier method on the smooth epigraph form
//!
//! ```text
//! max t   s.t.   u_n ≤ A1_n(P1_n),  u_n ≤ B2_n(PR_n),   Σu ≥ t,
//!                v_n ≤ A2_n(P2_n),  v_n ≤ B1_n(PR_n),   Σv ≥ t,
//!                C3/2 ≥ t,   budgets,   P > 0,
//! ```
//!
//! where `A` are the uplink and `B` the downlink per-subcarrier rates. With
//! `polish` off, or if the barrier breaks down, projected supergradient
//! ascent is used instead, projecting each vector onto `{p ≥ 0, Σp ≤ P_max}`.

use std::f64::consts::LN_2;

use crate::barrier::{CENTERED, MIN_STEP, STAGE_MAX};
use crate::channel::ChannelRealization;
use crate::dual::SolverConfig;
use crate::error::Result;
use crate::lowrank::{dot, BlockLowRank};
use crate::numerics::project_capped;
use crate::rates::{type2_rates, Budgets, PowerAllocation, RateSummary};

#[derive(Debug, Clone)]
pub struct Type2Solution {
    pub pa: PowerAllocation,
    pub rates: RateSummary,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterations without improving the best value before the step is halved.
const STALL_WINDOW: usize = 100;

/// Smallest step, relative to `step0`, before the ascent is declared done.
const MIN_STEP_FRACTION: f64 = 1e-7;

/// Supergradient of the type 2 exchange rate. The active term is the
/// smallest of (sum/2, D12, D21); ties go to the sum term, then D12. Inside
/// a directional term each subcarrier contributes the gradient of its
/// weaker hop, the MA hop on ties.
fn supergradient(ch: &ChannelRealization, pa: &PowerAllocation, mu: f64) -> [Vec<f64>; 3] {
    let n = ch.n_subcarriers();
    let ma = mu / LN_2;
    let bc = (1.0 - mu) / LN_2;
    let mut half_sum = 0.0;
    let mut d = [0.0; 2];
    for i in 0..n {
        half_sum += 0.5 * ma * (ch.g1[i] * pa.p1[i] + ch.g2[i] * pa.p2[i]).ln_1p();
        d[0] += (ma * (ch.g1[i] * pa.p1[i]).ln_1p()).min(bc * (ch.gt2[i] * pa.pr[i]).ln_1p());
        d[1] += (ma * (ch.g2[i] * pa.p2[i]).ln_1p()).min(bc * (ch.gt1[i] * pa.pr[i]).ln_1p());
    }
    let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    if half_sum <= d[0] && half_sum <= d[1] {
        for i in 0..n {
            let y = 1.0 + ch.g1[i] * pa.p1[i] + ch.g2[i] * pa.p2[i];
            g[0][i] = 0.5 * ma * ch.g1[i] / y;
            g[1][i] = 0.5 * ma * ch.g2[i] / y;
        }
        return g;
    }
    // direction 1→2 uses (P1, g1) up and (PR, gt2) down; 2→1 uses (P2, g2) and (PR, gt1)
    let (term, up_gain, up_power, down_gain) = if d[0] <= d[1] {
        (0, &ch.g1, &pa.p1, &ch.gt2)
    } else {
        (1, &ch.g2, &pa.p2, &ch.gt1)
    };
    for i in 0..n {
        let up = ma * (up_gain[i] * up_power[i]).ln_1p();
        let down = bc * (down_gain[i] * pa.pr[i]).ln_1p();
        if up <= down {
            g[term][i] = ma * up_gain[i] / (1.0 + up_gain[i] * up_power[i]);
        } else {
            g[2][i] = bc * down_gain[i] / (1.0 + down_gain[i] * pa.pr[i]);
        }
    }
    g
}

/// Maximizes the type 2 exchange rate. In the supergradient fallback each
/// power vector is normalized by its budget and the step is taken along
/// the normalized supergradient with length `step0·s_k`, halved whenever
/// the best value stalls.
pub fn solve_type2(ch: &ChannelRealization, budgets: &Budgets, cfg: &SolverConfig) -> Result<Type2Solution> {
    budgets.validate()?;
    cfg.validate()?;
    if cfg.polish {
        if let Some((pa, iterations)) = barrier(ch, budgets) {
            let rates = type2_rates(ch, &pa, budgets)?;
            return Ok(Type2Solution {
                pa,
                rates,
                iterations,
                converged: true,
            });
        }
    }
    supergradient_ascent(ch, budgets, cfg)
}

fn supergradient_ascent(ch: &ChannelRealization, budgets: &Budgets, cfg: &SolverConfig) -> Result<Type2Solution> {
    let n = ch.n_subcarriers();
    let maxes = [budgets.p1_max, budgets.p2_max, budgets.pr_max];

    let mut pa = PowerAllocation::uniform(n, budgets);
    let mut best_rates = type2_rates(ch, &pa, budgets)?;
    let mut best_pa = pa.clone();
    let mut scale = 1.0;
    let mut since_improve = 0;
    let mut converged = false;
    let mut k = 0;

    while k < cfg.max_iters {
        k += 1;
        let g = supergradient(ch, &pa, budgets.mu);
        // gradient in budget-normalized coordinates q = p / P_max
        let norm = g
            .iter()
            .zip(maxes)
            .map(|(gj, m)| gj.iter().map(|x| (x * m) * (x * m)).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) {
            converged = true;
            break;
        }
        let s = cfg.step0 * scale * cfg.step_rule_base(k);
        if scale < MIN_STEP_FRACTION {
            converged = true;
            break;
        }
        let vectors = [&mut pa.p1, &mut pa.p2, &mut pa.pr];
        for ((p, gj), m) in vectors.into_iter().zip(&g).zip(maxes) {
            if m <= 0.0 {
                continue;
            }
            let moved: Vec<f64> = p.iter().zip(gj).map(|(x, gx)| x + s * m * m * gx / norm).collect();
            *p = project_capped(&moved, m)?;
        }

        let r = type2_rates(ch, &pa, budgets)?;
        if r.r_exchange > best_rates.r_exchange {
            best_rates = r;
            best_pa = pa.clone();
            since_improve = 0;
        } else {
            since_improve += 1;
            if since_improve >= STALL_WINDOW {
                scale *= 0.5;
                since_improve = 0;
                // restart from the incumbent
                pa = best_pa.clone();
            }
        }
    }

    Ok(Type2Solution {
        pa: best_pa,
        rates: best_rates,
        iterations: k,
        converged,
    })
}

const BARRIER_PATH_TOL: f64 = 1e-10;
const BARRIER_GROWTH: f64 = 20.0;
const BARRIER_MAX_NEWTON: usize = 500;

/// Variables per subcarrier: `P1, P2, PR, u, v`.
const BS: usize = 5;

/// Slacks of every inequality at a point, or `None` outside the interior.
struct Slacks {
    /// `A1 − u, B2 − u, A2 − v, B1 − v` per subcarrier.
    hop: Vec<[f64; 4]>,
    /// `Σu − t, Σv − t, C3/2 − t`.
    rate: [f64; 3],
    budget: [f64; 3],
}

struct Gains<'a> {
    ch: &'a ChannelRealization,
    ma: f64,
    bc: f64,
    maxes: [f64; 3],
}

impl Gains<'_> {
    fn slacks(&self, x: &[f64]) -> Option<Slacks> {
        let n = self.ch.n_subcarriers();
        let t = x[n * BS];
        let mut hop = Vec::with_capacity(n);
        let mut sums = [0.0; 3];
        let mut half = 0.0;
        for k in 0..n {
            let z = &x[k * BS..(k + 1) * BS];
            if z[..3].iter().any(|&p| !(p > 0.0)) {
                return None;
            }
            let c = self.ch;
            let a1 = self.ma * (c.g1[k] * z[0]).ln_1p();
            let a2 = self.ma * (c.g2[k] * z[1]).ln_1p();
            let b1 = self.bc * (c.gt1[k] * z[2]).ln_1p();
            let b2 = self.bc * (c.gt2[k] * z[2]).ln_1p();
            let h = [a1 - z[3], b2 - z[3], a2 - z[4], b1 - z[4]];
            if h.iter().any(|&v| !(v > 0.0)) {
                return None;
            }
            hop.push(h);
            for j in 0..3 {
                sums[j] += z[j];
            }
            half += 0.5 * self.ma * (c.g1[k] * z[0] + c.g2[k] * z[1]).ln_1p();
        }
        let su: f64 = (0..n).map(|k| x[k * BS + 3]).sum();
        let sv: f64 = (0..n).map(|k| x[k * BS + 4]).sum();
        let rate = [su - t, sv - t, half - t];
        let budget = [0, 1, 2].map(|j| self.maxes[j] - sums[j]);
        (rate.iter().chain(&budget).all(|&v| v > 0.0)).then_some(Slacks { hop, rate, budget })
    }
}

/// Change of the barrier objective from `x` to `y` as a sum of log-ratios.
fn change(x: &[f64], sx: &Slacks, y: &[f64], sy: &Slacks, tau: f64) -> f64 {
    let n = sx.hop.len();
    let mut v = -tau * (y[n * BS] - x[n * BS]);
    for (hx, hy) in sx.hop.iter().zip(&sy.hop) {
        v -= hx.iter().zip(hy).map(|(a, b)| (b / a).ln()).sum::<f64>();
    }
    for k in 0..n {
        v -= (0..3).map(|j| (y[k * BS + j] / x[k * BS + j]).ln()).sum::<f64>();
    }
    v -= sx.rate.iter().zip(&sy.rate).map(|(a, b)| (b / a).ln()).sum::<f64>();
    v -= sx.budget.iter().zip(&sy.budget).map(|(a, b)| (b / a).ln()).sum::<f64>();
    v
}

/// Barrier path following on the epigraph form. Returns the allocation
/// scaled up to the budgets and the Newton step count, or `None` when the
/// problem is degenerate (a zero budget, or a bound that is identically
/// zero) or the iteration breaks down.
fn barrier(ch: &ChannelRealization, budgets: &Budgets) -> Option<(PowerAllocation, usize)> {
    let n = ch.n_subcarriers();
    let maxes = [budgets.p1_max, budgets.p2_max, budgets.pr_max];
    if maxes.iter().any(|&m| !(m > 0.0)) {
        return None;
    }
    let gains = Gains {
        ch,
        ma: budgets.mu / LN_2,
        bc: (1.0 - budgets.mu) / LN_2,
        maxes,
    };
    let uniform = PowerAllocation::uniform(n, budgets);
    let start = type2_rates(ch, &uniform, budgets).ok()?;
    if !(start.r_exchange > 0.0) {
        return None;
    }

    let dim = n * BS + 1;
    let mut x = vec![0.0; dim];
    for k in 0..n {
        for j in 0..3 {
            x[k * BS + j] = 0.9 * maxes[j] / n as f64;
        }
    }
    // per-subcarrier rates a little below their hops; zero-gain hops push them negative
    let margin = 0.05 * start.r_exchange / n as f64;
    for k in 0..n {
        let z = &x[k * BS..k * BS + 3];
        let up = [gains.ma * (ch.g1[k] * z[0]).ln_1p(), gains.ma * (ch.g2[k] * z[1]).ln_1p()];
        let down = [gains.bc * (ch.gt2[k] * z[2]).ln_1p(), gains.bc * (ch.gt1[k] * z[2]).ln_1p()];
        for d in 0..2 {
            let m = up[d].min(down[d]);
            x[k * BS + 3 + d] = m - 0.1 * m.abs() - margin;
        }
    }
    let su: f64 = (0..n).map(|k| x[k * BS + 3]).sum();
    let sv: f64 = (0..n).map(|k| x[k * BS + 4]).sum();
    let lo = su.min(sv).min(start.r_exchange * 0.9 * 0.5);
    x[dim - 1] = lo - 0.5 * lo.abs() - margin;
    let mut sx = gains.slacks(&x)?;

    let n_terms = (7 * n + 6) as f64;
    let mut tau = n_terms / start.r_exchange;
    let mut steps = 0;
    let mut grad = vec![0.0; dim];
    let mut blocks = vec![0.0; n * BS * BS];

    'path: loop {
        let stage_start = steps;
        loop {
            steps += 1;
            if steps > BARRIER_MAX_NEWTON || steps - stage_start > STAGE_MAX {
                break 'path;
            }
            let [s1, s2, s3] = sx.rate;
            let r = sx.budget;
            grad.iter_mut().for_each(|g| *g = 0.0);
            blocks.iter_mut().for_each(|b| *b = 0.0);
            let mut col_u = vec![0.0; dim];
            let mut col_v = vec![0.0; dim];
            let mut col_c3 = vec![0.0; dim];
            let mut col_b = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
            for k in 0..n {
                let z = &x[k * BS..(k + 1) * BS];
                let h = sx.hop[k];
                let blk = &mut blocks[k * BS * BS..(k + 1) * BS * BS];
                let g = &mut grad[k * BS..(k + 1) * BS];
                // hop constraints: (power index, gain, coefficient, rate index)
                let hops = [
                    (0, ch.g1[k], gains.ma, 3),
                    (2, ch.gt2[k], gains.bc, 3),
                    (1, ch.g2[k], gains.ma, 4),
                    (2, ch.gt1[k], gains.bc, 4),
                ];
                for (c, &(pi, gain, coef, ri)) in hops.iter().enumerate() {
                    let y = 1.0 + gain * z[pi];
                    let d1 = coef * gain / y;
                    let d2 = -coef * gain * gain / (y * y);
                    let hc = h[c];
                    g[pi] -= d1 / hc;
                    g[ri] += 1.0 / hc;
                    let a = [(pi, d1), (ri, -1.0)];
                    for &(i, ai) in &a {
                        for &(j, aj) in &a {
                            blk[i * BS + j] += ai * aj / (hc * hc);
                        }
                    }
                    blk[pi * BS + pi] -= d2 / hc;
                }
                let y3 = 1.0 + ch.g1[k] * z[0] + ch.g2[k] * z[1];
                let c3 = [0.5 * gains.ma * ch.g1[k] / y3, 0.5 * gains.ma * ch.g2[k] / y3];
                for i in 0..2 {
                    g[i] -= c3[i] / s3;
                    for j in 0..2 {
                        // −∇²(C3/2)/s3
                        blk[i * BS + j] += c3[i] * c3[j] / (0.5 * gains.ma) / s3;
                    }
                }
                for j in 0..3 {
                    g[j] += 1.0 / r[j] - 1.0 / z[j];
                    blk[j * BS + j] += 1.0 / (z[j] * z[j]);
                    col_b[j][k * BS + j] = 1.0 / r[j];
                }
                g[3] -= 1.0 / s1;
                g[4] -= 1.0 / s2;
                col_u[k * BS + 3] = 1.0 / s1;
                col_v[k * BS + 4] = 1.0 / s2;
                col_c3[k * BS] = c3[0] / s3;
                col_c3[k * BS + 1] = c3[1] / s3;
            }
            grad[dim - 1] = -tau + 1.0 / s1 + 1.0 / s2 + 1.0 / s3;
            col_u[dim - 1] = -1.0 / s1;
            col_v[dim - 1] = -1.0 / s2;
            col_c3[dim - 1] = -1.0 / s3;
            let ctt = 1.0 / (s1 * s1) + 1.0 / (s2 * s2) + 1.0 / (s3 * s3);
            let mut col_t = vec![0.0; dim];
            col_t[dim - 1] = ctt.sqrt();
            let [b1, b2, b3] = col_b;
            let cols = vec![col_u, col_v, col_c3, b1, b2, b3, col_t];
            let signs = vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0];
            let system = BlockLowRank::new(BS, blocks.clone(), ctt, cols, signs)?;
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let dx = system.solve(&rhs)?;
            let slope = dot(&grad, &dx);
            if !slope.is_finite() {
                return None;
            }
            if -slope / 2.0 <= CENTERED {
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            while step >= MIN_STEP {
                let y: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
                if let Some(sy) = gains.slacks(&y) {
                    if change(&x, &sx, &y, &sy, tau) <= 0.25 * step * slope {
                        x = y;
                        sx = sy;
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
        if n_terms / tau <= BARRIER_PATH_TOL * x[dim - 1].abs() {
            break;
        }
        tau *= BARRIER_GROWTH;
    }

    let mut pa = PowerAllocation::zeros(n);
    for (j, v) in [&mut pa.p1, &mut pa.p2, &mut pa.pr].into_iter().enumerate() {
        let sum: f64 = (0..n).map(|k| x[k * BS + j]).sum();
        for k in 0..n {
            v[k] = x[k * BS + j] * maxes[j] / sum;
        }
    }
    Some((pa, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channel;
    use crate::exchange::solve_exchange;
    use crate::rates::check_feasible;

    #[test]
    fn single_subcarrier_matches_type1() {
        let ch = ChannelRealization::from_gains(vec![0.7], vec![1.9], vec![1.1], vec![0.4]).unwrap();
        let b = Budgets::equal(2.0, 0.5).unwrap();
        let cfg = SolverConfig::default();
        let t2 = solve_type2(&ch, &b, &cfg).unwrap();
        let t1 = solve_exchange(&ch, &b, &cfg).unwrap();
        assert!((t2.rates.r_exchange - t1.rates.r_exchange).abs() < 1e-7);
    }

    #[test]
    fn hop_mismatch_loses_to_type1() {
        let ch = ChannelRealization::from_gains(vec![4.0, 0.1], vec![4.0, 0.1], vec![0.1, 4.0], vec![0.1, 4.0]).unwrap();
        let b = Budgets::equal(2.0, 0.5).unwrap();
        let cfg = SolverConfig::default();
        let t2 = solve_type2(&ch, &b, &cfg).unwrap();
        let t1 = solve_exchange(&ch, &b, &cfg).unwrap();
        assert!(t2.rates.r_exchange < t1.rates.r_exchange - 0.05);
    }

    #[test]
    fn barrier_and_supergradient_agree() {
        let ch = generate_channel(16, 4, 3).unwrap();
        let b = Budgets::equal(16.0, 0.5).unwrap();
        let exact = solve_type2(&ch, &b, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            polish: false,
            ..SolverConfig::default()
        };
        let rough = solve_type2(&ch, &b, &cfg).unwrap();
        assert!(check_feasible(&rough.pa, &b, 1e-9));
        assert!(check_feasible(&exact.pa, &b, 1e-9));
        assert!(rough.rates.r_exchange <= exact.rates.r_exchange + 1e-9);
        assert!(rough.rates.r_exchange >= exact.rates.r_exchange * (1.0 - 1e-2));
    }

    #[test]
    fn zero_budget_falls_back_to_zero_rate() {
        let ch = generate_channel(8, 2, 1).unwrap();
        let b = Budgets::new(1.0, 0.0, 1.0, 0.5).unwrap();
        let sol = solve_type2(&ch, &b, &SolverConfig::default()).unwrap();
        assert_eq!(sol.rates.r_exchange, 0.0);
    }
}
