//! Exact optimality certificates for the dual solvers.
//!
//! At an optimum only some rate constraints carry weight. Guessing that
//! support `S`, the optimal multipliers solve a small square system: every
//! budget used by `S` is spent exactly and the constraints in `S` are equal.
//! The unknowns are the log-ratios of `λ_S` and `ln α_j`, and the
//! system is solved by damped Newton with a finite-difference Jacobian.
//!
//! A solution is accepted only through weak duality. The inner minimizer at
//! the final multipliers gives a dual value `D`, which bounds the optimum
//! from above whenever `λ` is on the simplex. Rescaled to the budgets, it
//! also gives a feasible rate `r`. The pair is a certificate of
//! accuracy `D − r`.

use crate::dual::{rescale_to_budgets, DualPoint, Subproblem, ALPHA_FLOOR};

/// Newton stops once every residual is below this.
const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITERS: usize = 60;
const FD_STEP: f64 = 1e-7;
const MAX_STEP: f64 = 1.0;

/// Multipliers together with a minimizer of the Lagrangian at them.
#[derive(Debug, Clone)]
pub(crate) struct Stationary {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub powers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Certificate {
    /// Feasible allocation spending every budget.
    pub powers: Vec<Vec<f64>>,
    pub dual: DualPoint,
    /// `min_i C_i` at `powers`.
    pub rate: f64,
    /// Dual function value at `dual`.
    pub bound: f64,
}

/// Vectors touched by at least one constraint in `support`.
fn relevant<S: Subproblem>(problem: &S, support: &[usize]) -> Vec<bool> {
    (0..problem.budgets().len())
        .map(|j| support.iter().any(|&i| problem.depends(i, j)))
        .collect()
}

/// Attempts a certificate with constraint support `support`, starting the
/// Newton solve from `(lambda0, alpha0)`.
pub(crate) fn try_support<S: Subproblem>(
    problem: &S,
    support: &[usize],
    lambda0: &[f64],
    alpha0: &[f64],
    alpha_ref: &[f64],
    rate_ref: f64,
) -> Option<Certificate> {
    let used = relevant(problem, support);
    if let Some(st) = problem.special_support(support) {
        return finish(problem, support, &used, st);
    }
    let flat = vec![1.0; lambda0.len()];
    for (l0, a0) in [(lambda0, alpha0), (&flat[..], alpha_ref)] {
        let Some(st) = newton(problem, support, &used, l0, a0, alpha_ref, rate_ref) else {
            continue;
        };
        let cert = finish(problem, support, &used, st)?;
        if cert.bound - cert.rate <= 1e-9 * cert.rate.abs() {
            return Some(cert);
        }
    }
    None
}

fn finish<S: Subproblem>(problem: &S, support: &[usize], used: &[bool], st: Stationary) -> Option<Certificate> {
    let budgets = problem.budgets();
    if st.lambda.iter().any(|&l| !(l >= 0.0)) || st.alpha.iter().any(|&a| !(a >= 0.0)) {
        return None;
    }
    let c = problem.constraints(&st.powers);
    let bound = support.iter().map(|&i| st.lambda[i] * c[i]).sum::<f64>()
        - (0..budgets.len())
            .filter(|&j| used[j])
            .map(|j| st.alpha[j] * (st.powers[j].iter().sum::<f64>() - budgets[j]))
            .sum::<f64>();
    if !bound.is_finite() {
        return None;
    }

    let mut powers = st.powers;
    let target = support.iter().map(|&i| c[i]).fold(f64::INFINITY, f64::min);
    let free: Vec<bool> = used.iter().map(|u| !u).collect();
    if free.iter().any(|&f| f) {
        problem.fill_free(&mut powers, &free, target);
    }
    rescale_to_budgets(&mut powers, budgets);
    let rate = problem.constraints(&powers).into_iter().fold(f64::INFINITY, f64::min);

    let alpha = st.alpha.iter().zip(used).map(|(&a, &u)| if u { a } else { 0.0 }).collect();
    Some(Certificate {
        powers,
        dual: DualPoint::new(st.lambda, alpha),
        rate,
        bound,
    })
}

/// Certificate for arbitrary multipliers and an arbitrary allocation: the
/// dual value comes from the exact inner minimizer at `(lambda, alpha)`,
/// the rate from `powers` rescaled to the budgets.
pub(crate) fn point_certificate<S: Subproblem>(
    problem: &S,
    lambda: &[f64],
    alpha: &[f64],
    mut powers: Vec<Vec<f64>>,
) -> Certificate {
    let budgets = problem.budgets();
    let floored: Vec<f64> = alpha.iter().map(|a| a.max(ALPHA_FLOOR)).collect();
    let mut inner = vec![vec![0.0; problem.n_subcarriers()]; budgets.len()];
    problem.inner(lambda, &floored, &mut inner);
    let c = problem.constraints(&inner);
    let bound = lambda.iter().zip(&c).map(|(l, c)| l * c).sum::<f64>()
        - floored
            .iter()
            .zip(&inner)
            .zip(budgets)
            .map(|((a, p), b)| a * (p.iter().sum::<f64>() - b))
            .sum::<f64>();
    rescale_to_budgets(&mut powers, budgets);
    let rate = problem.constraints(&powers).into_iter().fold(f64::INFINITY, f64::min);
    Certificate {
        powers,
        dual: DualPoint::new(lambda.to_vec(), floored),
        rate,
        bound: if bound.is_finite() { bound } else { f64::INFINITY },
    }
}

/// Maps Newton unknowns to full multiplier vectors.
fn unpack(support: &[usize], used: &[bool], n_rates: usize, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = support.len();
    let mut lambda = vec![0.0; n_rates];
    // log-ratios against the last support member keep λ_S strictly positive
    let top = u[..m - 1].iter().copied().fold(0.0, f64::max);
    let weights: Vec<f64> = u[..m - 1].iter().map(|v| (v - top).exp()).chain([(-top).exp()]).collect();
    let total: f64 = weights.iter().sum();
    for (&i, w) in support.iter().zip(&weights) {
        lambda[i] = w / total;
    }
    let mut idx = m - 1;
    let alpha = used
        .iter()
        .map(|&on| {
            if on {
                idx += 1;
                u[idx - 1].exp().max(ALPHA_FLOOR)
            } else {
                ALPHA_FLOOR
            }
        })
        .collect();
    (lambda, alpha)
}

#[allow(clippy::too_many_arguments)]
fn newton<S: Subproblem>(
    problem: &S,
    support: &[usize],
    used: &[bool],
    lambda0: &[f64],
    alpha0: &[f64],
    alpha_ref: &[f64],
    rate_ref: f64,
) -> Option<Stationary> {
    let n = problem.n_subcarriers();
    let n_rates = problem.n_rates();
    let budgets = problem.budgets();
    let n_pow = budgets.len();
    let m = support.len();

    let floor = 1e-6 * support.iter().map(|&i| lambda0[i]).fold(0.0, f64::max);
    let start = |i: usize| lambda0[i].max(floor).max(f64::MIN_POSITIVE);
    let last = start(support[m - 1]);
    let mut u: Vec<f64> = support[..m - 1].iter().map(|&i| (start(i) / last).ln()).collect();
    for j in (0..n_pow).filter(|&j| used[j]) {
        let a = if alpha0[j] > 1e-8 * alpha_ref[j] { alpha0[j] } else { alpha_ref[j] };
        u.push(a.ln());
    }
    let dim = u.len();

    let mut powers = vec![vec![0.0; n]; n_pow];
    let residual = |u: &[f64], powers: &mut Vec<Vec<f64>>| -> Vec<f64> {
        let (lambda, alpha) = unpack(support, used, n_rates, u);
        problem.inner(&lambda, &alpha, powers);
        let c = problem.constraints(powers);
        let mut f: Vec<f64> = (0..n_pow)
            .filter(|&j| used[j])
            .map(|j| powers[j].iter().sum::<f64>() / budgets[j] - 1.0)
            .collect();
        f.extend(support[1..].iter().map(|&i| (c[i] - c[support[0]]) / rate_ref));
        f
    };
    let norm = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut f = residual(&u, &mut powers);
    if f.len() != dim {
        return None;
    }
    for _ in 0..NEWTON_MAX_ITERS {
        if !f.iter().all(|x| x.is_finite()) {
            return None;
        }
        if f.iter().all(|x| x.abs() <= NEWTON_TOL) {
            break;
        }
        // a multiplier ratio past e^±40 means the support is too large
        if u[..m - 1].iter().any(|v| v.abs() > 40.0) {
            return None;
        }
        let mut jac = vec![vec![0.0; dim]; dim];
        let mut scratch = powers.clone();
        for col in 0..dim {
            let mut v = u.clone();
            v[col] += FD_STEP;
            let fv = residual(&v, &mut scratch);
            for row in 0..dim {
                jac[row][col] = (fv[row] - f[row]) / FD_STEP;
            }
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let mut delta = solve_dense(jac, rhs)?;
        // log coordinates: cap each move at a factor of e^MAX_STEP
        let longest = delta.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        if longest > MAX_STEP {
            delta.iter_mut().for_each(|d| *d *= MAX_STEP / longest);
        }

        let base = norm(&f);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let v: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let fv = residual(&v, &mut scratch);
            if fv.iter().all(|x| x.is_finite()) && norm(&fv) < (1.0 - 1e-4 * t) * base {
                u = v;
                f = fv;
                std::mem::swap(&mut powers, &mut scratch);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (lambda, alpha) = unpack(support, used, n_rates, &u);
    problem.inner(&lambda, &alpha, &mut powers);
    Some(Stationary { lambda, alpha, powers })
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Every nonempty subset of `0..n`, smallest first.
pub(crate) fn all_supports(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort_by_key(|s: &Vec<usize>| s.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_matches_hand_system() {
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let x = solve_dense(a, vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn supports_cover_all_subsets() {
        let s = all_supports(3);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], vec![0]);
        assert_eq!(s[6], vec![0, 1, 2]);
    }
}
