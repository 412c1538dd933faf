//! Broadcast subproblem: choose the relay powers `PR` to maximize the
//! weaker of the two downlink rates.
//!
//! Same dual scheme as the MA side, with two rate multipliers and one
//! power price. The per-subcarrier stationarity condition
//!
//! ```text
//! α = k·[λ1·a/(1 + a·P) + λ2·b/(1 + b·P)],   k = (1 − μ)/ln2
//! ```
//!
//! clears to the quadratic
//!
//! ```text
//! α·ab·P² + [α(a + b) − k·ab·(λ1 + λ2)]·P + α − k(λ1·a + λ2·b) = 0,
//! ```
//!
//! whose constant term is negative exactly when the gradient at `P = 0`
//! points inward, and then it has a single positive root.

use std::f64::consts::LN_2;

use crate::channel::ChannelRealization;
use crate::dual::{self, DualPoint, SolverConfig, Subproblem, ALPHA_FLOOR};
use crate::error::{Error, Result};
use crate::numerics::{positive_root_quadratic, water_level};
use crate::rates::{bc_constraints, Budgets};

#[derive(Debug, Clone)]
pub struct BcSolution {
    pub par: Vec<f64>,
    /// `min(C_BC1, C_BC2)` at `par`.
    pub r_bc: f64,
    pub dual: DualPoint,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub dual_gap: f64,
    pub dual_bound: f64,
}

/// `∂L/∂P` of the per-subcarrier BC Lagrangian term. Strictly increasing
/// in `P` whenever a weighted gain is positive.
pub fn bc_gradient(a: f64, b: f64, lambda: &[f64], alpha: f64, mu: f64, p: f64) -> f64 {
    let k = (1.0 - mu) / LN_2;
    alpha - k * (lambda[0] * a / (1.0 + a * p) + lambda[1] * b / (1.0 + b * p))
}

/// Inner minimizer on one subcarrier for downlink gains `a` (to T1) and
/// `b` (to T2).
pub fn inner_subcarrier_solve_bc(a: f64, b: f64, dual: &DualPoint, mu: f64) -> Result<f64> {
    if dual.lambda.len() != 2 || dual.alpha.len() != 1 {
        return Err(Error::InvalidParameter(
            "BC dual point needs 2 rate and 1 power multiplier".into(),
        ));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidParameter("gains must be nonnegative".into()));
    }
    if dual.alpha[0] <= 0.0 && dual.lambda[0] * a + dual.lambda[1] * b > 0.0 {
        return Err(Error::UnboundedInner);
    }
    Ok(solve_subcarrier(a, b, &dual.lambda, dual.alpha[0].max(ALPHA_FLOOR), mu))
}

fn solve_subcarrier(a: f64, b: f64, lambda: &[f64], alpha: f64, mu: f64) -> f64 {
    let k = (1.0 - mu) / LN_2;
    let (l1, l2) = (lambda[0], lambda[1]);
    let c0 = alpha - k * (l1 * a + l2 * b);
    if c0 >= 0.0 {
        return 0.0;
    }
    let c2 = alpha * a * b;
    let c1 = alpha * (a + b) - k * a * b * (l1 + l2);
    match positive_root_quadratic(c2, c1, c0) {
        Ok(Some(p)) => p,
        // c0 < 0 rules out both a = b = 0 and a missing positive root.
        _ => 0.0,
    }
}

pub fn bc_kkt_residual(gt1: &[f64], gt2: &[f64], pr: &[f64], dual: &DualPoint, mu: f64) -> f64 {
    (0..pr.len())
        .map(|n| {
            let g = bc_gradient(gt1[n], gt2[n], &dual.lambda, dual.alpha[0], mu, pr[n]);
            pr[n].min(g).abs()
        })
        .fold(0.0, f64::max)
}

struct BcProblem<'a> {
    gt1: &'a [f64],
    gt2: &'a [f64],
    budget: [f64; 1],
    mu: f64,
}

impl Subproblem for BcProblem<'_> {
    fn n_subcarriers(&self) -> usize {
        self.gt1.len()
    }

    fn n_rates(&self) -> usize {
        2
    }

    fn budgets(&self) -> &[f64] {
        &self.budget
    }

    fn inner(&self, lambda: &[f64], alpha: &[f64], out: &mut [Vec<f64>]) {
        for (n, p) in out[0].iter_mut().enumerate() {
            *p = solve_subcarrier(self.gt1[n], self.gt2[n], lambda, alpha[0], self.mu);
        }
    }

    fn constraints(&self, powers: &[Vec<f64>]) -> Vec<f64> {
        bc_constraints(self.gt1, self.gt2, &powers[0], self.mu).to_vec()
    }

    fn kkt_residual(&self, powers: &[Vec<f64>], lambda: &[f64], alpha: &[f64]) -> f64 {
        let dual = DualPoint::new(lambda.to_vec(), alpha.to_vec());
        bc_kkt_residual(self.gt1, self.gt2, &powers[0], &dual, self.mu)
    }

    fn local_derivatives(&self, powers: &[Vec<f64>], n: usize, grad: &mut [Vec<f64>], hess: &mut [Vec<f64>]) {
        let k = (1.0 - self.mu) / LN_2;
        let p = powers[0][n];
        for (i, g) in [self.gt1[n], self.gt2[n]].into_iter().enumerate() {
            let y = 1.0 + g * p;
            grad[i][0] = k * g / y;
            hess[i][0] = -k * g * g / (y * y);
        }
    }

    fn depends(&self, _rate: usize, _vector: usize) -> bool {
        true
    }

    fn alpha_ref(&self) -> Vec<f64> {
        let n = self.gt1.len() as f64;
        let level = self.budget[0] / n;
        let k = (1.0 - self.mu) / LN_2;
        let marginal: f64 = self
            .gt1
            .iter()
            .zip(self.gt2)
            .map(|(&a, &b)| 0.5 * (a / (1.0 + a * level) + b / (1.0 + b * level)))
            .sum();
        vec![k * marginal / n]
    }
}

/// Solves the BC subproblem by projected subgradient ascent on its dual.
pub fn solve_bc(ch: &ChannelRealization, budgets: &Budgets, cfg: &SolverConfig) -> Result<BcSolution> {
    budgets.validate()?;
    cfg.validate()?;
    let problem = BcProblem {
        gt1: &ch.gt1,
        gt2: &ch.gt2,
        budget: [budgets.pr_max],
        mu: budgets.mu,
    };
    let run = dual::solve(&problem, cfg);
    let par = run.powers.into_iter().next().expect("one power vector");
    Ok(BcSolution {
        par,
        r_bc: run.rate,
        dual: run.dual,
        iterations: run.iterations,
        converged: run.converged,
        kkt_residual: run.kkt_residual,
        dual_gap: run.dual_bound - run.rate,
        dual_bound: run.dual_bound,
    })
}

/// Classic single-link water-filling: `P_n = (level − 1/g_n)^+` with the
/// level set so that `ΣP_n = budget`.
pub fn water_filling(gains: &[f64], budget: f64) -> Vec<f64> {
    let level = water_level(gains, budget);
    gains
        .iter()
        .map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect()
}
