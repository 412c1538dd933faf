//! Projected subgradient ascent on the dual of a max-min rate problem.
//!
//! Both subproblems share the same shape: maximize `min_i C_i(P)` over
//! power vectors with one sum budget each. Dualizing the rate constraints
//! with `λ` on the probability simplex and the budgets with `α ≥ 0`, the
//! dual function separates over subcarriers, and its subgradient is
//! `(−C_i(P*), ΣP*_j − P_j,max)` where `P*` is the inner minimizer.
//!
//! The iteration runs in rescaled coordinates `α̃_j = α_j / α_ref_j` with the
//! rate terms divided by a reference rate, so that a single dimensionless
//! step size suits every SNR. The feasible set is a product of the simplex
//! (λ, untouched by the scaling) and the orthant (α̃), so the projection
//! still splits into a Michelot step and a clamp.

use crate::barrier;
use crate::certify::{all_supports, point_certificate, try_support, Certificate, Stationary};
use crate::error::{Error, Result};
use crate::numerics::{project_nonneg, project_simplex};

/// Lower clamp on the power prices inside the inner minimization. At zero
/// price the inner problem is unbounded.
pub const ALPHA_FLOOR: f64 = 1e-12;

/// Diminishing step-size schedules, `s_k` for `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `s0 / sqrt(k)`
    InvSqrt,
    /// `s0 / k`
    Harmonic,
    /// `s0 / sqrt(k)`, additionally halved each time the dual bound fails to
    /// improve for a stretch of iterations.
    AdaptiveInvSqrt,
}

impl StepRule {
    pub fn name(&self) -> &'static str {
        match self {
            StepRule::InvSqrt => "inv-sqrt",
            StepRule::Harmonic => "harmonic",
            StepRule::AdaptiveInvSqrt => "adaptive-inv-sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "inv-sqrt" => Some(StepRule::InvSqrt),
            "harmonic" => Some(StepRule::Harmonic),
            "adaptive-inv-sqrt" => Some(StepRule::AdaptiveInvSqrt),
            _ => None,
        }
    }

    fn base(&self, k: usize) -> f64 {
        match self {
            StepRule::InvSqrt | StepRule::AdaptiveInvSqrt => 1.0 / (k as f64).sqrt(),
            StepRule::Harmonic => 1.0 / k as f64,
        }
    }
}

/// Settings shared by every iterative solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative dual-change stopping tolerance.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Initial step size in the rescaled dual coordinates.
    pub step0: f64,
    pub step_rule: StepRule,
    /// Periodically try to certify an exact optimum near the current
    /// multipliers and stop once one is found.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iters: 20_000,
            step0: 1.0,
            step_rule: StepRule::InvSqrt,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be > 0".into()));
        }
        if !(self.step0 > 0.0) {
            return Err(Error::InvalidParameter("step0 must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn step_rule_base(&self, k: usize) -> f64 {
        self.step_rule.base(k)
    }
}

/// Multipliers of the rate constraints (`lambda`, on the simplex) and of
/// the power budgets (`alpha`, nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl DualPoint {
    pub fn new(lambda: Vec<f64>, alpha: Vec<f64>) -> Self {
        Self { lambda, alpha }
    }

    /// Whether `λ` lies on the simplex and `α ≥ 0`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.lambda.iter().all(|&l| l >= 0.0)
            && (self.lambda.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.alpha.iter().all(|&a| a >= 0.0)
    }
}

/// A max-min rate problem whose Lagrangian separates over subcarriers.
pub(crate) trait Subproblem {
    fn n_subcarriers(&self) -> usize;
    fn n_rates(&self) -> usize;
    /// One budget per power vector.
    fn budgets(&self) -> &[f64];
    /// Writes the inner minimizer for `(lambda, alpha)` into `out`, with
    /// `alpha` already floored at [`ALPHA_FLOOR`].
    fn inner(&self, lambda: &[f64], alpha: &[f64], out: &mut [Vec<f64>]);
    /// Rate-constraint values `C_i(P)`.
    fn constraints(&self, powers: &[Vec<f64>]) -> Vec<f64>;
    /// Max over subcarriers and vectors of `|min(P, ∂L/∂P)|`.
    fn kkt_residual(&self, powers: &[Vec<f64>], lambda: &[f64], alpha: &[f64]) -> f64;
    /// Typical price scale for each budget.
    fn alpha_ref(&self) -> Vec<f64>;
    /// Gradient and Hessian of every rate constraint with respect to the
    /// powers on subcarrier `n`: `grad[i][j]` and `hess[i][j * n_vectors + k]`.
    fn local_derivatives(&self, powers: &[Vec<f64>], n: usize, grad: &mut [Vec<f64>], hess: &mut [Vec<f64>]);
    /// Whether rate constraint `rate` varies with power vector `vector`.
    fn depends(&self, rate: usize, vector: usize) -> bool;
    /// Closed-form stationary point for supports where the inner minimizer
    /// is not unique.
    fn special_support(&self, _support: &[usize]) -> Option<Stationary> {
        None
    }
    /// Chooses the vectors marked in `free`, which no weighted constraint
    /// uses, so that the remaining constraints reach `target` if possible.
    fn fill_free(&self, powers: &mut [Vec<f64>], free: &[bool], _target: f64) {
        let n = self.n_subcarriers() as f64;
        for (j, p) in powers.iter_mut().enumerate() {
            if free[j] {
                p.iter_mut().for_each(|x| *x = self.budgets()[j] / n);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DualRun {
    pub powers: Vec<Vec<f64>>,
    pub rate: f64,
    pub dual: DualPoint,
    pub dual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Scales every vector to meet its budget with equality. Rates are
/// nondecreasing in every power, so this never lowers a constraint when
/// scaling up and restores feasibility when scaling down.
pub(crate) fn rescale_to_budgets(powers: &mut [Vec<f64>], budgets: &[f64]) {
    for (p, &max) in powers.iter_mut().zip(budgets) {
        let total: f64 = p.iter().sum();
        if total > 0.0 && total.is_finite() {
            let f = max / total;
            p.iter_mut().for_each(|x| *x *= f);
        } else if !total.is_finite() {
            p.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Iterations without a dual-bound improvement before the adaptive rule
/// halves its step.
const STALL_WINDOW: usize = 50;

/// Number of stored prefix-sum checkpoints for the ergodic primal average.
const CHECKPOINTS: usize = 400;

/// Subgradient iterations between certification attempts.
const POLISH_EVERY: usize = 20;

/// Every this many attempts, all supports are tried instead of the guessed ones.
const FULL_ATTEMPT_EVERY: usize = 10;

/// With polishing on, the subgradient phase hands over to the barrier
/// method after this many iterations without a certificate.
const POLISH_PATIENCE: usize = 300;

/// Relative duality gap accepted as an exact optimum.
const CERT_GAP: f64 = 1e-10;

/// Relative gap accepted from the barrier method.
const BARRIER_GAP: f64 = 1e-8;

/// Best feasible allocation seen, with the multipliers it came with, and
/// the lowest dual bound seen.
struct Incumbent {
    powers: Vec<Vec<f64>>,
    rate: f64,
    dual: DualPoint,
    bound: f64,
}

impl Incumbent {
    fn offer(&mut self, powers: Vec<Vec<f64>>, rate: f64, dual: DualPoint) {
        if rate > self.rate {
            self.powers = powers;
            self.rate = rate;
            self.dual = dual;
        }
    }

    fn absorb(&mut self, cert: Certificate) {
        self.bound = self.bound.min(cert.bound);
        self.offer(cert.powers, cert.rate, cert.dual);
    }

    fn gap_ok(&self, tol: f64) -> bool {
        self.bound - self.rate <= tol * self.rate
    }
}

/// Tries every support from `(lambda, alpha)`; true once certified.
fn polish_supports<S: Subproblem>(
    problem: &S,
    supports: Vec<Vec<usize>>,
    lambda: &[f64],
    alpha: &[f64],
    refs: (&[f64], f64),
    best: &mut Incumbent,
) -> bool {
    for support in supports {
        if let Some(cert) = try_support(problem, &support, lambda, alpha, refs.0, refs.1) {
            best.absorb(cert);
            if best.gap_ok(CERT_GAP) {
                return true;
            }
        }
    }
    false
}

pub(crate) fn solve<S: Subproblem>(problem: &S, cfg: &SolverConfig) -> DualRun {
    let n = problem.n_subcarriers();
    let n_rates = problem.n_rates();
    let budgets = problem.budgets().to_vec();
    let n_pow = budgets.len();

    let mut uniform: Vec<Vec<f64>> = budgets.iter().map(|&b| vec![b / n as f64; n]).collect();
    rescale_to_budgets(&mut uniform, &budgets);
    let uniform_rates = problem.constraints(&uniform);
    if let Some(zero) = uniform_rates.iter().position(|&c| !(c > 0.0)) {
        // A constraint that is zero with every budget spread out is zero for
        // every feasible allocation, so the optimum is zero.
        let mut lambda = vec![0.0; n_rates];
        lambda[zero] = 1.0;
        return DualRun {
            powers: uniform,
            rate: 0.0,
            dual: DualPoint::new(lambda, vec![0.0; n_pow]),
            dual_bound: 0.0,
            iterations: 0,
            converged: true,
            kkt_residual: 0.0,
        };
    }
    let rate_ref = uniform_rates.iter().copied().fold(0.0, f64::max);
    let alpha_ref = problem.alpha_ref();
    let refs = (&alpha_ref[..], rate_ref);

    // Scaled state: λ on the simplex, α̃ = α / α_ref starting at 1.
    let mut lambda = project_simplex(&vec![1.0; n_rates]).expect("nonempty");
    let mut alpha_s = vec![1.0; n_pow];
    let mut step_scale = 1.0;

    let mut best = Incumbent {
        rate: min_of(&uniform_rates),
        powers: uniform,
        dual: DualPoint::new(lambda.clone(), alpha_ref.clone()),
        bound: f64::INFINITY,
    };
    let mut powers: Vec<Vec<f64>> = vec![vec![0.0; n]; n_pow];
    let mut since_improve = 0usize;

    let stride = (cfg.max_iters / CHECKPOINTS).max(1);
    let mut running: Vec<Vec<f64>> = vec![vec![0.0; n]; n_pow];
    let mut checkpoints: Vec<(usize, Vec<Vec<f64>>)> = vec![(0, running.clone())];

    let iter_cap = if cfg.polish {
        cfg.max_iters.min(POLISH_PATIENCE)
    } else {
        cfg.max_iters
    };
    let mut converged = false;
    let mut certified = false;
    let mut k = 0;
    let mut alpha = vec![0.0; n_pow];
    while k < iter_cap {
        k += 1;
        for j in 0..n_pow {
            alpha[j] = (alpha_s[j] * alpha_ref[j]).max(ALPHA_FLOOR);
        }
        problem.inner(&lambda, &alpha, &mut powers);
        let c = problem.constraints(&powers);
        let sums: Vec<f64> = powers.iter().map(|p| p.iter().sum()).collect();

        // Dual function value: an upper bound on the optimal rate.
        let bound: f64 = lambda.iter().zip(&c).map(|(l, c)| l * c).sum::<f64>()
            - alpha
                .iter()
                .zip(sums.iter().zip(&budgets))
                .map(|(a, (s, b))| a * (s - b))
                .sum::<f64>();
        if bound < best.bound {
            if bound < best.bound - 1e-12 * best.bound.abs().max(1e-300) {
                since_improve = 0;
            }
            best.bound = bound;
        } else {
            since_improve += 1;
        }

        let mut candidate = powers.clone();
        rescale_to_budgets(&mut candidate, &budgets);
        let cand_c = problem.constraints(&candidate);
        let r = min_of(&cand_c);
        best.offer(candidate, r, DualPoint::new(lambda.clone(), alpha.clone()));

        if cfg.polish && k % POLISH_EVERY == 0 {
            let supports = if k == POLISH_EVERY || k % (FULL_ATTEMPT_EVERY * POLISH_EVERY) == 0 {
                all_supports(n_rates)
            } else {
                let by_lambda: Vec<usize> = (0..n_rates).filter(|&i| lambda[i] >= 1e-3).collect();
                let by_rate: Vec<usize> = (0..n_rates).filter(|&i| cand_c[i] <= r * (1.0 + 1e-3)).collect();
                if by_lambda == by_rate {
                    vec![by_lambda]
                } else {
                    vec![by_lambda, by_rate]
                }
            };
            if polish_supports(problem, supports, &lambda, &alpha, refs, &mut best) {
                certified = true;
                break;
            }
        }

        for (acc, p) in running.iter_mut().zip(&powers) {
            acc.iter_mut().zip(p).for_each(|(a, x)| *a += x);
        }
        if k % stride == 0 {
            checkpoints.push((k, running.clone()));
        }

        if cfg.step_rule == StepRule::AdaptiveInvSqrt && since_improve >= STALL_WINDOW {
            step_scale *= 0.5;
            since_improve = 0;
        }
        let s = cfg.step0 * step_scale * cfg.step_rule.base(k);

        let step_lambda: Vec<f64> = lambda
            .iter()
            .zip(&c)
            .map(|(l, ci)| l - s * ci / rate_ref)
            .collect();
        let new_lambda = project_simplex(&step_lambda).expect("nonempty");
        let step_alpha: Vec<f64> = (0..n_pow)
            .map(|j| alpha_s[j] + s * alpha_ref[j] * (sums[j] - budgets[j]) / rate_ref)
            .collect();
        let new_alpha = project_nonneg(&step_alpha);

        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for (a, b) in lambda.iter().zip(&new_lambda).chain(alpha_s.iter().zip(&new_alpha)) {
            diff2 += (a - b) * (a - b);
            norm2 += a * a;
        }
        lambda = new_lambda;
        alpha_s = new_alpha;
        if diff2.sqrt() <= cfg.epsilon * norm2.sqrt() {
            converged = true;
            break;
        }
    }

    let final_alpha: Vec<f64> = (0..n_pow)
        .map(|j| (alpha_s[j] * alpha_ref[j]).max(ALPHA_FLOOR))
        .collect();

    if !certified {
        // Ergodic recovery: average the inner minimizers of roughly the last 10%.
        let start = (k as f64 * 0.9).floor() as usize;
        if let Some((k0, base)) = checkpoints.iter().rev().find(|(kk, _)| *kk <= start) {
            if k > *k0 {
                let count = (k - k0) as f64;
                let mut avg: Vec<Vec<f64>> = running
                    .iter()
                    .zip(base)
                    .map(|(r, b)| r.iter().zip(b).map(|(x, y)| ((x - y) / count).max(0.0)).collect())
                    .collect();
                rescale_to_budgets(&mut avg, &budgets);
                let r = min_of(&problem.constraints(&avg));
                best.offer(avg, r, DualPoint::new(lambda.clone(), final_alpha.clone()));
            }
        }

        // The final inner minimizer, budget-matched.
        problem.inner(&lambda, &final_alpha, &mut powers);
        rescale_to_budgets(&mut powers, &budgets);
        let r = min_of(&problem.constraints(&powers));
        best.offer(powers, r, DualPoint::new(lambda.clone(), final_alpha.clone()));
    }

    if cfg.polish && !certified {
        certified = polish_supports(problem, all_supports(n_rates), &lambda, &final_alpha, refs, &mut best);
    }
    if cfg.polish && !certified {
        if let Some(bp) = barrier::solve(problem) {
            best.absorb(point_certificate(problem, &bp.lambda, &bp.alpha, bp.powers));
            let lam = bp.lambda.clone();
            certified = best.gap_ok(BARRIER_GAP)
                | polish_supports(problem, all_supports(n_rates), &lam, &bp.alpha, refs, &mut best);
        }
    }
    converged |= certified;

    let kkt = problem.kkt_residual(&best.powers, &best.dual.lambda, &best.dual.alpha);
    DualRun {
        powers: best.powers,
        rate: best.rate,
        dual: best.dual,
        dual_bound: best.bound,
        iterations: k,
        converged,
        kkt_residual: kkt,
    }
}
