#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use twrelay::numerics::CubicCoefficients;
use twrelay::{Budgets, ChannelRealization, PowerAllocation};

/// Real roots of a cubic (a3 ≠ 0) by bisection on the monotone pieces
/// between critical points, inside the Cauchy bound.
pub fn bracket_cubic_roots(c: CubicCoefficients) -> Vec<f64> {
    let bound = 1.0 + [c.a2, c.a1, c.a0].iter().map(|a| (a / c.a3).abs()).fold(0.0, f64::max);
    let (qa, qb, qc) = (3.0 * c.a3, 2.0 * c.a2, c.a1);
    let disc = qb * qb - 4.0 * qa * qc;
    let mut knots = vec![-bound];
    if disc > 0.0 {
        let s = disc.sqrt();
        let mut crit = [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)];
        crit.sort_by(f64::total_cmp);
        knots.extend(crit.iter().filter(|x| x.abs() < bound));
    }
    knots.push(bound);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (c.eval(lo), c.eval(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if c.eval(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Independent exponential gains with unit mean on all four links.
pub fn random_channel<R: Rng>(rng: &mut R, n: usize) -> ChannelRealization {
    let mut draw = || (0..n).map(|_| Exp1.sample(&mut *rng)).collect::<Vec<f64>>();
    let (g1, g2, gt1, gt2) = (draw(), draw(), draw(), draw());
    ChannelRealization::from_gains(g1, g2, gt1, gt2).unwrap()
}

/// Random allocation spending a random fraction of each budget.
pub fn random_feasible_pa<R: Rng>(rng: &mut R, n: usize, budgets: &Budgets) -> PowerAllocation {
    let mut vec_for = |max: f64| {
        let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let spend = rng.gen_range(0.0..=1.0) * max;
        w.iter().map(|x| x / total * spend).collect::<Vec<f64>>()
    };
    PowerAllocation {
        p1: vec_for(budgets.p1_max),
        p2: vec_for(budgets.p2_max),
        pr: vec_for(budgets.pr_max),
    }
}
