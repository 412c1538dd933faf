//! Exchange-rate maximization over all three nodes. The terminal powers
//! only enter the MA constraints and the relay powers only the BC ones, so
//! the problem splits into the two subproblems and the optimal exchange
//! rate is the smaller of their optima.

use crate::bc::{solve_bc, BcSolution};
use crate::channel::ChannelRealization;
use crate::dual::SolverConfig;
use crate::error::{Error, Result};
use crate::ma::{solve_ma, MaSolution};
use crate::rates::{type1_rates, Budgets, PowerAllocation, RateSummary};

/// Tolerance between `min(r_ma, r_bc)` and the independent re-evaluation.
const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ExchangeSolution {
    pub pa: PowerAllocation,
    pub rates: RateSummary,
    pub ma: MaSolution,
    pub bc: BcSolution,
}

impl ExchangeSolution {
    pub fn converged(&self) -> bool {
        self.ma.converged && self.bc.converged
    }
}

pub fn solve_exchange(ch: &ChannelRealization, budgets: &Budgets, cfg: &SolverConfig) -> Result<ExchangeSolution> {
    let (ma, bc) = rayon::join(|| solve_ma(ch, budgets, cfg), || solve_bc(ch, budgets, cfg));
    let (ma, bc) = (ma?, bc?);
    let pa = PowerAllocation {
        p1: ma.pa1.clone(),
        p2: ma.pa2.clone(),
        pr: bc.par.clone(),
    };
    let rates = type1_rates(ch, &pa, budgets)?;
    let combined = ma.r_ma.min(bc.r_bc);
    if (rates.r_exchange - combined).abs() > CONSISTENCY_TOL * combined.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "inconsistent exchange rate: subproblems give {combined}, re-evaluation gives {}",
            rates.r_exchange
        )));
    }
    Ok(ExchangeSolution { pa, rates, ma, bc })
}

/// Equal power on every subcarrier at every node.
pub fn solve_uniform(ch: &ChannelRealization, budgets: &Budgets) -> Result<(PowerAllocation, RateSummary)> {
    let pa = PowerAllocation::uniform(ch.n_subcarriers(), budgets);
    let rates = type1_rates(ch, &pa, budgets)?;
    Ok((pa, rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channel;

    #[test]
    fn single_subcarrier_unit_gains() {
        let ch = ChannelRealization::flat(1, 1.0).unwrap();
        let b = Budgets::equal(1.0, 0.5).unwrap();
        let sol = solve_exchange(&ch, &b, &SolverConfig::default()).unwrap();
        assert!((sol.rates.r_exchange - 0.25 * 3f64.log2()).abs() < 1e-9);
        let (_, uni) = solve_uniform(&ch, &b).unwrap();
        assert!((uni.r_exchange - sol.rates.r_exchange).abs() < 1e-9);
    }

    #[test]
    fn dead_channel_is_zero() {
        let ch = ChannelRealization::flat(3, 0.0).unwrap();
        let b = Budgets::equal(1.0, 0.5).unwrap();
        let sol = solve_exchange(&ch, &b, &SolverConfig::default()).unwrap();
        assert_eq!(sol.rates.r_exchange, 0.0);
    }

    #[test]
    fn optimum_beats_uniform() {
        for seed in 0..5 {
            let ch = generate_channel(32, 8, seed).unwrap();
            let b = Budgets::equal(32.0, 0.5).unwrap();
            let sol = solve_exchange(&ch, &b, &SolverConfig::default()).unwrap();
            let (pa, uni) = solve_uniform(&ch, &b).unwrap();
            assert!(sol.rates.r_exchange >= uni.r_exchange - 1e-9);
            assert!((pa.p1.iter().sum::<f64>() - 32.0).abs() < 1e-9);
        }
    }
}
