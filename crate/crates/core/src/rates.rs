//! Achievable-rate expressions for multi-subcarrier (type 1) and
//! per-subcarrier (type 2) decode-and-forward two-way relaying.
//!
//! All rates are in bits per OFDM block; divide by `N` for bits/s/Hz.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

/// Default relative tolerance for budget checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-node power budgets and the MA-phase time fraction `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub p1_max: f64,
    pub p2_max: f64,
    pub pr_max: f64,
    pub mu: f64,
}

impl Budgets {
    pub fn new(p1_max: f64, p2_max: f64, pr_max: f64, mu: f64) -> Result<Self> {
        let b = Self {
            p1_max,
            p2_max,
            pr_max,
            mu,
        };
        b.validate()?;
        Ok(b)
    }

    /// All three budgets equal.
    pub fn equal(p_max: f64, mu: f64) -> Result<Self> {
        Self::new(p_max, p_max, p_max, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidParameter(format!("mu = {} not in (0, 1)", self.mu)));
        }
        for (name, v) in [("p1_max", self.p1_max), ("p2_max", self.p2_max), ("pr_max", self.pr_max)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Transmit powers of T1, T2 and the relay, one entry per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub pr: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n: usize) -> Self {
        Self {
            p1: vec![0.0; n],
            p2: vec![0.0; n],
            pr: vec![0.0; n],
        }
    }

    /// `P_max / N` on every subcarrier for every node.
    pub fn uniform(n: usize, budgets: &Budgets) -> Self {
        let nf = n as f64;
        Self {
            p1: vec![budgets.p1_max / nf; n],
            p2: vec![budgets.p2_max / nf; n],
            pr: vec![budgets.pr_max / nf; n],
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.p1.len()
    }

    fn check_against(&self, ch: &ChannelRealization) -> Result<()> {
        let n = ch.n_subcarriers();
        for v in [&self.p1, &self.p2, &self.pr] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if let Some((index, &value)) = v.iter().enumerate().find(|(_, &p)| !(p >= 0.0)) {
                return Err(Error::NegativePower { index, value });
            }
        }
        Ok(())
    }
}

/// The five rate-constraint values of the type 1 region at one power
/// allocation and the resulting symmetric exchange rate.
///
/// `c_ma_sum` is the full sum-rate bound; the exchange rate is limited by
/// half of it. For the type 2 region `c_ma_1`/`c_bc_2` and `c_ma_2`/`c_bc_1`
/// are folded into the directional bounds, which are reported in
/// `c_ma_1` (T1→T2) and `c_ma_2` (T2→T1) with `c_bc_*` set to the same values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSummary {
    pub c_ma_1: f64,
    pub c_ma_2: f64,
    pub c_ma_sum: f64,
    pub c_bc_1: f64,
    pub c_bc_2: f64,
    pub r_exchange: f64,
}

impl RateSummary {
    /// Lower bound `2·R_X` on the sum rate.
    pub fn sum_rate(&self) -> f64 {
        2.0 * self.r_exchange
    }
}

/// The three MA-side constraint values `[μΣlog(1+g1P1), μΣlog(1+g2P2),
/// (μ/2)Σlog(1+g1P1+g2P2)]`. The third entry is already halved.
pub fn ma_constraints(g1: &[f64], g2: &[f64], p1: &[f64], p2: &[f64], mu: f64) -> [f64; 3] {
    let mut c = [0.0; 3];
    for n in 0..g1.len() {
        let x1 = g1[n] * p1[n];
        let x2 = g2[n] * p2[n];
        c[0] += x1.ln_1p();
        c[1] += x2.ln_1p();
        c[2] += (x1 + x2).ln_1p();
    }
    let k = mu / std::f64::consts::LN_2;
    [k * c[0], k * c[1], 0.5 * k * c[2]]
}

/// The two BC-side constraint values `[(1−μ)Σlog(1+gt1·PR), (1−μ)Σlog(1+gt2·PR)]`.
pub fn bc_constraints(gt1: &[f64], gt2: &[f64], pr: &[f64], mu: f64) -> [f64; 2] {
    let mut c = [0.0; 2];
    for n in 0..pr.len() {
        c[0] += (gt1[n] * pr[n]).ln_1p();
        c[1] += (gt2[n] * pr[n]).ln_1p();
    }
    let k = (1.0 - mu) / std::f64::consts::LN_2;
    [k * c[0], k * c[1]]
}

/// Constraint values of the multi-subcarrier region, where coding spans
/// subcarriers and each constraint is a sum of per-subcarrier logs.
pub fn type1_rates(ch: &ChannelRealization, pa: &PowerAllocation, budgets: &Budgets) -> Result<RateSummary> {
    budgets.validate()?;
    pa.check_against(ch)?;
    let [c_ma_1, c_ma_2, half_sum] = ma_constraints(&ch.g1, &ch.g2, &pa.p1, &pa.p2, budgets.mu);
    let [c_bc_1, c_bc_2] = bc_constraints(&ch.gt1, &ch.gt2, &pa.pr, budgets.mu);
    let r_exchange = c_ma_1.min(c_ma_2).min(half_sum).min(c_bc_1).min(c_bc_2);
    Ok(RateSummary {
        c_ma_1,
        c_ma_2,
        c_ma_sum: 2.0 * half_sum,
        c_bc_1,
        c_bc_2,
        r_exchange,
    })
}

/// Directional bounds of the per-subcarrier region: for T1→T2 and T2→T1,
/// the per-subcarrier min of the MA and BC hop rates summed over subcarriers.
pub fn type2_directional(ch: &ChannelRealization, pa: &PowerAllocation, mu: f64) -> [f64; 2] {
    let ma = mu / std::f64::consts::LN_2;
    let bc = (1.0 - mu) / std::f64::consts::LN_2;
    let mut d = [0.0; 2];
    for n in 0..ch.n_subcarriers() {
        d[0] += (ma * (ch.g1[n] * pa.p1[n]).ln_1p()).min(bc * (ch.gt2[n] * pa.pr[n]).ln_1p());
        d[1] += (ma * (ch.g2[n] * pa.p2[n]).ln_1p()).min(bc * (ch.gt1[n] * pa.pr[n]).ln_1p());
    }
    d
}

/// Constraint values of the per-subcarrier region. The directional bounds
/// are stored in `c_ma_1`/`c_bc_2` (T1→T2) and `c_ma_2`/`c_bc_1` (T2→T1).
pub fn type2_rates(ch: &ChannelRealization, pa: &PowerAllocation, budgets: &Budgets) -> Result<RateSummary> {
    budgets.validate()?;
    pa.check_against(ch)?;
    let [d12, d21] = type2_directional(ch, pa, budgets.mu);
    let [_, _, half_sum] = ma_constraints(&ch.g1, &ch.g2, &pa.p1, &pa.p2, budgets.mu);
    Ok(RateSummary {
        c_ma_1: d12,
        c_ma_2: d21,
        c_ma_sum: 2.0 * half_sum,
        c_bc_1: d21,
        c_bc_2: d12,
        r_exchange: d12.min(d21).min(half_sum),
    })
}

/// True iff every vector sums to at most `budget·(1+tol)` and no entry is
/// below `−tol`.
pub fn check_feasible(pa: &PowerAllocation, budgets: &Budgets, tol: f64) -> bool {
    [
        (&pa.p1, budgets.p1_max),
        (&pa.p2, budgets.p2_max),
        (&pa.pr, budgets.pr_max),
    ]
    .iter()
    .all(|(v, max)| v.iter().all(|&p| p >= -tol) && v.iter().sum::<f64>() <= max * (1.0 + tol))
}
