//! Monte Carlo SNR sweep: average per-subcarrier sum rate `2·R_X/N` of each
//! scheme over seeded channel realizations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::solve_type2;
use crate::channel::{generate_channel, mix_seed, ChannelRealization};
use crate::dual::SolverConfig;
use crate::error::{Error, Result};
use crate::exchange::{solve_exchange, solve_uniform};
use crate::rates::{Budgets, PowerAllocation, RateSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Amplify-and-forward placeholder; always reported empty.
    Af,
    Type1Opt,
    Type1Uniform,
    Type2Opt,
}

impl Scheme {
    pub const DEFAULT: [Scheme; 3] = [Scheme::Type1Opt, Scheme::Type1Uniform, Scheme::Type2Opt];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Af => "af",
            Scheme::Type1Opt => "type1-opt",
            Scheme::Type1Uniform => "type1-uniform",
            Scheme::Type2Opt => "type2-opt",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "af" => Ok(Scheme::Af),
            "type1-opt" => Ok(Scheme::Type1Opt),
            "type1-uniform" => Ok(Scheme::Type1Uniform),
            "type2-opt" => Ok(Scheme::Type2Opt),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Outcome of one scheme on one realization.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub pa: PowerAllocation,
    pub rates: RateSummary,
    pub converged: bool,
}

/// Runs `scheme` on a single channel. `Af` is not available.
pub fn run_scheme(
    scheme: Scheme,
    ch: &ChannelRealization,
    budgets: &Budgets,
    cfg: &SolverConfig,
) -> Result<SchemeResult> {
    match scheme {
        Scheme::Type1Opt => {
            let sol = solve_exchange(ch, budgets, cfg)?;
            let converged = sol.converged();
            Ok(SchemeResult {
                pa: sol.pa,
                rates: sol.rates,
                converged,
            })
        }
        Scheme::Type1Uniform => {
            let (pa, rates) = solve_uniform(ch, budgets)?;
            Ok(SchemeResult {
                pa,
                rates,
                converged: true,
            })
        }
        Scheme::Type2Opt => {
            let sol = solve_type2(ch, budgets, cfg)?;
            Ok(SchemeResult {
                pa: sol.pa,
                rates: sol.rates,
                converged: sol.converged,
            })
        }
        Scheme::Af => Err(Error::InvalidParameter(
            "the amplify-and-forward scheme is not implemented".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub n_realizations: usize,
    pub seed: u64,
    pub n_subcarriers: usize,
    pub n_taps: usize,
    pub mu: f64,
    pub schemes: Vec<Scheme>,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: (0..=16).map(|i| -10.0 + 2.5 * i as f64).collect(),
            n_realizations: 500,
            seed: 1,
            n_subcarriers: 32,
            n_taps: 8,
            mu: 0.5,
            schemes: Scheme::DEFAULT.to_vec(),
            solver: SolverConfig::default(),
        }
    }
}

/// One CSV row. `mean_rate_bps_hz` and `stderr` are `None` for schemes
/// that are not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub mean_rate_bps_hz: Option<f64>,
    pub stderr: Option<f64>,
    pub n: usize,
    pub failures: usize,
}

/// Total budget per node giving an average per-subcarrier SNR of `snr_db`.
pub fn budget_for_snr(snr_db: f64, n_subcarriers: usize) -> f64 {
    n_subcarriers as f64 * 10f64.powf(snr_db / 10.0)
}

/// Seed of realization `r` at SNR index `s`.
pub fn realization_seed(master: u64, snr_index: usize, realization: usize) -> u64 {
    mix_seed(mix_seed(mix_seed(master) ^ snr_index as u64) ^ realization as u64)
}

/// Runs the sweep. Rows are sorted by `(snr_db, scheme)`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.snr_db.is_empty() {
        return Err(Error::InvalidParameter("SNR list is empty".into()));
    }
    if cfg.n_realizations == 0 {
        return Err(Error::InvalidParameter("need at least one realization".into()));
    }
    if cfg.snr_db.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("SNR values must be finite".into()));
    }
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let computed: Vec<Scheme> = schemes.iter().copied().filter(|s| *s != Scheme::Af).collect();

    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let budgets = Budgets::equal(budget_for_snr(snr, cfg.n_subcarriers), cfg.mu)?;
        // per realization: (rate per scheme, converged per scheme)
        let per_real: Vec<Vec<(f64, bool)>> = (0..cfg.n_realizations)
            .into_par_iter()
            .map(|r| -> Result<Vec<(f64, bool)>> {
                let seed = realization_seed(cfg.seed, si, r);
                let ch = generate_channel(cfg.n_subcarriers, cfg.n_taps, seed)?;
                computed
                    .iter()
                    .map(|&scheme| {
                        let res = run_scheme(scheme, &ch, &budgets, &cfg.solver)?;
                        Ok((res.rates.sum_rate() / cfg.n_subcarriers as f64, res.converged))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        for &scheme in &schemes {
            let Some(idx) = computed.iter().position(|&s| s == scheme) else {
                rows.push(SweepRow {
                    snr_db: snr,
                    scheme,
                    mean_rate_bps_hz: None,
                    stderr: None,
                    n: 0,
                    failures: 0,
                });
                continue;
            };
            let values: Vec<f64> = per_real.iter().map(|v| v[idx].0).collect();
            let failures = per_real.iter().filter(|v| !v[idx].1).count();
            let (mean, se) = mean_stderr(&values);
            rows.push(SweepRow {
                snr_db: snr,
                scheme,
                mean_rate_bps_hz: Some(mean),
                stderr: Some(se),
                n: values.len(),
                failures,
            });
        }
    }
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then(a.scheme.cmp(&b.scheme)));
    Ok(rows)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub const CSV_HEADER: &str = "snr_db,scheme,mean_rate_bps_hz,stderr,n,failures";

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.snr_db,
            r.scheme,
            opt(r.mean_rate_bps_hz),
            opt(r.stderr),
            r.n,
            r.failures
        ));
    }
    out
}

/// SNR (dB) at which a curve first reaches `level`, by linear interpolation
/// between sweep points. `None` if the curve never crosses it.
pub fn crossing_snr(points: &[(f64, f64)], level: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 == level {
            Some(x0)
        } else if (y0 < level && y1 >= level) || (y0 > level && y1 <= level) {
            Some(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_mapping() {
        assert!((budget_for_snr(0.0, 32) - 32.0).abs() < 1e-12);
        assert!((budget_for_snr(10.0, 32) - 320.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_interpolates() {
        let pts = [(0.0, 1.0), (10.0, 3.0)];
        assert_eq!(crossing_snr(&pts, 2.0), Some(5.0));
        assert_eq!(crossing_snr(&pts, 4.0), None);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Af, Scheme::Type1Opt, Scheme::Type1Uniform, Scheme::Type2Opt] {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("type3".parse::<Scheme>().is_err());
    }

    #[test]
    fn csv_marks_af_empty() {
        let rows = vec![SweepRow {
            snr_db: 0.0,
            scheme: Scheme::Af,
            mean_rate_bps_hz: None,
            stderr: None,
            n: 0,
            failures: 0,
        }];
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n0,af,,,0,0\n"));
    }
}
