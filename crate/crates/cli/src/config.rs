//! Run settings: built-in defaults, optionally overridden by a flat
//! `key = value` file, in turn overridden by command-line flags.
//!
//! Recognized keys and defaults:
//!
//! | key            | default                              |
//! |----------------|--------------------------------------|
//! | `seed`         | `1`                                  |
//! | `mu`           | `0.5`                                |
//! | `n`            | `32`                                 |
//! | `taps`         | `8`                                  |
//! | `snr_db`       | `-10,-7.5,...,30` (2.5 dB steps)     |
//! | `realizations` | `500`                                |
//! | `schemes`      | `af,type1-opt,type1-uniform,type2-opt` |
//! | `p1_max`, `p2_max`, `pr_max` | unset                  |
//! | `epsilon`      | `1e-6`                               |
//! | `max_iters`    | `20000`                              |
//! | `step0`        | `1.0`                                |
//! | `step_rule`    | `inv-sqrt` (`harmonic`, `adaptive-inv-sqrt`) |
//! | `polish`       | `true`                               |
//!
//! Lists are comma separated. Blank lines and text after `#` are ignored.

use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use twrelay::sweep::{Scheme, SweepConfig};
use twrelay::{Budgets, SolverConfig, StepRule};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub mu: f64,
    pub n: usize,
    pub taps: usize,
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub schemes: Vec<Scheme>,
    pub p1_max: Option<f64>,
    pub p2_max: Option<f64>,
    pub pr_max: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for Settings {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        let mut schemes = vec![Scheme::Af];
        schemes.extend(Scheme::DEFAULT);
        Self {
            seed: sweep.seed,
            mu: sweep.mu,
            n: sweep.n_subcarriers,
            taps: sweep.n_taps,
            snr_db: sweep.snr_db,
            realizations: sweep.n_realizations,
            schemes,
            p1_max: None,
            p2_max: None,
            pr_max: None,
            solver: SolverConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "taps" => self.taps = parse(key, value)?,
            "snr_db" => self.snr_db = parse_list(key, value)?,
            "realizations" => self.realizations = parse(key, value)?,
            "schemes" => self.schemes = parse_list(key, value)?,
            "p1_max" => self.p1_max = Some(parse(key, value)?),
            "p2_max" => self.p2_max = Some(parse(key, value)?),
            "pr_max" => self.pr_max = Some(parse(key, value)?),
            "epsilon" => self.solver.epsilon = parse(key, value)?,
            "max_iters" => self.solver.max_iters = parse(key, value)?,
            "step0" => self.solver.step0 = parse(key, value)?,
            "step_rule" => {
                self.solver.step_rule =
                    StepRule::from_name(value).ok_or_else(|| anyhow!("unknown step rule `{value}`"))?
            }
            "polish" => self.solver.polish = parse(key, value)?,
            other => bail!("unknown setting `{other}`"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))
    }

    /// Budgets for a single solve. Explicit per-node values win; otherwise
    /// a single SNR point maps to `N·10^(snr/10)` for every node.
    pub fn budgets(&self) -> Result<Budgets> {
        let from_snr = match self.snr_db.as_slice() {
            [s] => Some(twrelay::sweep::budget_for_snr(*s, self.n)),
            _ => None,
        };
        let pick = |v: Option<f64>, name: &str| {
            v.or(from_snr)
                .ok_or_else(|| anyhow!("no budget for {name}: set it or give exactly one SNR value"))
        };
        Ok(Budgets::new(
            pick(self.p1_max, "p1_max")?,
            pick(self.p2_max, "p2_max")?,
            pick(self.pr_max, "pr_max")?,
            self.mu,
        )?)
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            snr_db: self.snr_db.clone(),
            n_realizations: self.realizations,
            seed: self.seed,
            n_subcarriers: self.n,
            n_taps: self.taps,
            mu: self.mu,
            schemes: self.schemes.clone(),
            solver: self.solver,
        }
    }
}
