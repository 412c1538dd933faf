mod config;
mod output;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use twrelay::sweep::{realization_seed, rows_to_csv, run_scheme, run_sweep, Scheme};
use twrelay::{generate_channel, load_channel, save_channel};

use config::Settings;

#[derive(Parser)]
#[command(name = "twrelay", version, about = "Power allocation for two-way DF OFDM relaying")]
struct Cli {
    /// Flat `key = value` settings file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded channel realizations as fixture files.
    GenChannels {
        #[command(flatten)]
        common: Common,
        /// Number of realizations to write.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scheme on a channel fixture and print the rate summary.
    Solve {
        /// Channel fixture file.
        channel: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "type1-opt")]
        scheme: Scheme,
        /// Equal budget for all three nodes.
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        p1_max: Option<f64>,
        #[arg(long)]
        p2_max: Option<f64>,
        #[arg(long)]
        pr_max: Option<f64>,
        /// Where to write the power allocation.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo sweep over SNR; writes CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Realizations per SNR point.
        #[arg(long)]
        realizations: Option<usize>,
        /// Comma-separated scheme names.
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<Scheme>>,
        /// CSV path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Number of subcarriers.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    taps: Option<usize>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// Skip the exact-certification stage of the solvers.
    #[arg(long)]
    no_polish: bool,
}

impl Common {
    fn apply(&self, s: &mut Settings) {
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.mu {
            s.mu = v;
        }
        if let Some(v) = self.n {
            s.n = v;
        }
        if let Some(v) = self.taps {
            s.taps = v;
        }
        if let Some(v) = &self.snr_db {
            s.snr_db = v.clone();
        }
        if self.no_polish {
            s.solver.polish = false;
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.apply_file(path)?;
    }

    match cli.command {
        Command::GenChannels { common, count, out } => {
            common.apply(&mut settings);
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for i in 0..count {
                let seed = realization_seed(settings.seed, 0, i);
                let ch = generate_channel(settings.n, settings.taps, seed)?;
                let path = out.join(format!("channel_{i:04}.txt"));
                save_channel(&ch, &path)?;
                println!("{}", path.display());
            }
        }
        Command::Solve {
            channel,
            common,
            scheme,
            p_max,
            p1_max,
            p2_max,
            pr_max,
            out,
        } => {
            common.apply(&mut settings);
            for (slot, v) in [
                (&mut settings.p1_max, p1_max.or(p_max)),
                (&mut settings.p2_max, p2_max.or(p_max)),
                (&mut settings.pr_max, pr_max.or(p_max)),
            ] {
                if v.is_some() {
                    *slot = v;
                }
            }
            if scheme == Scheme::Af {
                bail!("the amplify-and-forward scheme is not available");
            }
            let ch = load_channel(&channel)?;
            settings.n = ch.n_subcarriers();
            let budgets = settings.budgets()?;
            settings.solver.validate()?;
            let res = run_scheme(scheme, &ch, &budgets, &settings.solver)?;
            print!(
                "{}",
                output::summary_to_string(scheme, ch.n_subcarriers(), &res.rates, res.converged)
            );
            if let Some(path) = out {
                std::fs::write(&path, output::pa_to_string(&res.pa))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Sweep {
            common,
            realizations,
            schemes,
            out,
        } => {
            common.apply(&mut settings);
            if let Some(v) = realizations {
                settings.realizations = v;
            }
            if let Some(v) = schemes {
                settings.schemes = v;
            }
            settings.solver.validate()?;
            let rows = run_sweep(&settings.sweep_config())?;
            let csv = rows_to_csv(&rows);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?
                }
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}
