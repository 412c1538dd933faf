//! Power allocation for two-way decode-and-forward OFDM relaying.
//!
//! Two terminals exchange data through a relay over `N` subcarriers: a
//! multiple-access (MA) phase of time fraction `mu` followed by a broadcast
//! (BC) phase. With coding across subcarriers the symmetric exchange rate is
//! limited by five sum-of-log constraints; [`exchange::solve_exchange`]
//! maximizes it by dual decomposition, splitting into the MA problem over
//! the terminal powers ([`ma`]) and the BC problem over the relay powers
//! ([`bc`]). [`baselines`] solves the per-subcarrier relaying baseline,
//! [`oracle`] holds brute-force references for tiny instances, and [`sweep`]
//! runs the Monte Carlo SNR sweeps.

mod barrier;
pub mod baselines;
pub mod bc;
mod certify;
pub mod channel;
pub mod dual;
pub mod error;
pub mod exchange;
mod lowrank;
pub mod ma;
pub mod numerics;
pub mod oracle;
pub mod rates;
pub mod sweep;

pub use baselines::{solve_type2, Type2Solution};
pub use bc::{solve_bc, BcSolution};
pub use channel::{generate_channel, load_channel, save_channel, ChannelRealization};
pub use dual::{DualPoint, SolverConfig, StepRule};
pub use error::{Error, Result};
pub use exchange::{solve_exchange, solve_uniform, ExchangeSolution};
pub use ma::{solve_ma, MaSolution};
pub use rates::{check_feasible, type1_rates, type2_rates, Budgets, PowerAllocation, RateSummary};
