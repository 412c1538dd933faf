use std::fmt::Write;

use twrelay::sweep::Scheme;
use twrelay::{PowerAllocation, RateSummary};

/// Text form of a power allocation: a header line, then one line per node.
pub fn pa_to_string(pa: &PowerAllocation) -> String {
    let mut out = format!("N={}\n", pa.n_subcarriers());
    for (name, v) in [("p1", &pa.p1), ("p2", &pa.p2), ("pr", &pa.pr)] {
        out.push_str(name);
        out.push(':');
        for p in v {
            let _ = write!(out, " {p:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn summary_to_string(scheme: Scheme, n: usize, rates: &RateSummary, converged: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scheme = {scheme}");
    let _ = writeln!(out, "converged = {converged}");
    for (key, v) in [
        ("c_ma_1", rates.c_ma_1),
        ("c_ma_2", rates.c_ma_2),
        ("c_ma_sum", rates.c_ma_sum),
        ("c_bc_1", rates.c_bc_1),
        ("c_bc_2", rates.c_bc_2),
        ("r_exchange", rates.r_exchange),
    ] {
        let _ = writeln!(out, "{key} = {v:.12}");
    }
    let _ = writeln!(out, "rate_bps_hz = {:.12}", rates.sum_rate() / n as f64);
    out
}
