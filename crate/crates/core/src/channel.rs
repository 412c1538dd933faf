//! Frequency-selective Rayleigh channel realizations for the four links of a
//! two-way relay, and the plain-text fixture format used to store them.
//!
//! Each link draws `n_taps` i.i.d. circularly-symmetric complex Gaussian taps
//! with unit variance. The frequency response is the length-`N` DFT of the
//! zero-padded taps scaled by `1/sqrt(n_taps)`, so `E[|H_n|²] = 1` on every
//! subcarrier and a transmit power equals the average receive SNR under unit
//! noise. Only squared magnitudes are kept.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Power gains `|h|²` per subcarrier for the links T1→R, T2→R, R→T1, R→T2.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_taps: usize,
    pub seed: u64,
    /// T1 → relay.
    pub g1: Vec<f64>,
    /// T2 → relay.
    pub g2: Vec<f64>,
    /// relay → T1.
    pub gt1: Vec<f64>,
    /// relay → T2.
    pub gt2: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from explicit gains, checking lengths and signs.
    pub fn from_gains(g1: Vec<f64>, g2: Vec<f64>, gt1: Vec<f64>, gt2: Vec<f64>) -> Result<Self> {
        let n = g1.len();
        if n == 0 {
            return Err(Error::InvalidChannelSize("zero subcarriers".into()));
        }
        for link in [&g2, &gt1, &gt2] {
            if link.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: link.len(),
                });
            }
        }
        if [&g1, &g2, &gt1, &gt2]
            .iter()
            .flat_map(|l| l.iter())
            .any(|&g| !(g >= 0.0) || !g.is_finite())
        {
            return Err(Error::InvalidParameter(
                "channel gains must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            n_taps: n,
            seed: 0,
            g1,
            g2,
            gt1,
            gt2,
        })
    }

    /// Same gains on every link and subcarrier.
    pub fn flat(n: usize, gain: f64) -> Result<Self> {
        Self::from_gains(vec![gain; n], vec![gain; n], vec![gain; n], vec![gain; n])
    }

    pub fn n_subcarriers(&self) -> usize {
        self.g1.len()
    }

    fn links(&self) -> [(&'static str, &Vec<f64>); 4] {
        [
            ("g1", &self.g1),
            ("g2", &self.g2),
            ("gt1", &self.gt1),
            ("gt2", &self.gt2),
        ]
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for link `index` (0..4) of a realization with master `seed`.
pub fn link_seed(seed: u64, index: u64) -> u64 {
    mix_seed(mix_seed(seed) ^ mix_seed(index.wrapping_add(0xA5A5_0000)))
}

/// Draws a channel realization. Each link uses its own ChaCha8 stream
/// seeded from [`link_seed`], so the four links are independent and the
/// result depends only on `(n_subcarriers, n_taps, seed)`.
pub fn generate_channel(n_subcarriers: usize, n_taps: usize, seed: u64) -> Result<ChannelRealization> {
    if n_subcarriers == 0 || n_taps == 0 {
        return Err(Error::InvalidChannelSize(
            "subcarrier and tap counts must be positive".into(),
        ));
    }
    if n_taps > n_subcarriers {
        return Err(Error::InvalidChannelSize(format!(
            "{n_taps} taps exceed {n_subcarriers} subcarriers"
        )));
    }
    let link = |index| frequency_gains(n_subcarriers, n_taps, link_seed(seed, index));
    Ok(ChannelRealization {
        n_taps,
        seed,
        g1: link(0),
        g2: link(1),
        gt1: link(2),
        gt2: link(3),
    })
}

fn frequency_gains(n: usize, n_taps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = std::f64::consts::FRAC_1_SQRT_2;
    let taps: Vec<(f64, f64)> = (0..n_taps)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            (re * std, im * std)
        })
        .collect();
    let scale = 1.0 / n_taps as f64;
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (l, &(tr, ti)) in taps.iter().enumerate() {
                // index product reduced mod n keeps the angle small
                let angle = -2.0 * PI * ((k * l) % n) as f64 / n as f64;
                let (s, c) = angle.sin_cos();
                re += tr * c - ti * s;
                im += tr * s + ti * c;
            }
            (re * re + im * im) * scale
        })
        .collect()
}

/// Serializes to the fixture text format.
pub fn channel_to_string(ch: &ChannelRealization) -> String {
    let mut out = format!("N={} taps={} seed={}\n", ch.n_subcarriers(), ch.n_taps, ch.seed);
    for (name, gains) in ch.links() {
        out.push_str(name);
        out.push(':');
        for g in gains.iter() {
            // 17 significant digits round-trip every f64 exactly
            let _ = write!(out, " {g:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn channel_from_str(text: &str) -> std::result::Result<ChannelRealization, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let mut n = None;
    let mut taps = None;
    let mut seed = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        match key {
            "N" => n = Some(value.parse::<usize>().map_err(|e| format!("N: {e}"))?),
            "taps" => taps = Some(value.parse::<usize>().map_err(|e| format!("taps: {e}"))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| format!("seed: {e}"))?),
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    let n = n.ok_or("header missing N")?;
    let n_taps = taps.ok_or("header missing taps")?;
    let seed = seed.ok_or("header missing seed")?;
    if n == 0 {
        return Err("N must be positive".into());
    }

    let mut read_link = |name: &str| -> std::result::Result<Vec<f64>, String> {
        let line = lines.next().ok_or_else(|| format!("missing `{name}:` line"))?;
        let rest = line
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix(':'))
            .ok_or_else(|| format!("expected `{name}:` line"))?;
        let values = rest
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|e| format!("{name}: `{tok}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if values.len() != n {
            return Err(format!("{name}: expected {n} values, found {}", values.len()));
        }
        if values.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(format!("{name}: gains must be finite and nonnegative"));
        }
        Ok(values)
    };
    let g1 = read_link("g1")?;
    let g2 = read_link("g2")?;
    let gt1 = read_link("gt1")?;
    let gt2 = read_link("gt2")?;
    if lines.next().is_some() {
        return Err("trailing content after gt2".into());
    }
    Ok(ChannelRealization {
        n_taps,
        seed,
        g1,
        g2,
        gt1,
        gt2,
    })
}

pub fn save_channel(ch: &ChannelRealization, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, channel_to_string(ch)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelRealization> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    channel_from_str(&text).map_err(|msg| Error::Parse {
        path: path.to_path_buf(),
        msg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = generate_channel(32, 8, 7).unwrap();
        let b = generate_channel(32, 8, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_channel(32, 8, 8).unwrap();
        assert_ne!(a.g1, c.g1);
    }

    #[test]
    fn links_differ() {
        let ch = generate_channel(16, 4, 1).unwrap();
        assert_ne!(ch.g1, ch.g2);
        assert_ne!(ch.gt1, ch.gt2);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(generate_channel(0, 1, 0).is_err());
        assert!(generate_channel(4, 0, 0).is_err());
        assert!(generate_channel(4, 5, 0).is_err());
    }

    #[test]
    fn single_tap_is_exponential_with_unit_mean() {
        let n = 100_000;
        let mean = (0..n)
            .map(|s| generate_channel(1, 1, s).unwrap().g1[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn unit_average_gain_with_eight_taps() {
        let reps = 10_000;
        let mut total = 0.0;
        for s in 0..reps {
            let ch = generate_channel(32, 8, s).unwrap();
            total += ch.g1.iter().sum::<f64>();
        }
        let mean = total / (reps as f64 * 32.0);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ch = generate_channel(32, 8, 99).unwrap();
        let back = channel_from_str(&channel_to_string(&ch)).unwrap();
        assert_eq!(ch, back);
        assert_eq!(back.seed, 99);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let ch = generate_channel(8, 2, 3).unwrap();
        let text = channel_to_string(&ch);
        let cut = &text[..text.len() / 2];
        assert!(channel_from_str(cut).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.txt");
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(load_channel(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.txt");
        let ch = generate_channel(4, 2, 5).unwrap();
        save_channel(&ch, &path).unwrap();
        assert_eq!(load_channel(&path).unwrap(), ch);
        assert!(matches!(
            load_channel(dir.path().join("missing.txt")),
            Err(Error::Io { .. })
        ));
    }
}
