//! Brute-force reference optimizer for tiny instances (N ≤ 3).
//!
//! Every rate term is nondecreasing in every power, so some optimum spends
//! each budget completely and the search runs over the faces
//! `{p ≥ 0, Σp = P_max}` only. A point on a face is parameterized by the
//! fractions `t_1..t_{N-1}` with `t_N = 1 − Σt`.
//!
//! The search first enumerates a regular lattice of step `1/G` on every
//! face (all combinations across vectors). When the full product at
//! `G = grid_points` is too large it starts from the finest affordable
//! lattice and zooms in: a local lattice of ±1 or ±2 cells around the incumbent
//! is enumerated exhaustively, the incumbent moves to its best point, and
//! the cell width halves once the incumbent stops moving, until the width
//! reaches `1/grid_points`. Before each halving a fixed-seed batch of
//! random directions is probed at the current width, since on the ridge
//! of a min every lattice direction may lead downhill. With `polish` the
//! zooming continues well past that width and is followed by a second
//! zoom on a log-sum-exp smoothing of the objective, whose result is kept
//! only if its true value is better.
//!
//! Accuracy: each rate term is Lipschitz on the face with constant at most
//! `L = (1/ln2)·max_n g_n·P_max` per unit change in the fractions, so the
//! best lattice point is within `L·(N−1)/G` of the optimum of the concave
//! objective on the lattice neighbourhood that contains it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::rates::{bc_constraints, ma_constraints, Budgets, PowerAllocation};

pub const MAX_SUBCARRIERS: usize = 3;

/// Cap on the number of points in the exhaustive first stage.
const MAX_EXHAUSTIVE: usize = 20_000;

/// Zoom continues down to `1 / (grid_points · POLISH_FACTOR)` when polishing.
const POLISH_FACTOR: f64 = 4096.0;

/// Random unit directions tried at a given cell width once the local
/// lattice has no improving point.
const RANDOM_DIRECTIONS: usize = 64;

/// Sharpness schedule of the smoothed objectives used when polishing.
const SHARPNESS: [f64; 1] = [1e4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Full multi-subcarrier exchange rate (min of the MA and BC optima).
    Type1,
    /// Per-subcarrier exchange rate.
    Type2,
    MaOnly,
    BcOnly,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub rate: f64,
    pub pa: PowerAllocation,
}

/// Best value of `objective` over budget-saturating allocations.
pub fn grid_maxmin(
    ch: &ChannelRealization,
    budgets: &Budgets,
    objective: Objective,
    grid_points: usize,
    polish: bool,
) -> Result<OracleResult> {
    let n = ch.n_subcarriers();
    if n > MAX_SUBCARRIERS {
        return Err(Error::OracleTooLarge {
            max: MAX_SUBCARRIERS,
            got: n,
        });
    }
    if grid_points < 50 {
        return Err(Error::InvalidParameter("grid_points must be at least 50".into()));
    }
    budgets.validate()?;
    let mu = budgets.mu;

    match objective {
        Objective::MaOnly => {
            let (rate, v) = search(n, &[budgets.p1_max, budgets.p2_max], grid_points, polish, |v, beta| {
                min_of(&ma_constraints(&ch.g1, &ch.g2, &v[0], &v[1], mu), beta)
            });
            let mut pa = PowerAllocation::zeros(n);
            pa.p1 = v[0].clone();
            pa.p2 = v[1].clone();
            Ok(OracleResult { rate, pa })
        }
        Objective::BcOnly => {
            let (rate, v) = search(n, &[budgets.pr_max], grid_points, polish, |v, beta| {
                min_of(&bc_constraints(&ch.gt1, &ch.gt2, &v[0], mu), beta)
            });
            let mut pa = PowerAllocation::zeros(n);
            pa.pr = v[0].clone();
            Ok(OracleResult { rate, pa })
        }
        Objective::Type1 => {
            let ma = grid_maxmin(ch, budgets, Objective::MaOnly, grid_points, polish)?;
            let bc = grid_maxmin(ch, budgets, Objective::BcOnly, grid_points, polish)?;
            Ok(OracleResult {
                rate: ma.rate.min(bc.rate),
                pa: PowerAllocation {
                    p1: ma.pa.p1,
                    p2: ma.pa.p2,
                    pr: bc.pa.pr,
                },
            })
        }
        Objective::Type2 => {
            let maxes = [budgets.p1_max, budgets.p2_max, budgets.pr_max];
            let ma = mu / std::f64::consts::LN_2;
            let bc = (1.0 - mu) / std::f64::consts::LN_2;
            let (rate, v) = search(n, &maxes, grid_points, polish, |v, beta| {
                let mut d = [0.0; 2];
                for k in 0..n {
                    let a1 = ma * (ch.g1[k] * v[0][k]).ln_1p();
                    let a2 = ma * (ch.g2[k] * v[1][k]).ln_1p();
                    d[0] += min_of(&[a1, bc * (ch.gt2[k] * v[2][k]).ln_1p()], beta);
                    d[1] += min_of(&[a2, bc * (ch.gt1[k] * v[2][k]).ln_1p()], beta);
                }
                let half_sum = ma_constraints(&ch.g1, &ch.g2, &v[0], &v[1], mu)[2];
                min_of(&[d[0], d[1], half_sum], beta)
            });
            let mut it = v.into_iter();
            Ok(OracleResult {
                rate,
                pa: PowerAllocation {
                    p1: it.next().unwrap(),
                    p2: it.next().unwrap(),
                    pr: it.next().unwrap(),
                },
            })
        }
    }
}

/// Free coordinates: `N−1` fractions for every vector with a positive budget.
struct Layout {
    n: usize,
    maxes: Vec<f64>,
    /// `free[j]` is true when vector `j` has degrees of freedom.
    free: Vec<bool>,
}

impl Layout {
    fn dims(&self) -> usize {
        self.free.iter().filter(|&&f| f).count() * (self.n - 1)
    }

    fn decode(&self, t: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.maxes.len());
        let mut idx = 0;
        for (j, &max) in self.maxes.iter().enumerate() {
            if !self.free[j] {
                // N = 1 or zero budget: the face is a single point.
                let mut v = vec![0.0; self.n];
                v[0] = max;
                out.push(v);
                continue;
            }
            let frac = &t[idx..idx + self.n - 1];
            idx += self.n - 1;
            let rest = (1.0 - frac.iter().sum::<f64>()).max(0.0);
            out.push(frac.iter().chain(std::iter::once(&rest)).map(|f| f * max).collect());
        }
        out
    }

    fn feasible(&self, t: &[f64]) -> bool {
        t.iter().all(|&x| x >= -1e-15) && t.chunks(self.n - 1).all(|c| c.iter().sum::<f64>() <= 1.0 + 1e-12)
    }
}

fn search<F>(n: usize, maxes: &[f64], grid_points: usize, polish: bool, f: F) -> (f64, Vec<Vec<f64>>)
where
    F: Fn(&[Vec<f64>], Option<f64>) -> f64,
{
    let layout = Layout {
        n,
        maxes: maxes.to_vec(),
        free: maxes.iter().map(|&m| n > 1 && m > 0.0).collect(),
    };
    let dims = layout.dims();
    if dims == 0 {
        let v = layout.decode(&[]);
        return (f(&v, None), v);
    }
    let hard = |t: &[f64]| f(&layout.decode(t), None);

    let per_face = n - 1;
    let n_faces = dims / per_face;
    // largest coarse resolution whose full product stays affordable
    let mut coarse = grid_points;
    while coarse > 1 && face_points(per_face, coarse).saturating_pow(n_faces as u32) > MAX_EXHAUSTIVE {
        coarse = coarse * 3 / 4;
    }
    let face_lattice = lattice_on_face(per_face, coarse);

    let mut best_val = f64::NEG_INFINITY;
    let mut best_t = vec![0.0; dims];
    let mut index = vec![0usize; n_faces];
    let mut t = vec![0.0; dims];
    'lattice: loop {
        for (fi, &li) in index.iter().enumerate() {
            t[fi * per_face..(fi + 1) * per_face].copy_from_slice(&face_lattice[li]);
        }
        let v = hard(&t);
        if v > best_val {
            best_val = v;
            best_t.copy_from_slice(&t);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n_faces {
                break 'lattice;
            }
            index[pos] += 1;
            if index[pos] < face_lattice.len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }

    if polish || coarse < grid_points {
        (best_val, best_t) = refine(&layout, &hard, best_t, 1.0 / coarse as f64, 1.0 / grid_points as f64);
        if polish {
            let target = 1.0 / (grid_points as f64 * POLISH_FACTOR);
            // Continuation on smoothed objectives, each started where the
            // previous one ended. Only true values decide the incumbent.
            let mut t = best_t.clone();
            for beta in SHARPNESS {
                let soft = |t: &[f64]| f(&layout.decode(t), Some(beta));
                t = refine(&layout, &soft, t, 1.0 / grid_points as f64, target).1;
                let (val, tt) = refine(&layout, &hard, t.clone(), target, target);
                if val > best_val {
                    best_val = val;
                    best_t = tt;
                }
            }
        }
    }
    (best_val, layout.decode(&best_t))
}

/// Pattern search from `center`: the local lattice of width `h` first, then
/// a fixed-seed batch of random directions, halving `h` when neither
/// improves until it drops below `target`.
fn refine(layout: &Layout, f: &dyn Fn(&[f64]) -> f64, mut center: Vec<f64>, mut h: f64, target: f64) -> (f64, Vec<f64>) {
    let dims = center.len();
    let mut best_val = f(&center);
    // local lattice offsets in {-r..=r}^dims
    let radius: i64 = if dims <= 4 { 2 } else { 1 };
    let width = (2 * radius + 1) as usize;
    let total = width.pow(dims as u32);
    let mut probe = vec![0.0; dims];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    loop {
        let mut moved = false;
        for code in 0..total {
            let mut c = code;
            for d in 0..dims {
                let off = (c % width) as i64 - radius;
                c /= width;
                probe[d] = center[d] + off as f64 * h;
            }
            if !layout.feasible(&probe) {
                continue;
            }
            for x in probe.iter_mut() {
                *x = x.max(0.0);
            }
            let val = f(&probe);
            if val > best_val {
                best_val = val;
                center.copy_from_slice(&probe);
                moved = true;
            }
        }
        if !moved && dims > 1 {
            for _ in 0..RANDOM_DIRECTIONS {
                let dir: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                for (p, (c, d)) in probe.iter_mut().zip(center.iter().zip(&dir)) {
                    *p = (c + h * d / norm).max(0.0);
                }
                if !layout.feasible(&probe) {
                    continue;
                }
                let val = f(&probe);
                if val > best_val {
                    best_val = val;
                    center.copy_from_slice(&probe);
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            if h <= target {
                break;
            }
            h *= 0.5;
        }
    }
    (best_val, center)
}

/// Minimum of `xs`, or its log-sum-exp lower smoothing with sharpness `beta`.
fn min_of(xs: &[f64], beta: Option<f64>) -> f64 {
    let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
    match beta {
        None => m,
        Some(b) => m - xs.iter().map(|x| (-b * (x - m)).exp()).sum::<f64>().ln() / b,
    }
}

/// Number of lattice points `k ∈ ℕ^d` with `Σk ≤ g`.
fn face_points(d: usize, g: usize) -> usize {
    // C(g + d, d)
    let mut c: usize = 1;
    for i in 1..=d {
        c = c.saturating_mul(g + i) / i;
    }
    c
}

fn lattice_on_face(d: usize, g: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut k = vec![0usize; d];
    loop {
        out.push(k.iter().map(|&x| x as f64 / g as f64).collect());
        let mut pos = 0;
        loop {
            if pos == d {
                return out;
            }
            k[pos] += 1;
            if k.iter().sum::<usize>() <= g {
                break;
            }
            k[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        assert_eq!(face_points(1, 400), 401);
        assert_eq!(face_points(2, 400), 401 * 402 / 2);
        assert_eq!(lattice_on_face(2, 4).len(), face_points(2, 4));
    }

    #[test]
    fn rejects_large_instances() {
        let ch = ChannelRealization::flat(4, 1.0).unwrap();
        let b = Budgets::equal(1.0, 0.5).unwrap();
        assert!(matches!(
            grid_maxmin(&ch, &b, Objective::BcOnly, 100, false),
            Err(Error::OracleTooLarge { .. })
        ));
        let ch = ChannelRealization::flat(2, 1.0).unwrap();
        assert!(grid_maxmin(&ch, &b, Objective::BcOnly, 10, false).is_err());
    }
}
