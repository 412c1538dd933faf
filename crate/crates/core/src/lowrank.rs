//! Linear solves with matrices of the form `D + Σ σ_k u_k u_kᵀ`, where
//! `D` is block diagonal with many small symmetric positive definite
//! blocks followed by one positive scalar, and there are only a handful of
//! terms `u_k`. Vectors are flat: entry `k·bs + a` is component `a` of
//! block `k`, and the final entry belongs to the scalar.

use crate::certify::solve_dense;

pub(crate) struct BlockLowRank {
    bs: usize,
    blocks: Vec<f64>,
    dinv: Vec<f64>,
    d_last: f64,
    cols: Vec<Vec<f64>>,
    signs: Vec<f64>,
    dinv_cols: Vec<Vec<f64>>,
    /// `diag(σ)⁻¹ + Uᵀ D⁻¹ U`
    cap: Vec<Vec<f64>>,
}

impl BlockLowRank {
    /// `blocks` holds the `bs×bs` blocks back to back in row-major order.
    /// Returns `None` when a block is not positive definite.
    pub(crate) fn new(
        bs: usize,
        blocks: Vec<f64>,
        d_last: f64,
        cols: Vec<Vec<f64>>,
        signs: Vec<f64>,
    ) -> Option<Self> {
        if !(d_last > 0.0) || bs == 0 {
            return None;
        }
        let mut dinv = vec![0.0; blocks.len()];
        for (src, dst) in blocks.chunks_exact(bs * bs).zip(dinv.chunks_exact_mut(bs * bs)) {
            spd_inverse(src, bs, dst)?;
        }
        let mut w = BlockLowRank {
            bs,
            blocks,
            dinv,
            d_last,
            cols,
            signs,
            dinv_cols: Vec::new(),
            cap: Vec::new(),
        };
        w.dinv_cols = w.cols.iter().map(|c| w.apply_blocks(&w.dinv, 1.0 / w.d_last, c)).collect();
        let m = w.cols.len();
        w.cap = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        let diag = if a == b { 1.0 / w.signs[a] } else { 0.0 };
                        dot(&w.cols[a], &w.dinv_cols[b]) + diag
                    })
                    .collect()
            })
            .collect();
        Some(w)
    }

    fn apply_blocks(&self, blocks: &[f64], last: f64, y: &[f64]) -> Vec<f64> {
        let bs = self.bs;
        let body = y.len() - 1;
        let mut out = vec![0.0; y.len()];
        for ((blk, yk), ok) in blocks
            .chunks_exact(bs * bs)
            .zip(y[..body].chunks_exact(bs))
            .zip(out[..body].chunks_exact_mut(bs))
        {
            for a in 0..bs {
                ok[a] = (0..bs).map(|b| blk[a * bs + b] * yk[b]).sum();
            }
        }
        out[body] = last * y[body];
        out
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = self.apply_blocks(&self.blocks, self.d_last, y);
        for (c, s) in self.cols.iter().zip(&self.signs) {
            axpy(&mut out, s * dot(c, y), c);
        }
        out
    }

    fn solve_once(&self, y: &[f64]) -> Option<Vec<f64>> {
        let mut out = self.apply_blocks(&self.dinv, 1.0 / self.d_last, y);
        let rhs: Vec<f64> = self.cols.iter().map(|c| dot(c, &out)).collect();
        let coef = solve_dense(self.cap.clone(), rhs)?;
        for (c, dc) in coef.iter().zip(&self.dinv_cols) {
            axpy(&mut out, -c, dc);
        }
        Some(out)
    }

    /// Solution of the system followed by one round of iterative refinement.
    pub(crate) fn solve(&self, y: &[f64]) -> Option<Vec<f64>> {
        let mut z = self.solve_once(y)?;
        let mut resid = y.to_vec();
        axpy(&mut resid, -1.0, &self.apply(&z));
        let fix = self.solve_once(&resid)?;
        axpy(&mut z, 1.0, &fix);
        z.iter().all(|v| v.is_finite()).then_some(z)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(v, w)| *v += a * w);
}

/// Inverse of a small symmetric positive definite matrix through its
/// Cholesky factor.
fn spd_inverse(a: &[f64], n: usize, out: &mut [f64]) -> Option<()> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // columns of L⁻ᵀ L⁻¹
    for c in 0..n {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let rhs = if i == c { 1.0 } else { 0.0 };
            y[i] = (rhs - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
        }
        for i in (0..n).rev() {
            y[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * y[k]).sum::<f64>()) / l[i * n + i];
        }
        for i in 0..n {
            out[i * n + c] = y[i];
        }
    }
    Some(())
}
