//! Shared numerical helpers: compensated summation and the power iteration
//! used for spectral norms of skew-symmetric operators in operator form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct PowerIterationResult {
    pub sigma: f64,
    pub right_vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value of a real skew-symmetric operator given only its
/// action `out = C · in`.
///
/// Iterates `v ← normalize(CᵀC v)` (for skew `C`, `CᵀC = -C²`) and reports
/// `σ = ‖C v‖` once the estimate is stable to `tol` for three consecutive
/// iterations. Deterministic for a fixed `seed`; pass `warm` to resume from
/// a previous right vector when the operator has changed only slightly.
pub(crate) fn skew_operator_norm<F>(
    dim: usize,
    mut apply: F,
    tol: f64,
    max_iter: usize,
    seed: u64,
    warm: Option<&[f64]>,
) -> PowerIterationResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v = match warm {
        Some(w) if w.len() == dim && euclidean_norm(w) > 0.0 => {
            let n = euclidean_norm(w);
            w.iter().map(|x| x / n).collect::<Vec<f64>>()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = euclidean_norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            v
        }
    };
    let mut w = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut sigma = 0.0;
    let mut streak = 0usize;
    for it in 1..=max_iter {
        apply(&v, &mut w);
        let s = euclidean_norm(&w);
        if s == 0.0 {
            return PowerIterationResult { sigma: 0.0, right_vector: v, iterations: it, converged: true };
        }
        apply(&w, &mut z);
        let zn = euclidean_norm(&z);
        if zn == 0.0 {
            // skew matrices are normal, so C(Cv) = 0 forces Cv = 0; reaching
            // this means v already solved the problem exactly
            return PowerIterationResult { sigma: s, right_vector: v, iterations: it, converged: true };
        }
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = -zi / zn;
        }
        if (s - sigma).abs() <= tol * s.max(1e-300) {
            streak += 1;
        } else {
            streak = 0;
        }
        sigma = s;
        if streak >= 3 {
            return PowerIterationResult { sigma, right_vector: v, iterations: it, converged: true };
        }
    }
    PowerIterationResult { sigma, right_vector: v, iterations: max_iter, converged: false }
}

/// Count of eigenvalues of the symmetric tridiagonal `(diag, off)` that
/// are strictly below `x`, by the Sturm sequence of leading minors.
fn sturm_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if d == 0.0 { f64::MIN_POSITIVE } else { d };
        d = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiagonal_top_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let mut hi = f64::MIN;
    let mut lo = f64::MAX;
    for i in 0..k {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < k - 1 { off[i].abs() } else { 0.0 };
        hi = hi.max(diag[i] + left + right);
        lo = lo.min(diag[i] - left - right);
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count_below(diag, off, mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest singular value of a skew-symmetric operator by Lanczos
/// tridiagonalization of `CᵀC = -C²`.
///
/// Power iteration cannot separate the nearly degenerate top pairs these
/// commutators produce (consecutive Dirac gaps shrink relative to the
/// leading eigenvalue), while the Lanczos polynomial resolves the doublet
/// in a few thousand products. No reorthogonalization: ghost copies of
/// converged Ritz values do not move the extreme one, which is monitored
/// until it stabilizes to `tol`.
pub(crate) fn skew_operator_norm_lanczos<F>(
    dim: usize,
    mut apply: F,
    tol: f64,
    max_steps: usize,
    seed: u64,
) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n0 = euclidean_norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut v_prev = vec![0.0; dim];
    let mut beta_prev = 0.0f64;
    let mut cw = vec![0.0; dim];
    let mut w = vec![0.0; dim];
    let mut diag: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut last = f64::MIN;
    let mut stable = 0usize;

    for step in 1..=max_steps {
        // w = (−C²) v − β_{k-1} v_{k-1}
        apply(&v, &mut cw);
        apply(&cw, &mut w);
        for i in 0..dim {
            w[i] = -w[i] - beta_prev * v_prev[i];
        }
        let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        for i in 0..dim {
            w[i] -= alpha * v[i];
        }
        diag.push(alpha);
        let beta = euclidean_norm(&w);
        if beta <= f64::MIN_POSITIVE {
            break; // exact invariant subspace
        }
        std::mem::swap(&mut v_prev, &mut v);
        for i in 0..dim {
            v[i] = w[i] / beta;
        }
        off.push(beta);
        beta_prev = beta;

        if step % 50 == 0 || step == max_steps {
            let top = tridiagonal_top_eigenvalue(&diag, &off[..diag.len() - 1]);
            if (top - last).abs() <= tol * top.abs().max(1e-300) {
                stable += 1;
                if stable >= 3 {
                    return top.max(0.0).sqrt();
                }
            } else {
                stable = 0;
            }
            last = top;
        }
    }
    if diag.is_empty() {
        return 0.0;
    }
    let top = tridiagonal_top_eigenvalue(&diag, &off[..diag.len() - 1]);
    top.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_spread_magnitudes() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..1000 {
            k.add(1e-17);
        }
        assert!((k.value() - (1.0 + 1000.0 * 1e-17)).abs() < 1e-18);
    }

    #[test]
    fn power_iteration_matches_known_norm() {
        // block-diagonal skew matrix with 2x2 rotations of speeds 3 and 7
        let apply = |v: &[f64], out: &mut [f64]| {
            out[0] = -3.0 * v[1];
            out[1] = 3.0 * v[0];
            out[2] = -7.0 * v[3];
            out[3] = 7.0 * v[2];
        };
        let r = skew_operator_norm(4, apply, 1e-13, 5000, 1, None);
        assert!(r.converged);
        assert!((r.sigma - 7.0).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_zero_operator() {
        let r = skew_operator_norm(3, |_v, out| out.fill(0.0), 1e-12, 100, 1, None);
        assert_eq!(r.sigma, 0.0);
        assert!(r.converged);
    }
}
