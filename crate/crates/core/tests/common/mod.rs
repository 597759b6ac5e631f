#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn shrink_norm(c: &[f64], t: f64) -> f64 {
    c.iter()
        .map(|v| (v.abs() - t).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Optimal value of `max <c, w>` over `||w||_1 <= r, ||w||_2 <= 1`, computed
/// from the dual `min_{t >= 0} r t + ||S(c, t)||_2` by a fine grid followed by
/// golden-section refinement. The dual is convex in `t`.
pub fn onebit_dual_value(c: &[f64], r: f64) -> f64 {
    let f = |t: f64| r * t + shrink_norm(c, t);
    let tmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if tmax == 0.0 {
        return 0.0;
    }
    let steps = 20_000;
    let mut best = (0.0, f(0.0));
    for k in 1..=steps {
        let t = tmax * k as f64 / steps as f64;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let h = tmax / steps as f64;
    let (mut a, mut b) = ((best.0 - h).max(0.0), (best.0 + h).min(tmax));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    f(0.5 * (a + b)).min(best.1)
}

/// A random point of the feasible set: random direction scaled into both balls.
pub fn random_feasible(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    let mut w = gaussian_vec(rng, d);
    // Sparsify some draws so vertices of the l1 ball get visited.
    for v in w.iter_mut() {
        if rng.random::<f64>() < 0.3 {
            *v = 0.0;
        }
    }
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let l2: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return w;
    }
    let s = (r / l1).min(1.0 / l2) * rng.random::<f64>().sqrt().max(0.999);
    w.iter().map(|v| v * s).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
