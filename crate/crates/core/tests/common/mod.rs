//! Independent oracles shared by the integration suites. Nothing here calls
//! into the derivative or solver code it is used to check.

#![allow(dead_code)]

use quartic_dual::sampling::{normal_vec, sample_rng};
use quartic_dual::{generate_random, CaseTarget, ProblemInstance};

/// 1-D functional written out by hand: `a x²/2 + γ/2 (b x²/2 + c)² − f x`.
pub fn j_1d(inst: &ProblemInstance, x: f64) -> f64 {
    let a = inst.a[(0, 0)];
    let b = inst.b[0][(0, 0)];
    let (g, c, f) = (inst.gamma[0], inst.c[0], inst.f[0]);
    let q = b * x * x / 2.0 + c;
    a * x * x / 2.0 + g / 2.0 * q * q - f * x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extremum {
    Min,
    Max,
}

/// Local extrema of a 1-D instance on `[lo, hi]`: scan a grid of `step`,
/// bracket sign changes of the forward difference, then refine each
/// bracket by ternary search on the function values alone.
pub fn grid_extrema(inst: &ProblemInstance, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64, Extremum)> {
    let n = ((hi - lo) / step).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let js: Vec<f64> = xs.iter().map(|&x| j_1d(inst, x)).collect();
    let mut out = Vec::new();
    for i in 1..n {
        let kind = if js[i] < js[i - 1] && js[i] <= js[i + 1] {
            Extremum::Min
        } else if js[i] > js[i - 1] && js[i] >= js[i + 1] {
            Extremum::Max
        } else {
            continue;
        };
        let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            let (f1, f2) = (j_1d(inst, m1), j_1d(inst, m2));
            let keep_left = match kind {
                Extremum::Min => f1 < f2,
                Extremum::Max => f1 > f2,
            };
            if keep_left {
                b = m2;
            } else {
                a = m1;
            }
        }
        let x = 0.5 * (a + b);
        out.push((x, j_1d(inst, x), kind));
    }
    out
}

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

pub fn central_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            f(&xp).iter().zip(f(&xm)).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        })
        .collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖estimate − exact‖∞ / (1 + ‖exact‖∞)`
pub fn rel_err(estimate: &[f64], exact: &[f64]) -> f64 {
    let diff: Vec<f64> = estimate.iter().zip(exact).map(|(a, b)| a - b).collect();
    norm_inf(&diff) / (1.0 + norm_inf(exact))
}

/// Random instance with `n ∈ 1..=8`, `N ∈ 1..=4` chosen from the seed.
pub fn random_instance(seed: u64) -> ProblemInstance {
    let n = 1 + (seed % 8) as usize;
    let terms = 1 + ((seed / 8) % 4) as usize;
    generate_random(seed, n, terms, CaseTarget::Unbiased).unwrap()
}

pub fn random_point(seed: u64, tag: u64, len: usize) -> Vec<f64> {
    normal_vec(&mut sample_rng(seed, tag, 0), len)
}

/// Largest eigenvalue bound by Gershgorin discs, independent of the crate's
/// eigen-solver.
pub fn gershgorin_upper(m: &quartic_dual::Matrix) -> f64 {
    (0..m.rows())
        .map(|i| m[(i, i)] + (0..m.cols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A random dual point `(v, v₀, K)` with `K` large enough, by Gershgorin,
/// that both `K·I + A` and `K·I − Σ v₀_j B_j` are positive definite with
/// margin at least 1.
pub fn random_dual_point(inst: &ProblemInstance, seed: u64) -> (Vec<f64>, Vec<f64>, f64) {
    let v = random_point(seed, 11, inst.dim());
    let v0 = random_point(seed, 12, inst.terms());
    let s = inst.weighted_b(&v0);
    let neg_a = inst.a.map(|x| -x);
    let k = 1.0 + gershgorin_upper(&s).max(gershgorin_upper(&neg_a)).max(0.0);
    (v, v0, k)
}
