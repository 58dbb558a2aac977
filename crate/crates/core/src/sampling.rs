//! Seeded sampling with per-sample streams, so parallel and sequential
//! evaluation give identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{norm2, Scalar};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for sample `index` of the check identified by `tag`.
pub fn sample_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(tag ^ splitmix64(index)));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn normal_vec<T: Scalar>(rng: &mut impl Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Uniform point in the closed ball of `radius` around `center`: direction
/// uniform on the sphere, radius distributed as `radius · U^{1/d}`.
pub fn uniform_in_ball<T: Scalar>(rng: &mut impl Rng, center: &[T], radius: T) -> Vec<T> {
    let d = center.len();
    if d == 0 {
        return Vec::new();
    }
    let dir: Vec<T> = loop {
        let v = normal_vec::<T>(rng, d);
        if norm2(&v) > T::zero() {
            break v;
        }
    };
    let len = norm2(&dir);
    let u: f64 = rng.random();
    let rho = radius * T::lit(u.powf(1.0 / d as f64));
    center.iter().zip(&dir).map(|(&c, &x)| c + rho * x / len).collect()
}

/// Radial projection onto the closed ball.
pub fn project_to_ball<T: Scalar>(point: &[T], center: &[T], radius: T) -> Vec<T> {
    let diff: Vec<T> = point.iter().zip(center).map(|(&p, &c)| p - c).collect();
    let dist = norm2(&diff);
    if dist <= radius {
        return point.to_vec();
    }
    let s = radius / dist;
    center.iter().zip(&diff).map(|(&c, &d)| c + s * d).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_samples_stay_inside() {
        let center = [1.0, -2.0, 0.5];
        for i in 0..500 {
            let mut rng = sample_rng(3, 1, i);
            let p = uniform_in_ball(&mut rng, &center, 0.25);
            let d: Vec<f64> = p.iter().zip(&center).map(|(a, b)| a - b).collect();
            assert!(norm2(&d) <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn radius_distribution_is_volume_uniform() {
        // in 2-D, P(|p| ≤ r/2) = 1/4
        let n = 20_000;
        let inside = (0..n)
            .filter(|&i| {
                let mut rng = sample_rng(11, 2, i);
                norm2(&uniform_in_ball(&mut rng, &[0.0, 0.0], 1.0)) <= 0.5
            })
            .count();
        let frac = inside as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.015, "{frac}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = sample_rng(1, 2, 3).random();
        let b: f64 = sample_rng(1, 2, 3).random();
        let c: f64 = sample_rng(1, 2, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn projection() {
        let p = project_to_ball(&[3.0f64, 4.0], &[0.0, 0.0], 1.0);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_to_ball(&[0.1, 0.0], &[0.0, 0.0], 1.0), vec![0.1, 0.0]);
    }
}
