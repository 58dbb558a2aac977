//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All functionals, derivatives and factorizations are written against
//! [`Scalar`], with implementations for `f32` and `f64`. Tolerances in the
//! crate are stated as `f64` literals and converted with [`Scalar::lit`].

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
{
    /// Converts an `f64` constant into `Self`. Out-of-range values saturate
    /// the way `as` casts do.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(|| if v > 0.0 { Self::infinity() } else { Self::neg_infinity() })
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Euclidean norm.
pub fn norm2<T: Scalar>(v: &[T]) -> T {
    // scaled accumulation so f32 does not overflow on large entries
    let amax = norm_inf(v);
    if amax == T::zero() || !amax.is_finite() {
        return amax;
    }
    let s = v.iter().fold(T::zero(), |acc, &x| {
        let r = x / amax;
        acc + r * r
    });
    amax * s.sqrt()
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        assert_eq!(norm_inf(&[3.0f32, -4.0]), 4.0);
        assert_eq!(norm2::<f64>(&[]), 0.0);
        // would overflow without rescaling
        assert!((norm2(&[3e30f32, 4e30]) - 5e30).abs() < 1e24);
    }

    #[test]
    fn lit_saturates() {
        assert_eq!(<f32 as Scalar>::lit(1e300), f32::INFINITY);
        assert_eq!(<f64 as Scalar>::lit(0.5), 0.5);
    }
}
