//! The primal functional `J`, its closed-form first and second variations,
//! a damped Newton critical-point finder, and Hessian classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{symmetric_eigenvalues, Lu, Matrix};
use crate::scalar::{dot, norm2, Scalar};

/// Relative threshold for strict definiteness, shared by every
/// classification in the crate.
pub const PD_TOL: f64 = 1e-9;
pub const STATIONARITY_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100;

const MAX_HALVINGS: usize = 30;
const SINGULAR_PIVOT: f64 = 1e-14;
const REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianClass {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

impl HessianClass {
    pub fn as_str(self) -> &'static str {
        match self {
            HessianClass::PositiveDefinite => "positive_definite",
            HessianClass::NegativeDefinite => "negative_definite",
            HessianClass::Indefinite => "indefinite",
            HessianClass::Degenerate => "degenerate",
        }
    }
}

/// Classification together with the eigenvalue margins that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum<T> {
    pub class: HessianClass,
    pub lambda_min: T,
    pub lambda_max: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrimalPoint<T> {
    pub x0: Vec<T>,
    pub value: T,
    pub grad_norm: T,
    pub hessian_class: HessianClass,
    pub lambda_min: T,
    pub lambda_max: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(STATIONARITY_TOL), max_iter: MAX_ITER }
    }
}

/// `½xᵀB_jx + c_j` for every term.
pub fn inner_quadratics<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    inst.b.iter().zip(&inst.c).map(|(bj, &cj)| half * bj.quad_form(x) + cj).collect()
}

pub fn eval_j<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> Result<T> {
    inst.check_point(x)?;
    let half = T::lit(0.5);
    let quartic = quartic_sum(inst, x);
    Ok(half * inst.a.quad_form(x) + quartic - dot(&inst.f, x))
}

/// `Σ_j (γ_j/2)(½xᵀB_jx + c_j)²`, nonnegative by construction.
pub fn quartic_sum<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> T {
    let half = T::lit(0.5);
    inner_quadratics(inst, x).iter().zip(&inst.gamma).fold(T::zero(), |acc, (&q, &g)| acc + half * g * q * q)
}

/// `δJ(x) = Ax + Σ_j γ_j(½xᵀB_jx + c_j)B_jx − f`
pub fn grad_j<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> Result<Vec<T>> {
    inst.check_point(x)?;
    let mut g = inst.a.mul_vec(x);
    for ((bj, &gj), q) in inst.b.iter().zip(&inst.gamma).zip(inner_quadratics(inst, x)) {
        crate::scalar::axpy(gj * q, &bj.mul_vec(x), &mut g);
    }
    for (gi, &fi) in g.iter_mut().zip(&inst.f) {
        *gi -= fi;
    }
    Ok(g)
}

/// `δ²J(x) = A + Σ_j γ_j[(½xᵀB_jx + c_j)B_j + (B_jx)(B_jx)ᵀ]`, assembled on
/// the lower triangle and mirrored.
pub fn hess_j<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> Result<Matrix<T>> {
    inst.check_point(x)?;
    let n = inst.dim();
    let q = inner_quadratics(inst, x);
    let bx: Vec<Vec<T>> = inst.b.iter().map(|bj| bj.mul_vec(x)).collect();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for k in 0..=i {
            let mut v = inst.a[(i, k)];
            for j in 0..inst.terms() {
                v += inst.gamma[j] * (q[j] * inst.b[j][(i, k)] + bx[j][i] * bx[j][k]);
            }
            h[(i, k)] = v;
            h[(k, i)] = v;
        }
    }
    Ok(h)
}

/// Classifies a symmetric matrix by its extreme eigenvalues against
/// `PD_TOL · (1 + ‖H‖₂)`.
pub fn classify_hessian<T: Scalar>(h: &Matrix<T>) -> Spectrum<T> {
    let ev = symmetric_eigenvalues(h);
    let (lambda_min, lambda_max) = match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (T::zero(), T::zero()),
    };
    let scale = T::one() + lambda_min.abs().max(lambda_max.abs());
    let tol = T::lit(PD_TOL) * scale;
    let class = if lambda_min > tol {
        HessianClass::PositiveDefinite
    } else if lambda_max < -tol {
        HessianClass::NegativeDefinite
    } else if ev.iter().any(|l| l.abs() <= tol) {
        HessianClass::Degenerate
    } else {
        HessianClass::Indefinite
    };
    Spectrum { class, lambda_min, lambda_max }
}

fn frobenius<T: Scalar>(m: &Matrix<T>) -> T {
    let mut s = T::zero();
    for i in 0..m.rows() {
        s += dot(m.row(i), m.row(i));
    }
    s.sqrt()
}

/// Newton direction `s` with `H s = −g`; falls back to `(H + μI)s = −g`
/// with doubling `μ` when `H` is numerically singular.
fn newton_direction<T: Scalar>(h: &Matrix<T>, g: &[T]) -> Option<Vec<T>> {
    let scale = T::one() + frobenius(h);
    let singular = T::lit(SINGULAR_PIVOT) * scale;
    let rhs: Vec<T> = g.iter().map(|&v| -v).collect();
    let lu = Lu::new(h);
    if lu.min_pivot() >= singular {
        return Some(lu.solve(&rhs));
    }
    let mut mu = T::lit(REGULARIZATION) * scale;
    for _ in 0..200 {
        let mut reg = h.clone();
        reg.add_diag(mu);
        let lu = Lu::new(&reg);
        if lu.min_pivot() >= singular {
            return Some(lu.solve(&rhs));
        }
        mu *= T::lit(2.0);
    }
    None
}

/// Damped Newton iteration on `δJ(x) = 0` with backtracking on `‖δJ‖₂`.
/// Converges to minima, maxima and saddles alike. Non-convergence is
/// reported through [`PrimalPoint::converged`], not as an error.
pub fn find_critical_point<T: Scalar>(
    inst: &ProblemInstance<T>,
    x_init: &[T],
    opts: NewtonOptions<T>,
) -> Result<PrimalPoint<T>> {
    inst.check_point(x_init)?;
    if opts.tol.is_nan() || opts.tol <= T::zero() {
        return Err(Error::InvalidArgument { name: "tol", message: "must be positive".into() });
    }
    let target = opts.tol * (T::one() + norm2(&inst.f));
    let mut x = x_init.to_vec();
    let mut g = grad_j(inst, &x)?;
    let mut gnorm = norm2(&g);
    let mut iterations = 0;
    let mut converged = gnorm <= target;

    while !converged && iterations < opts.max_iter && gnorm.is_finite() {
        iterations += 1;
        let h = hess_j(inst, &x)?;
        let Some(step) = newton_direction(&h, &g) else { break };
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&xi, &si)| xi + t * si).collect();
            let gt = grad_j(inst, &trial)?;
            let nt = norm2(&gt);
            if nt < gnorm {
                accepted = Some((trial, gt, nt));
                break;
            }
            t *= T::lit(0.5);
        }
        let Some((xn, gn, nn)) = accepted else { break };
        x = xn;
        g = gn;
        gnorm = nn;
        converged = gnorm <= target;
    }

    let h = hess_j(inst, &x)?;
    let spectrum = classify_hessian(&h);
    Ok(PrimalPoint {
        value: eval_j(inst, &x)?,
        x0: x,
        grad_norm: gnorm,
        hessian_class: spectrum.class,
        lambda_min: spectrum.lambda_min,
        lambda_max: spectrum.lambda_max,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{double_well, single_well};

    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn value_at_origin_is_sum_of_offsets() {
        let inst = double_well::<f64>();
        assert_eq!(eval_j(&inst, &[0.0]).unwrap(), 0.5);
        assert_eq!(eval_j(&single_well::<f64>(), &[0.0]).unwrap(), 0.5);
        assert!((eval_j(&inst, &[INV_SQRT2]).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_origin_is_minus_f() {
        let mut inst = double_well::<f64>();
        inst.f = vec![0.25];
        assert_eq!(grad_j(&inst, &[0.0]).unwrap(), vec![-0.25]);
    }

    #[test]
    fn double_well_derivatives_at_the_well() {
        let inst = double_well::<f64>();
        assert!(grad_j(&inst, &[INV_SQRT2]).unwrap()[0].abs() < 1e-15);
        assert!((hess_j(&inst, &[INV_SQRT2]).unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
        assert_eq!(hess_j(&inst, &[0.0]).unwrap()[(0, 0)], -1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = double_well::<f64>();
        assert!(matches!(eval_j(&inst, &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(grad_j(&inst, &[]).is_err());
        assert!(hess_j(&inst, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify_hessian(&Matrix::<f64>::identity(3)).class, HessianClass::PositiveDefinite);
        assert_eq!(classify_hessian(&Matrix::from_diag(&[-1.0])).class, HessianClass::NegativeDefinite);
        assert_eq!(classify_hessian(&Matrix::from_diag(&[1.0, -1.0])).class, HessianClass::Indefinite);
        assert_eq!(classify_hessian(&Matrix::from_diag(&[1.0, 0.0, -1.0])).class, HessianClass::Degenerate);
        assert_eq!(classify_hessian(&Matrix::from_diag(&[1.0, 1e-12])).class, HessianClass::Degenerate);
        let s = classify_hessian(&Matrix::from_diag(&[2.0, -3.0]));
        assert_eq!((s.lambda_min, s.lambda_max), (-3.0, 2.0));
    }

    #[test]
    fn newton_finds_single_well_root() {
        let p = find_critical_point(&single_well::<f64>(), &[0.7], NewtonOptions::default()).unwrap();
        assert!(p.converged);
        assert!(p.x0[0].abs() < 1e-12);
        assert!(p.grad_norm <= 1e-12);
        assert_eq!(p.hessian_class, HessianClass::PositiveDefinite);
    }

    #[test]
    fn newton_finds_double_well_minimum() {
        let p = find_critical_point(&double_well::<f64>(), &[0.6], NewtonOptions::default()).unwrap();
        assert!(p.converged);
        assert!((p.x0[0] - INV_SQRT2).abs() < 1e-14, "{}", p.x0[0]);
        assert!((p.value - 0.375).abs() < 1e-15);
        assert_eq!(p.hessian_class, HessianClass::PositiveDefinite);
    }

    #[test]
    fn newton_stays_at_stationary_start() {
        let p = find_critical_point(&double_well::<f64>(), &[0.0], NewtonOptions::default()).unwrap();
        assert!(p.converged);
        assert_eq!(p.x0, vec![0.0]);
        assert_eq!(p.iterations, 0);
        assert_eq!(p.hessian_class, HessianClass::NegativeDefinite);
    }

    #[test]
    fn newton_handles_singular_hessian_start() {
        // δ²J(x) = 6x² − 1 vanishes at x = 1/√6
        let x = (1.0f64 / 6.0).sqrt();
        let p = find_critical_point(&double_well::<f64>(), &[x], NewtonOptions::default()).unwrap();
        assert!(p.converged);
        assert!(p.grad_norm <= 1e-10);
    }

    #[test]
    fn newton_reports_exhausted_budget() {
        let opts = NewtonOptions { tol: 1e-10, max_iter: 1 };
        let p = find_critical_point(&double_well::<f64>(), &[3.0], opts).unwrap();
        assert!(!p.converged);
        assert_eq!(p.iterations, 1);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let opts = NewtonOptions { tol: 0.0, max_iter: 10 };
        assert!(find_critical_point(&double_well::<f64>(), &[0.5], opts).is_err());
    }

    #[test]
    fn single_precision_newton() {
        let opts = NewtonOptions { tol: 1e-5f32, max_iter: 50 };
        let p = find_critical_point(&double_well::<f32>(), &[0.6], opts).unwrap();
        assert!(p.converged);
        assert!((p.x0[0] - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }
}
