//! Dual variables and the dual functionals.
//!
//! With `S(v₀) = Σ_j v₀_j B_j` and the anchor matrix `M(v₀, K) = K·I − S(v₀)`:
//!
//! ```text
//! J₁(x, v₀)      = ½xᵀAx + Σ v₀_j(½xᵀB_jx + c_j) − Σ v₀_j²/(2γ_j) − fᵀx
//! J₂(x, v, v₀)   = ½xᵀAx − fᵀx + ½vᵀM⁻¹v − vᵀx + (K/2)xᵀx − Σ v₀_j²/(2γ_j) + Σ v₀_j c_j
//! J*(v, v₀)      = −½(v + f)ᵀ(K·I + A)⁻¹(v + f) + ½vᵀM⁻¹v − Σ v₀_j²/(2γ_j) + Σ v₀_j c_j
//! ```
//!
//! Every resolvent is applied through a Cholesky factorization; a failed
//! factorization is reported as a precondition error carrying the offending
//! eigenvalue. No explicit inverse is ever formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{extreme_eigenvalues, sym_norm2, Cholesky, Matrix};
use crate::primal::{inner_quadratics, PD_TOL};
use crate::scalar::{add, dot, norm_inf, Scalar};

pub const SHIFT_NAME: &str = "K*I + A";
pub const ANCHOR_NAME: &str = "M = K*I - sum_j v0_j B_j";
pub const CONCAVITY_NAME: &str = "v0-Hessian of J*";

/// Maximum number of doublings tried by [`select_k`].
pub const MAX_DOUBLINGS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DualPoint<T> {
    pub v_star: Vec<T>,
    pub v0_star: Vec<T>,
    #[serde(rename = "K")]
    pub k: T,
}

/// Extreme-eigenvalue margins of the parameter sets `B*`, `A₊*`, `A₋*`,
/// `E* = A₊* ∩ B*`, plus invertibility of the anchor matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConeMembership<T> {
    #[serde(rename = "in_Bstar")]
    pub in_bstar: bool,
    /// `λ_min(S(v₀) + K·I − K·I/2)`
    #[serde(rename = "margin_Bstar")]
    pub margin_bstar: T,
    #[serde(rename = "in_Aplus")]
    pub in_aplus: bool,
    /// `λ_min(S(v₀) + A)`
    #[serde(rename = "margin_Aplus")]
    pub margin_aplus: T,
    #[serde(rename = "in_Aminus")]
    pub in_aminus: bool,
    /// `λ_max(S(v₀) + A)`; membership requires it to be negative.
    #[serde(rename = "margin_Aminus")]
    pub margin_aminus: T,
    #[serde(rename = "in_Estar")]
    pub in_estar: bool,
    #[serde(rename = "M_pd")]
    pub m_pd: bool,
    /// `λ_min(M(v₀, K))`
    #[serde(rename = "margin_M")]
    pub margin_m: T,
}

/// Margins behind a choice of `K` at a dual point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KMargins<T> {
    /// `λ_min(K·I + A)`
    pub shift: T,
    /// Lower bound of `λ_min(M(u, K))` over the box `|u_j − v₀_j| ≤ r₂`:
    /// `λ_min(M(v₀, K)) − r₂ Σ_j ‖B_j‖₂`.
    pub anchor_box: T,
    /// `−λ_max` of the `v₀`-Hessian of `J*` at `(M x₀, v₀)`; `None` when the
    /// anchor matrix is not invertible.
    pub concavity: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KChoice<T> {
    #[serde(rename = "K")]
    pub k: T,
    /// `None` when `K` was supplied by the caller.
    pub doublings: Option<u32>,
    pub margins: KMargins<T>,
    /// Concavity margin `select_k` demands: `½ min_j 1/γ_j`.
    pub concavity_required: T,
}

/// `Σ_j v₀_j B_j`
pub fn weighted_b<T: Scalar>(inst: &ProblemInstance<T>, v0: &[T]) -> Matrix<T> {
    inst.weighted_b(v0)
}

/// `M(v₀, K) = K·I − Σ_j v₀_j B_j`
pub fn anchor_matrix<T: Scalar>(inst: &ProblemInstance<T>, v0: &[T], k: T) -> Matrix<T> {
    let mut m = inst.weighted_b(v0).map(|v| -v);
    m.add_diag(k);
    m
}

fn shift_matrix<T: Scalar>(inst: &ProblemInstance<T>, k: T) -> Matrix<T> {
    let mut m = inst.a.clone();
    m.add_diag(k);
    m
}

fn factor_pd<T: Scalar>(m: &Matrix<T>, name: &'static str) -> Result<Cholesky<T>> {
    Cholesky::new(m).ok_or_else(|| Error::not_pd(name, extreme_eigenvalues(m).0.as_f64()))
}

/// `(v̂₀)_j = γ_j(½x₀ᵀB_jx₀ + c_j)`
pub fn hat_v0<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T]) -> Result<Vec<T>> {
    inst.check_point(x0)?;
    Ok(inner_quadratics(inst, x0).iter().zip(&inst.gamma).map(|(&q, &g)| g * q).collect())
}

/// `v̂ = M(v₀, K)·x₀ = −Σ_j v₀_j B_j x₀ + K x₀`
pub fn hat_v<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], v0: &[T], k: T) -> Result<Vec<T>> {
    inst.check_point(x0)?;
    inst.check_multiplier(v0)?;
    Ok(anchor_matrix(inst, v0, k).mul_vec(x0))
}

/// Default `v₀`-ball radius `0.1·(1 + ‖v₀‖∞)`.
pub fn default_r2<T: Scalar>(v0: &[T]) -> T {
    T::lit(0.1) * (T::one() + norm_inf(v0))
}

fn check_dual_dims<T: Scalar>(inst: &ProblemInstance<T>, v_star: &[T], v0: &[T]) -> Result<()> {
    if v_star.len() != inst.dim() {
        return Err(Error::DimensionMismatch { what: "v_star", expected: inst.dim(), found: v_star.len() });
    }
    inst.check_multiplier(v0)
}

/// `−Σ v₀_j²/(2γ_j) + Σ v₀_j c_j`
fn multiplier_terms<T: Scalar>(inst: &ProblemInstance<T>, v0: &[T]) -> T {
    let half = T::lit(0.5);
    v0.iter()
        .zip(&inst.gamma)
        .zip(&inst.c)
        .fold(T::zero(), |acc, ((&v, &g), &c)| acc - half * v * v / g + v * c)
}

pub fn eval_j1<T: Scalar>(inst: &ProblemInstance<T>, x: &[T], v0: &[T]) -> Result<T> {
    inst.check_point(x)?;
    inst.check_multiplier(v0)?;
    let half = T::lit(0.5);
    // Σ v₀_j c_j is folded into multiplier_terms
    let coupling = inst.b.iter().zip(v0).fold(T::zero(), |acc, (bj, &v)| acc + v * half * bj.quad_form(x));
    Ok(half * inst.a.quad_form(x) + coupling + multiplier_terms(inst, v0) - dot(&inst.f, x))
}

/// `∂J₁/∂v₀_j = ½xᵀB_jx + c_j − v₀_j/γ_j`
pub fn grad_j1_v0<T: Scalar>(inst: &ProblemInstance<T>, x: &[T], v0: &[T]) -> Result<Vec<T>> {
    inst.check_point(x)?;
    inst.check_multiplier(v0)?;
    Ok(inner_quadratics(inst, x).iter().zip(v0).zip(&inst.gamma).map(|((&q, &v), &g)| q - v / g).collect())
}

pub fn eval_j2<T: Scalar>(inst: &ProblemInstance<T>, x: &[T], v_star: &[T], v0: &[T], k: T) -> Result<T> {
    inst.check_point(x)?;
    check_dual_dims(inst, v_star, v0)?;
    let anchor = factor_pd(&anchor_matrix(inst, v0, k), ANCHOR_NAME)?;
    let half = T::lit(0.5);
    let resolvent = dot(v_star, &anchor.solve(v_star));
    Ok(half * inst.a.quad_form(x) - dot(&inst.f, x) + half * resolvent - dot(v_star, x)
        + half * k * dot(x, x)
        + multiplier_terms(inst, v0))
}

/// The dual functional `J*(v, v₀)` at regularization `K`.
pub fn eval_jstar<T: Scalar>(inst: &ProblemInstance<T>, v_star: &[T], v0: &[T], k: T) -> Result<T> {
    check_dual_dims(inst, v_star, v0)?;
    let shift = factor_pd(&shift_matrix(inst, k), SHIFT_NAME)?;
    let anchor = factor_pd(&anchor_matrix(inst, v0, k), ANCHOR_NAME)?;
    let half = T::lit(0.5);
    let w = add(v_star, &inst.f);
    Ok(-half * dot(&w, &shift.solve(&w)) + half * dot(v_star, &anchor.solve(v_star)) + multiplier_terms(inst, v0))
}

/// `(∂J*/∂v, ∂J*/∂v₀)` with `y = M⁻¹v`:
/// `∂J*/∂v = −(K·I + A)⁻¹(v + f) + y`, `∂J*/∂v₀_j = ½yᵀB_jy − v₀_j/γ_j + c_j`.
pub fn grad_jstar<T: Scalar>(inst: &ProblemInstance<T>, v_star: &[T], v0: &[T], k: T) -> Result<(Vec<T>, Vec<T>)> {
    check_dual_dims(inst, v_star, v0)?;
    let shift = factor_pd(&shift_matrix(inst, k), SHIFT_NAME)?;
    let anchor = factor_pd(&anchor_matrix(inst, v0, k), ANCHOR_NAME)?;
    let y = anchor.solve(v_star);
    let z = shift.solve(&add(v_star, &inst.f));
    let dv = y.iter().zip(&z).map(|(&a, &b)| a - b).collect();
    let dv0 = inner_quadratics(inst, &y).iter().zip(v0).zip(&inst.gamma).map(|((&q, &v), &g)| q - v / g).collect();
    Ok((dv, dv0))
}

/// Hessian of `J*` in `v₀` at fixed `v`:
/// `(B_i y)ᵀ M⁻¹ (B_j y) − δ_ij/γ_j` with `y = M⁻¹v`.
pub fn hess_jstar_v0<T: Scalar>(inst: &ProblemInstance<T>, v_star: &[T], v0: &[T], k: T) -> Result<Matrix<T>> {
    check_dual_dims(inst, v_star, v0)?;
    let anchor = factor_pd(&anchor_matrix(inst, v0, k), ANCHOR_NAME)?;
    Ok(v0_hessian_with(inst, &anchor, v_star))
}

fn v0_hessian_with<T: Scalar>(inst: &ProblemInstance<T>, anchor: &Cholesky<T>, v_star: &[T]) -> Matrix<T> {
    let y = anchor.solve(v_star);
    let by: Vec<Vec<T>> = inst.b.iter().map(|bj| bj.mul_vec(&y)).collect();
    let solved: Vec<Vec<T>> = by.iter().map(|v| anchor.solve(v)).collect();
    let nt = inst.terms();
    let mut h = Matrix::zeros(nt, nt);
    for i in 0..nt {
        for j in 0..=i {
            let v = dot(&by[i], &solved[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h[(i, i)] -= T::one() / inst.gamma[i];
    }
    h
}

/// `PD_TOL · (1 + ‖M‖₂)` from the extreme eigenvalues of a symmetric `M`.
fn definiteness_tol<T: Scalar>(lo: T, hi: T) -> T {
    T::lit(PD_TOL) * (T::one() + lo.abs().max(hi.abs()))
}

pub fn cone_membership<T: Scalar>(inst: &ProblemInstance<T>, v0: &[T], k: T) -> Result<ConeMembership<T>> {
    inst.check_multiplier(v0)?;
    let s = inst.weighted_b(v0);
    let (margin_bstar, in_bstar) = bstar_margin(&s, k);
    let (margin_aplus, margin_aminus, in_aplus, in_aminus) = aplus_margins(inst, &s);

    let mut anchor = s.map(|v| -v);
    anchor.add_diag(k);
    let (margin_m, anchor_max) = extreme_eigenvalues(&anchor);
    let m_pd = margin_m > definiteness_tol(margin_m, anchor_max);

    Ok(ConeMembership {
        in_bstar,
        margin_bstar,
        in_aplus,
        margin_aplus,
        in_aminus,
        margin_aminus,
        in_estar: in_aplus && in_bstar,
        m_pd,
        margin_m,
    })
}

fn bstar_margin<T: Scalar>(s: &Matrix<T>, k: T) -> (T, bool) {
    let mut bstar = s.clone();
    bstar.add_diag(k * T::lit(0.5));
    let (lo, hi) = extreme_eigenvalues(&bstar);
    (lo, lo > definiteness_tol(lo, hi))
}

fn aplus_margins<T: Scalar>(inst: &ProblemInstance<T>, s: &Matrix<T>) -> (T, T, bool, bool) {
    let mut plus_a = s.clone();
    plus_a.add_scaled(T::one(), &inst.a);
    let (lo, hi) = extreme_eigenvalues(&plus_a);
    let tol = definiteness_tol(lo, hi);
    (lo, hi, lo > tol, hi < -tol)
}

/// Membership of `v₀` in `E* = A₊* ∩ B*` alone.
pub fn in_estar<T: Scalar>(inst: &ProblemInstance<T>, v0: &[T], k: T) -> bool {
    let s = inst.weighted_b(v0);
    aplus_margins(inst, &s).2 && bstar_margin(&s, k).1
}

/// Evaluates the three conditions behind a choice of `K` at the dual point
/// induced by `x₀` and `v₀`.
pub fn k_margins<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], v0: &[T], k: T, r2: T) -> Result<KMargins<T>> {
    inst.check_point(x0)?;
    inst.check_multiplier(v0)?;
    let (shift, _) = extreme_eigenvalues(&shift_matrix(inst, k));
    let anchor = anchor_matrix(inst, v0, k);
    let (anchor_min, _) = extreme_eigenvalues(&anchor);
    let spread = inst.b.iter().fold(T::zero(), |acc, bj| acc + sym_norm2(bj));
    let concavity = Cholesky::new(&anchor).map(|ch| {
        let v_star = anchor.mul_vec(x0);
        let (_, hi) = extreme_eigenvalues(&v0_hessian_with(inst, &ch, &v_star));
        -hi
    });
    Ok(KMargins { shift, anchor_box: anchor_min - r2 * spread, concavity })
}

fn concavity_required<T: Scalar>(inst: &ProblemInstance<T>) -> T {
    let min_inv = inst.gamma.iter().fold(T::infinity(), |acc, &g| acc.min(T::one() / g));
    T::lit(0.5) * min_inv
}

/// Smallest `K = K₀·2^m` such that `λ_min(K·I + A) ≥ 1`, the anchor matrix
/// keeps `λ_min ≥ 1` over the `r₂`-box around `v₀`, and the `v₀`-Hessian of
/// `J*` at `(M x₀, v₀)` is negative definite with margin `≥ ½ min_j 1/γ_j`.
/// `K₀ = 2·(1 + max(λ_max(−A), λ_max(S(v₀)), max_j ‖B_j‖₂(|v₀_j| + 3r₂)))`.
pub fn select_k<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], v0: &[T], r2: T) -> Result<KChoice<T>> {
    inst.check_point(x0)?;
    inst.check_multiplier(v0)?;
    let (_, neg_a_max) = extreme_eigenvalues(&inst.a.map(|v| -v));
    let (_, s_max) = extreme_eigenvalues(&inst.weighted_b(v0));
    let b_term = inst
        .b
        .iter()
        .zip(v0)
        .fold(T::zero(), |acc, (bj, &v)| acc.max(sym_norm2(bj) * (v.abs() + T::lit(3.0) * r2)));
    let k0 = T::lit(2.0) * (T::one() + neg_a_max.max(s_max).max(b_term));
    let required = concavity_required(inst);

    let mut k = k0;
    let mut last = None;
    for m in 0..=MAX_DOUBLINGS {
        let margins = k_margins(inst, x0, v0, k, r2)?;
        let ok = margins.shift >= T::one()
            && margins.anchor_box >= T::one()
            && margins.concavity.is_some_and(|c| c >= required);
        if ok {
            return Ok(KChoice { k, doublings: Some(m), margins, concavity_required: required });
        }
        last = Some(margins);
        k *= T::lit(2.0);
    }
    let last = last.expect("loop runs at least once");
    Err(Error::KSelection {
        doublings: MAX_DOUBLINGS,
        last_k: (k / T::lit(2.0)).as_f64(),
        diagnostic: format!(
            "shift margin {:e}, anchor box margin {:e}, concavity margin {}",
            last.shift.as_f64(),
            last.anchor_box.as_f64(),
            last.concavity.map_or("undefined".to_owned(), |c| format!("{:e}", c.as_f64())),
        ),
    })
}

/// Checks a caller-supplied `K`: both resolvents must exist on the whole
/// `r₂`-box and `J*` must be strictly concave in `v₀` at the dual point.
pub fn check_k<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], v0: &[T], k: T, r2: T) -> Result<KChoice<T>> {
    if k <= T::zero() || !k.is_finite() {
        return Err(Error::InvalidArgument { name: "K", message: format!("must be positive and finite, got {k}") });
    }
    let margins = k_margins(inst, x0, v0, k, r2)?;
    let tol = T::lit(PD_TOL) * (T::one() + k);
    if margins.shift.is_nan() || margins.shift <= tol {
        return Err(Error::not_pd(SHIFT_NAME, margins.shift.as_f64()));
    }
    if margins.anchor_box.is_nan() || margins.anchor_box <= tol {
        return Err(Error::not_pd(ANCHOR_NAME, margins.anchor_box.as_f64()));
    }
    match margins.concavity {
        Some(c) if c > T::lit(PD_TOL) => {}
        other => return Err(Error::not_nd(CONCAVITY_NAME, other.map_or(f64::NAN, |c| -c.as_f64()))),
    }
    Ok(KChoice { k, doublings: None, margins, concavity_required: concavity_required(inst) })
}
