//! Duality certificates for quartic-quadratic functionals
//!
//! ```text
//! J(x) = ½xᵀAx + Σ_j (γ_j/2)(½xᵀB_jx + c_j)² − fᵀx,   x ∈ ℝⁿ
//! ```
//!
//! The crate locates critical points `x₀` of `J`, builds the associated dual
//! point `(v̂*, v̂₀*)` at a regularization level `K`, evaluates the dual
//! functional `J*`, and checks numerically that
//!
//! * the duality gap `J(x₀) − J*(v̂*, v̂₀*)` vanishes,
//! * `J*` is stationary at the dual point,
//! * the local-min / global-min / local-max structure at `x₀` is mirrored by
//!   the corresponding inf-sup / sup-sup structure of `J*` (sampled on balls).
//!
//! All numerics are generic over [`Scalar`] (`f32`, `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod certify;
pub mod dual;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod primal;
pub mod sampling;
pub mod scalar;

pub use certify::{
    certify, check_dual_stationarity, check_legendre_identities, check_zero_gap, verify_case1, verify_case2,
    verify_case3, CaseLabel, CertifyConfig,
};
pub use dual::{
    cone_membership, eval_j1, eval_j2, eval_jstar, grad_jstar, hat_v, hat_v0, hess_jstar_v0, select_k,
};
pub use error::{Error, Result};
pub use instance::{generate_random, load_instance, save_instance, CaseTarget, ValidationReport};
pub use primal::{classify_hessian, eval_j, find_critical_point, grad_j, hess_j, HessianClass, NewtonOptions};
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type ProblemInstance = instance::ProblemInstance<f64>;
pub type PrimalPoint = primal::PrimalPoint<f64>;
pub type DualPoint = dual::DualPoint<f64>;
pub type ConeMembership = dual::ConeMembership<f64>;
pub type Certificate = certify::Certificate<f64>;
pub type Config = certify::CertifyConfig<f64>;

pub type Matrix32 = linalg::Matrix<f32>;
pub type ProblemInstance32 = instance::ProblemInstance<f32>;
pub type Certificate32 = certify::Certificate<f32>;
