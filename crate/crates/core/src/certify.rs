//! End-to-end verification at a critical point: zero duality gap, dual
//! stationarity, the three extremal cases, and the closed-form Legendre
//! identities linking `J`, `J₁`, `J₂` and `J*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{
    check_k, cone_membership, default_r2, in_estar, eval_j1, eval_j2, eval_jstar, grad_j1_v0, grad_jstar, hat_v, hat_v0,
    hess_jstar_v0, select_k, ConeMembership, DualPoint, KChoice,
};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{extreme_eigenvalues, Cholesky, Lu};
use crate::primal::{
    classify_hessian, eval_j, find_critical_point, grad_j, hess_j, HessianClass, NewtonOptions, PrimalPoint,
};
use crate::sampling::{normal_vec, project_to_ball, sample_rng, uniform_in_ball};
use crate::scalar::{norm2, norm_inf, sub, Scalar};

/// Certificate document format version.
pub const FORMAT_VERSION: &str = "1";
pub const TOOL_VERSION: &str = concat!("quartic-dual ", env!("CARGO_PKG_VERSION"));

pub const GAP_TOL: f64 = 1e-9;
pub const STAT_TOL: f64 = 1e-8;
pub const LEGENDRE_TOL: f64 = 1e-9;
pub const SAMPLES: usize = 10_000;
pub const MULTISTART: usize = 32;
pub const LEGENDRE_SAMPLES: usize = 100;
/// Relative slack in sampled comparisons: `SLACK · (1 + |J(x₀)|)`.
pub const SLACK: f64 = 1e-10;
/// Distance within which the inner concave maximizer at `v̂` must land on `v̂₀`.
pub const ARGMAX_TOL: f64 = 1e-8;

const INNER_MAX_ITER: usize = 60;
const INNER_HALVINGS: usize = 30;

// stream tags for the per-check generators
const TAG_PRIMAL_BALL: u64 = 1;
const TAG_DUAL_BALL: u64 = 2;
const TAG_MULTISTART: u64 = 3;
const TAG_DUAL_BOX: u64 = 4;
const TAG_JOINT: u64 = 5;
const TAG_LEGENDRE: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CertifyConfig<T> {
    /// Primal ball radius; default `0.05·(1 + ‖x₀‖₂)`.
    pub r: Option<T>,
    /// `v*` ball radius; default `0.05·(1 + ‖v̂*‖₂)`.
    pub r1: Option<T>,
    /// `v₀*` ball radius; default `0.1·(1 + ‖v̂₀*‖∞)`.
    pub r2: Option<T>,
    pub samples: usize,
    pub seed: u64,
    pub gap_tol: T,
    pub stat_tol: T,
    pub multistart: usize,
    /// Fixed regularization parameter; `None` runs the doubling rule.
    #[serde(rename = "K")]
    pub k: Option<T>,
    pub newton_tol: T,
    pub max_iter: usize,
    pub legendre_samples: usize,
    pub legendre_tol: T,
}

impl<T: Scalar> Default for CertifyConfig<T> {
    fn default() -> Self {
        let newton = NewtonOptions::<T>::default();
        Self {
            r: None,
            r1: None,
            r2: None,
            samples: SAMPLES,
            seed: 0,
            gap_tol: T::lit(GAP_TOL),
            stat_tol: T::lit(STAT_TOL),
            multistart: MULTISTART,
            k: None,
            newton_tol: newton.tol,
            max_iter: newton.max_iter,
            legendre_samples: LEGENDRE_SAMPLES,
            legendre_tol: T::lit(LEGENDRE_TOL),
        }
    }
}

impl<T: Scalar> CertifyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: Option<T>| match v {
            Some(v) if !(v > T::zero() && v.is_finite()) => {
                Err(Error::InvalidArgument { name, message: format!("must be positive, got {v}") })
            }
            _ => Ok(()),
        };
        positive("r", self.r)?;
        positive("r1", self.r1)?;
        positive("r2", self.r2)?;
        positive("K", self.k)?;
        positive("gap_tol", Some(self.gap_tol))?;
        positive("stat_tol", Some(self.stat_tol))?;
        positive("newton_tol", Some(self.newton_tol))?;
        positive("legendre_tol", Some(self.legendre_tol))?;
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions<T> {
        NewtonOptions { tol: self.newton_tol, max_iter: self.max_iter }
    }
}

/// Fully resolved sampling parameters for one dual point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SamplingPlan<T> {
    pub r: T,
    pub r1: T,
    pub r2: T,
    pub samples: usize,
    pub seed: u64,
    pub multistart: usize,
    pub stat_tol: T,
    pub newton_tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> SamplingPlan<T> {
    pub fn resolve(cfg: &CertifyConfig<T>, x0: &[T], dual: &DualPoint<T>) -> Self {
        let five_percent = T::lit(0.05);
        Self {
            r: cfg.r.unwrap_or_else(|| five_percent * (T::one() + norm2(x0))),
            r1: cfg.r1.unwrap_or_else(|| five_percent * (T::one() + norm2(&dual.v_star))),
            r2: cfg.r2.unwrap_or_else(|| default_r2(&dual.v0_star)),
            samples: cfg.samples,
            seed: cfg.seed,
            multistart: cfg.multistart,
            stat_tol: cfg.stat_tol,
            newton_tol: cfg.newton_tol,
            max_iter: cfg.max_iter,
        }
    }

    fn newton(&self) -> NewtonOptions<T> {
        NewtonOptions { tol: self.newton_tol, max_iter: self.max_iter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    Item1LocalMin,
    Item2GlobalMin,
    Item3LocalMax,
    Degenerate,
    Unclassified,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::Item1LocalMin => "item1_local_min",
            CaseLabel::Item2GlobalMin => "item2_global_min",
            CaseLabel::Item3LocalMax => "item3_local_max",
            CaseLabel::Degenerate => "degenerate",
            CaseLabel::Unclassified => "unclassified",
        }
    }
}

/// Outcome of one sampled inequality. `worst_margin` is the smallest signed
/// margin seen (negative means violated); `None` when nothing was checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SamplingRecord<T> {
    pub check: String,
    pub checked: usize,
    pub violations: usize,
    pub skipped: usize,
    pub worst_margin: Option<T>,
}

impl<T: Scalar> SamplingRecord<T> {
    fn from_margins(check: &str, margins: impl IntoIterator<Item = Option<T>>) -> Self {
        let mut rec =
            SamplingRecord { check: check.to_owned(), checked: 0, violations: 0, skipped: 0, worst_margin: None };
        for m in margins {
            match m {
                Some(m) if !m.is_nan() => {
                    rec.checked += 1;
                    if m < T::zero() {
                        rec.violations += 1;
                    }
                    rec.worst_margin = Some(rec.worst_margin.map_or(m, |w: T| w.min(m)));
                }
                _ => rec.skipped += 1,
            }
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CaseEvidence<T> {
    pub records: Vec<SamplingRecord<T>>,
    /// Values of every critical point located by the multistart search.
    pub critical_values: Vec<T>,
}

impl<T: Scalar> CaseEvidence<T> {
    pub fn violations(&self) -> usize {
        self.records.iter().map(|r| r.violations).sum()
    }
}

/// Worst relative errors of the three partial-optimization identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LegendreErrors<T> {
    /// `|J₁(x, v̂₀(x)) − J(x)| / (1 + |J(x)|)`
    pub l1: T,
    /// `‖∂J₁/∂v₀(x, v̂₀(x))‖∞ / (1 + ‖v̂₀(x)‖∞)`
    pub l1_stationarity: T,
    /// `|J₂(x, M x, v₀) − J₁(x, v₀)| / (1 + |J₁|)`
    pub l2: T,
    /// `|J₂((K·I + A)⁻¹(v + f), v, v₀) − J*(v, v₀)| / (1 + |J*|)`
    pub l3: T,
    pub checked: usize,
    pub skipped: usize,
}

impl<T: Scalar> LegendreErrors<T> {
    pub fn worst(&self) -> T {
        self.l1.max(self.l1_stationarity).max(self.l2).max(self.l3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GapReport<T> {
    pub j_primal: T,
    pub j_dual: T,
    pub gap_abs: T,
    pub gap_rel: T,
    /// `‖δJ(x₀)‖₂`
    pub grad_norm: T,
    /// `½‖δJ(x₀)‖² / λ_min(K·I + A)`; the gap equals `½ gᵀ(K·I + A)⁻¹g`
    /// exactly, so it never exceeds this bound.
    pub gap_bound: T,
    /// Set when `x₀` is not numerically stationary.
    pub not_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StationarityReport<T> {
    /// `‖δJ*(v̂*, v̂₀*)‖₂`
    pub residual: T,
    /// `‖δJ(x₀)‖₂ / λ_max(K·I + A)`, a lower bound on `residual`.
    pub lower_bound: T,
    pub grad_norm: T,
}

/// Everything computed at the dual point of a converged critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DualEvidence<T> {
    pub dual: DualPoint<T>,
    pub k_choice: KChoice<T>,
    pub membership: ConeMembership<T>,
    pub j_primal: T,
    pub j_dual: T,
    pub gap_abs: T,
    pub gap_rel: T,
    pub dual_stationarity: T,
    /// `1 + ‖v̂*‖₂ + ‖f‖₂`
    pub stationarity_scale: T,
    pub plan: SamplingPlan<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Certificate<T> {
    pub spec_version: String,
    pub tool_version: String,
    pub instance_digest: String,
    pub x_init: Vec<T>,
    pub config: CertifyConfig<T>,
    pub primal: PrimalPoint<T>,
    #[serde(flatten)]
    pub duality: Option<DualEvidence<T>>,
    pub case_label: CaseLabel,
    pub sampling: Vec<SamplingRecord<T>>,
    pub critical_values: Vec<T>,
    pub legendre: Option<LegendreErrors<T>>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl<T: Scalar> Certificate<T> {
    /// Canonical document: pretty-printed JSON with a trailing newline.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse { field: None, message: e.to_string() })
    }

    pub fn violations(&self) -> usize {
        self.sampling.iter().map(|r| r.violations).sum()
    }
}

fn slack<T: Scalar>(value: T) -> T {
    T::lit(SLACK) * (T::one() + value.abs())
}

fn dual_point_at<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], k: T) -> Result<DualPoint<T>> {
    let v0 = hat_v0(inst, x0)?;
    let v = hat_v(inst, x0, &v0, k)?;
    Ok(DualPoint { v_star: v, v0_star: v0, k })
}

fn shift_extremes<T: Scalar>(inst: &ProblemInstance<T>, k: T) -> (T, T) {
    let mut m = inst.a.clone();
    m.add_diag(k);
    extreme_eigenvalues(&m)
}

/// `J(x₀)` against `J*(v̂*, v̂₀*)` at regularization `K`.
pub fn check_zero_gap<T: Scalar>(inst: &ProblemInstance<T>, x0: &[T], k: T) -> Result<GapReport<T>> {
    let dual = dual_point_at(inst, x0, k)?;
    let j_primal = eval_j(inst, x0)?;
    let j_dual = eval_jstar(inst, &dual.v_star, &dual.v0_star, k)?;
    let grad_norm = norm2(&grad_j(inst, x0)?);
    let gap_abs = (j_primal - j_dual).abs();
    let (shift_min, _) = shift_extremes(inst, k);
    let critical_tol = T::lit(STAT_TOL) * (T::one() + norm2(&inst.f));
    Ok(GapReport {
        j_primal,
        j_dual,
        gap_abs,
        gap_rel: gap_abs / (T::one() + j_primal.abs()),
        grad_norm,
        gap_bound: T::lit(0.5) * grad_norm * grad_norm / shift_min,
        not_critical: grad_norm > critical_tol,
    })
}

/// `‖δJ*‖₂` at the dual point built from `x₀`.
pub fn check_dual_stationarity<T: Scalar>(
    inst: &ProblemInstance<T>,
    x0: &[T],
    k: T,
) -> Result<StationarityReport<T>> {
    let dual = dual_point_at(inst, x0, k)?;
    let (dv, dv0) = grad_jstar(inst, &dual.v_star, &dual.v0_star, k)?;
    let residual = (norm2(&dv).powi(2) + norm2(&dv0).powi(2)).sqrt();
    let grad_norm = norm2(&grad_j(inst, x0)?);
    let (_, shift_max) = shift_extremes(inst, k);
    Ok(StationarityReport { residual, lower_bound: grad_norm / shift_max, grad_norm })
}

/// Result of maximizing `J*(v, ·)` over a ball around a multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSup<T> {
    pub value: T,
    pub argmax: Vec<T>,
    pub iterations: usize,
}

/// Concave Newton ascent on `u ↦ J*(v, u)` from `center`, iterates radially
/// projected onto the `radius`-ball. With `require_estar`, iterates leaving
/// `E*` are rejected. The returned value never falls below the value at
/// `center`.
pub fn inner_sup<T: Scalar>(
    inst: &ProblemInstance<T>,
    v_star: &[T],
    center: &[T],
    radius: T,
    k: T,
    require_estar: bool,
) -> Result<InnerSup<T>> {
    let mut u = center.to_vec();
    let mut value = eval_jstar(inst, v_star, &u, k)?;
    let tiny = T::epsilon() * T::lit(4.0);
    let mut iterations = 0;
    while iterations < INNER_MAX_ITER {
        iterations += 1;
        let (_, g) = grad_jstar(inst, v_star, &u, k)?;
        if norm_inf(&g) == T::zero() {
            break;
        }
        let h = hess_jstar_v0(inst, v_star, &u, k)?;
        let neg_h = h.map(|v| -v);
        let dir = match Cholesky::new(&neg_h) {
            Some(ch) => {
                let dir = ch.solve(&g);
                // half the Newton decrement bounds the remaining ascent
                let decrement = crate::scalar::dot(&g, &dir);
                if decrement <= tiny * (T::one() + value.abs()) {
                    break;
                }
                dir
            }
            None => g.clone(),
        };
        let mut t = T::one();
        let mut moved = false;
        for _ in 0..INNER_HALVINGS {
            let trial: Vec<T> = u.iter().zip(&dir).map(|(&a, &d)| a + t * d).collect();
            let trial = project_to_ball(&trial, center, radius);
            t *= T::lit(0.5);
            if require_estar && !in_estar(inst, &trial, k) {
                continue;
            }
            let Ok(tv) = eval_jstar(inst, v_star, &trial, k) else { continue };
            if tv > value {
                let step = norm2(&sub(&trial, &u));
                value = tv;
                u = trial;
                moved = step > tiny * (T::one() + norm2(&u));
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(InnerSup { value, argmax: u, iterations })
}

fn require_class<T: Scalar>(
    inst: &ProblemInstance<T>,
    x0: &[T],
    want: HessianClass,
    check: &'static str,
) -> Result<()> {
    let class = classify_hessian(&hess_j(inst, x0)?).class;
    if class != want {
        return Err(Error::Precondition {
            check,
            message: format!("Hessian at x0 is {}, expected {}", class.as_str(), want.as_str()),
        });
    }
    Ok(())
}

fn par_margins<T: Scalar, F>(samples: usize, f: F) -> Vec<Option<T>>
where
    F: Fn(u64) -> Option<T> + Sync + Send,
{
    (0..samples as u64).into_par_iter().map(f).collect()
}

/// Local minimum: `J ≥ J(x₀)` on `B_r(x₀)`, the inner sup of `J*` over
/// `B_{r2}(v̂₀*)` stays above `J*(v̂*, v̂₀*)` on `B_{r1}(v̂*)`, and at `v̂*`
/// it equals `J*(v̂*, v̂₀*)` with maximizer `v̂₀*`.
pub fn verify_case1<T: Scalar>(
    inst: &ProblemInstance<T>,
    x0: &[T],
    dual: &DualPoint<T>,
    plan: &SamplingPlan<T>,
) -> Result<CaseEvidence<T>> {
    require_class(inst, x0, HessianClass::PositiveDefinite, "item 1")?;
    let j0 = eval_j(inst, x0)?;
    let jhat = eval_jstar(inst, &dual.v_star, &dual.v0_star, dual.k)?;
    let sl = slack(j0);

    let primal = par_margins(plan.samples, |i| {
        let mut rng = sample_rng(plan.seed, TAG_PRIMAL_BALL, i);
        let x = uniform_in_ball(&mut rng, x0, plan.r);
        eval_j(inst, &x).ok().map(|v| v - (j0 - sl))
    });
    let inf_sup = par_margins(plan.samples, |i| {
        let mut rng = sample_rng(plan.seed, TAG_DUAL_BALL, i);
        let v = uniform_in_ball(&mut rng, &dual.v_star, plan.r1);
        inner_sup(inst, &v, &dual.v0_star, plan.r2, dual.k, false).ok().map(|s| s.value - (jhat - sl))
    });
    let at_hat = inner_sup(inst, &dual.v_star, &dual.v0_star, plan.r2, dual.k, false)?;
    let argmax_dist = norm2(&sub(&at_hat.argmax, &dual.v0_star));

    Ok(CaseEvidence {
        records: vec![
            SamplingRecord::from_margins("primal_ball_min", primal),
            SamplingRecord::from_margins("dual_inf_sup", inf_sup),
            SamplingRecord::from_margins("inner_sup_at_hat", [Some(sl - (at_hat.value - jhat).abs())]),
            SamplingRecord::from_margins("inner_argmax_at_hat", [Some(T::lit(ARGMAX_TOL) - argmax_dist)]),
        ],
        critical_values: Vec::new(),
    })
}

/// Global minimum: multistart Newton finds no lower critical value; over a
/// wide ball of `v*` the inner sup over `B_{r2}(v̂₀*) ∩ E*` stays above
/// `J*(v̂*, v̂₀*)`; and the `v*`-gradient vanishes at `v̂*`.
pub fn verify_case2<T: Scalar>(
    inst: &ProblemInstance<T>,
    x0: &[T],
    dual: &DualPoint<T>,
    plan: &SamplingPlan<T>,
) -> Result<CaseEvidence<T>> {
    let membership = cone_membership(inst, &dual.v0_star, dual.k)?;
    if !membership.in_estar {
        return Err(Error::Precondition {
            check: "item 2",
            message: format!(
                "v0 is not in E* (A+ margin {:e}, B* margin {:e})",
                membership.margin_aplus.as_f64(),
                membership.margin_bstar.as_f64()
            ),
        });
    }
    let j0 = eval_j(inst, x0)?;
    let jhat = eval_jstar(inst, &dual.v_star, &dual.v0_star, dual.k)?;
    let sl = slack(j0);

    let spread = T::one() + norm_inf(x0);
    let starts: Vec<Option<PrimalPoint<T>>> = (0..plan.multistart as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(plan.seed, TAG_MULTISTART, i);
            let init: Vec<T> =
                x0.iter().zip(normal_vec::<T>(&mut rng, x0.len())).map(|(&c, z)| c + spread * z).collect();
            find_critical_point(inst, &init, plan.newton()).ok().filter(|p| p.converged)
        })
        .collect();
    let critical_values: Vec<T> = starts.iter().flatten().map(|p| p.value).collect();
    let multistart = SamplingRecord::from_margins(
        "multistart_critical_values",
        starts.iter().map(|p| p.as_ref().map(|p| p.value - (j0 - sl))),
    );

    let wide = T::lit(10.0) * (T::one() + norm2(&dual.v_star));
    let inf_sup = par_margins(plan.samples, |i| {
        let mut rng = sample_rng(plan.seed, TAG_DUAL_BOX, i);
        let v = uniform_in_ball(&mut rng, &dual.v_star, wide);
        inner_sup(inst, &v, &dual.v0_star, plan.r2, dual.k, true).ok().map(|s| s.value - (jhat - sl))
    });
    let (dv, _) = grad_jstar(inst, &dual.v_star, &dual.v0_star, dual.k)?;

    Ok(CaseEvidence {
        records: vec![
            multistart,
            SamplingRecord::from_margins("dual_inf_sup_wide", inf_sup),
            SamplingRecord::from_margins("v_star_stationarity", [Some(plan.stat_tol - norm2(&dv))]),
        ],
        critical_values,
    })
}

/// Local maximum: `J ≤ J(x₀)` on `B_r(x₀)` and `J* ≤ J*(v̂*, v̂₀*)` on the
/// product ball `B_{r1}(v̂*) × B_{r2}(v̂₀*)`.
pub fn verify_case3<T: Scalar>(
    inst: &ProblemInstance<T>,
    x0: &[T],
    dual: &DualPoint<T>,
    plan: &SamplingPlan<T>,
) -> Result<CaseEvidence<T>> {
    require_class(inst, x0, HessianClass::NegativeDefinite, "item 3")?;
    let membership = cone_membership(inst, &dual.v0_star, dual.k)?;
    if !membership.in_aminus {
        return Err(Error::Precondition {
            check: "item 3",
            message: format!("v0 is not in A- (lambda_max {:e})", membership.margin_aminus.as_f64()),
        });
    }
    let j0 = eval_j(inst, x0)?;
    let jhat = eval_jstar(inst, &dual.v_star, &dual.v0_star, dual.k)?;
    let sl = slack(j0);

    let primal = par_margins(plan.samples, |i| {
        let mut rng = sample_rng(plan.seed, TAG_PRIMAL_BALL, i);
        let x = uniform_in_ball(&mut rng, x0, plan.r);
        eval_j(inst, &x).ok().map(|v| (j0 + sl) - v)
    });
    let joint = par_margins(plan.samples, |i| {
        let mut rng = sample_rng(plan.seed, TAG_JOINT, i);
        let v = uniform_in_ball(&mut rng, &dual.v_star, plan.r1);
        let v0 = uniform_in_ball(&mut rng, &dual.v0_star, plan.r2);
        eval_jstar(inst, &v, &v0, dual.k).ok().map(|s| (jhat + sl) - s)
    });

    Ok(CaseEvidence {
        records: vec![
            SamplingRecord::from_margins("primal_ball_max", primal),
            SamplingRecord::from_margins("dual_joint_sup", joint),
        ],
        critical_values: Vec::new(),
    })
}

fn rel_err<T: Scalar>(a: T, b: T) -> T {
    (a - b).abs() / (T::one() + b.abs())
}

/// Evaluates the three closed-form partial optimizations on
/// `cfg.legendre_samples` random points:
///
/// * L1: `sup_{v₀} J₁(x, v₀)` is attained at `v̂₀(x)` with value `J(x)`;
/// * L2: `inf_v J₂(x, v, v₀)` is attained at `v = M x` with value `J₁(x, v₀)`;
/// * L3: `inf_x J₂(x, v, v₀)` is attained at `x = (K·I + A)⁻¹(v + f)` with
///   value `J*(v, v₀)`.
///
/// For each point `K` is drawn just above the level that makes both
/// resolvents positive definite; points where a factorization still fails
/// are skipped and counted.
pub fn check_legendre_identities<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &CertifyConfig<T>,
) -> Result<LegendreErrors<T>> {
    let n = inst.dim();
    let nt = inst.terms();
    let (_, neg_a_max) = extreme_eigenvalues(&inst.a.map(|v| -v));
    let per_point: Vec<Option<[T; 4]>> = (0..cfg.legendre_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, TAG_LEGENDRE, i);
            let x = normal_vec::<T>(&mut rng, n);
            let v0 = normal_vec::<T>(&mut rng, nt);
            let v = normal_vec::<T>(&mut rng, n);
            let u = T::lit(rand::Rng::random::<f64>(&mut rng));
            let (_, s_max) = extreme_eigenvalues(&inst.weighted_b(&v0));
            let k = T::one() + u + s_max.max(neg_a_max).max(T::zero());
            legendre_point(inst, &x, &v, &v0, k).ok()
        })
        .collect();
    let mut out = LegendreErrors {
        l1: T::zero(),
        l1_stationarity: T::zero(),
        l2: T::zero(),
        l3: T::zero(),
        checked: 0,
        skipped: 0,
    };
    for p in per_point {
        match p {
            Some([a, b, c, d]) => {
                out.checked += 1;
                out.l1 = out.l1.max(a);
                out.l1_stationarity = out.l1_stationarity.max(b);
                out.l2 = out.l2.max(c);
                out.l3 = out.l3.max(d);
            }
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn legendre_point<T: Scalar>(inst: &ProblemInstance<T>, x: &[T], v: &[T], v0: &[T], k: T) -> Result<[T; 4]> {
    let j = eval_j(inst, x)?;
    let touch = hat_v0(inst, x)?;
    let l1 = rel_err(eval_j1(inst, x, &touch)?, j);
    let l1s = norm_inf(&grad_j1_v0(inst, x, &touch)?) / (T::one() + norm_inf(&touch));

    let mx = crate::dual::anchor_matrix(inst, v0, k).mul_vec(x);
    let l2 = rel_err(eval_j2(inst, x, &mx, v0, k)?, eval_j1(inst, x, v0)?);

    let mut shift = inst.a.clone();
    shift.add_diag(k);
    let rhs = crate::scalar::add(v, &inst.f);
    let xs = match Cholesky::new(&shift) {
        Some(ch) => ch.solve(&rhs),
        None => Lu::new(&shift).solve(&rhs),
    };
    let l3 = rel_err(eval_j2(inst, &xs, v, v0, k)?, eval_jstar(inst, v, v0, k)?);
    Ok([l1, l1s, l2, l3])
}

/// Case dispatch from the Hessian class and the cone memberships.
pub fn classify_case<T: Scalar>(class: HessianClass, membership: &ConeMembership<T>) -> CaseLabel {
    match class {
        HessianClass::PositiveDefinite if membership.in_estar => CaseLabel::Item2GlobalMin,
        HessianClass::PositiveDefinite => CaseLabel::Item1LocalMin,
        HessianClass::NegativeDefinite if membership.in_aminus => CaseLabel::Item3LocalMax,
        HessianClass::Degenerate => CaseLabel::Degenerate,
        _ => CaseLabel::Unclassified,
    }
}

/// Runs the whole pipeline from `x_init`: Newton → `v̂₀*` → `K` → `v̂*` →
/// memberships → gap and stationarity → case verification → Legendre
/// identities. Deterministic in `(inst, x_init, cfg)`.
///
/// Solver non-convergence yields a failed certificate, not an error. A
/// caller-supplied `K` that breaks a definiteness precondition is an error.
pub fn certify<T: Scalar>(inst: &ProblemInstance<T>, x_init: &[T], cfg: &CertifyConfig<T>) -> Result<Certificate<T>> {
    cfg.validate()?;
    let report = inst.validate();
    if !report.ok {
        return Err(Error::Invalid(report));
    }
    let primal = find_critical_point(inst, x_init, cfg.newton())?;
    let mut cert = Certificate {
        spec_version: FORMAT_VERSION.to_owned(),
        tool_version: TOOL_VERSION.to_owned(),
        instance_digest: inst.digest()?,
        x_init: x_init.to_vec(),
        config: cfg.clone(),
        primal: primal.clone(),
        duality: None,
        case_label: CaseLabel::Unclassified,
        sampling: Vec::new(),
        critical_values: Vec::new(),
        legendre: None,
        warnings: Vec::new(),
        passed: false,
    };
    if !primal.converged {
        cert.warnings.push(format!(
            "Newton did not converge after {} iterations (|grad J| = {:e})",
            primal.iterations,
            primal.grad_norm.as_f64()
        ));
        return Ok(cert);
    }

    let x0 = &primal.x0;
    let v0 = hat_v0(inst, x0)?;
    let r2 = cfg.r2.unwrap_or_else(|| default_r2(&v0));
    let k_choice = match cfg.k {
        Some(k) => check_k(inst, x0, &v0, k, r2)?,
        None => select_k(inst, x0, &v0, r2)?,
    };
    let k = k_choice.k;
    let dual = dual_point_at(inst, x0, k)?;
    let membership = cone_membership(inst, &dual.v0_star, k)?;
    let gap = check_zero_gap(inst, x0, k)?;
    let stat = check_dual_stationarity(inst, x0, k)?;
    let stationarity_scale = T::one() + norm2(&dual.v_star) + norm2(&inst.f);
    let plan = SamplingPlan::resolve(cfg, x0, &dual);

    let label = classify_case(primal.hessian_class, &membership);
    let evidence = match label {
        CaseLabel::Item1LocalMin => Some(verify_case1(inst, x0, &dual, &plan)?),
        CaseLabel::Item2GlobalMin => Some(verify_case2(inst, x0, &dual, &plan)?),
        CaseLabel::Item3LocalMax => Some(verify_case3(inst, x0, &dual, &plan)?),
        CaseLabel::Degenerate => {
            cert.warnings.push("degenerate Hessian at x0: no extremal case certified".to_owned());
            None
        }
        CaseLabel::Unclassified => {
            cert.warnings.push(format!(
                "Hessian at x0 is {}: no extremal case applies",
                primal.hessian_class.as_str()
            ));
            None
        }
    };
    if primal.hessian_class == HessianClass::PositiveDefinite && !membership.in_estar {
        cert.warnings.push(format!(
            "v0 outside E* (A+ margin {:e}, B* margin {:e}): only the local statement applies",
            membership.margin_aplus.as_f64(),
            membership.margin_bstar.as_f64()
        ));
    }
    let legendre = check_legendre_identities(inst, cfg)?;

    let gap_ok = gap.gap_rel <= cfg.gap_tol;
    let stat_ok = stat.residual <= cfg.stat_tol * stationarity_scale;
    let legendre_ok = legendre.worst() <= cfg.legendre_tol;
    if !gap_ok {
        cert.warnings.push(format!("relative gap {:e} exceeds tolerance", gap.gap_rel.as_f64()));
    }
    if !stat_ok {
        cert.warnings.push(format!("dual stationarity residual {:e} exceeds tolerance", stat.residual.as_f64()));
    }
    if !legendre_ok {
        cert.warnings.push(format!("Legendre identity error {:e} exceeds tolerance", legendre.worst().as_f64()));
    }
    let evidence = evidence.unwrap_or_default();
    let violations = evidence.violations();
    if violations > 0 {
        cert.warnings.push(format!("{violations} sampled violations for {}", label.as_str()));
    }

    cert.passed = gap_ok && stat_ok && legendre_ok && violations == 0;
    cert.case_label = label;
    cert.sampling = evidence.records;
    cert.critical_values = evidence.critical_values;
    cert.legendre = Some(legendre);
    cert.duality = Some(DualEvidence {
        dual,
        k_choice,
        membership,
        j_primal: gap.j_primal,
        j_dual: gap.j_dual,
        gap_abs: gap.gap_abs,
        gap_rel: gap.gap_rel,
        dual_stationarity: stat.residual,
        stationarity_scale,
        plan,
    });
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{double_well, single_well};

    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn quick_cfg() -> CertifyConfig<f64> {
        CertifyConfig { samples: 500, multistart: 8, ..CertifyConfig::default() }
    }

    fn plan_for(inst: &ProblemInstance<f64>, x0: &[f64], cfg: &CertifyConfig<f64>) -> (DualPoint<f64>, SamplingPlan<f64>) {
        let v0 = hat_v0(inst, x0).unwrap();
        let k = select_k(inst, x0, &v0, default_r2(&v0)).unwrap().k;
        let dual = dual_point_at(inst, x0, k).unwrap();
        let plan = SamplingPlan::resolve(cfg, x0, &dual);
        (dual, plan)
    }

    #[test]
    fn gap_vanishes_at_reference_critical_points() {
        let a = double_well::<f64>();
        for x in [0.0, INV_SQRT2, -INV_SQRT2] {
            let g = check_zero_gap(&a, &[x], 10.0).unwrap();
            assert!(g.gap_abs <= 1e-14, "x = {x}: {}", g.gap_abs);
            assert!(!g.not_critical);
        }
        let g = check_zero_gap(&a, &[0.0], 10.0).unwrap();
        assert_eq!((g.j_primal, g.j_dual), (0.5, 0.5));
    }

    #[test]
    fn gap_off_critical_matches_closed_form() {
        // gap = ½ g²/(K + 1) with g = x(2x² − 1)
        let a = double_well::<f64>();
        let g = check_zero_gap(&a, &[0.3], 10.0).unwrap();
        let grad = 0.3 * (2.0 * 0.09 - 1.0);
        assert!((g.gap_abs - 0.5 * grad * grad / 11.0).abs() < 1e-15);
        assert!(g.gap_abs > 2.7e-3);
        assert!(g.not_critical);
        assert!(g.gap_abs <= g.gap_bound * (1.0 + 1e-12));
    }

    #[test]
    fn stationarity_reference_and_off_critical() {
        let b = single_well::<f64>();
        let k = select_k(&b, &[0.0], &[1.0], default_r2(&[1.0])).unwrap().k;
        assert!(check_dual_stationarity(&b, &[0.0], k).unwrap().residual <= 1e-12);

        let a = double_well::<f64>();
        let s = check_dual_stationarity(&a, &[0.3], 10.0).unwrap();
        assert!(s.residual >= s.lower_bound * (1.0 - 1e-12));
        assert!(s.lower_bound > 0.0);
    }

    #[test]
    fn case1_on_double_well() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[INV_SQRT2], &cfg);
        let ev = verify_case1(&a, &[INV_SQRT2], &dual, &plan).unwrap();
        assert_eq!(ev.violations(), 0, "{:?}", ev.records);
        assert!(ev.records.iter().all(|r| r.checked > 0));
    }

    #[test]
    fn case1_rejects_non_pd_hessian() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[0.0], &cfg);
        assert!(matches!(verify_case1(&a, &[0.0], &dual, &plan), Err(Error::Precondition { .. })));
    }

    #[test]
    fn case2_precondition_fails_on_double_well() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[INV_SQRT2], &cfg);
        assert!(matches!(verify_case2(&a, &[INV_SQRT2], &dual, &plan), Err(Error::Precondition { .. })));
    }

    #[test]
    fn case2_on_single_well() {
        let b = single_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&b, &[0.0], &cfg);
        let ev = verify_case2(&b, &[0.0], &dual, &plan).unwrap();
        assert_eq!(ev.violations(), 0, "{:?}", ev.records);
        assert!(!ev.critical_values.is_empty());
        assert!(ev.critical_values.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn case3_on_double_well_and_locality() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[0.0], &cfg);
        assert_eq!(verify_case3(&a, &[0.0], &dual, &plan).unwrap().violations(), 0);
        let wide = SamplingPlan { r: 2.0, ..plan };
        let ev = verify_case3(&a, &[0.0], &dual, &wide).unwrap();
        assert!(ev.records[0].violations > 0);
        assert!(ev.records[0].worst_margin.unwrap() < 0.0);
    }

    #[test]
    fn case3_rejects_pd_hessian() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[INV_SQRT2], &cfg);
        assert!(verify_case3(&a, &[INV_SQRT2], &dual, &plan).is_err());
    }

    #[test]
    fn inner_sup_at_hat_returns_hat() {
        let a = double_well::<f64>();
        let cfg = quick_cfg();
        let (dual, plan) = plan_for(&a, &[INV_SQRT2], &cfg);
        let s = inner_sup(&a, &dual.v_star, &dual.v0_star, plan.r2, dual.k, false).unwrap();
        assert!((s.argmax[0] - dual.v0_star[0]).abs() < ARGMAX_TOL);
    }

    #[test]
    fn legendre_on_double_well() {
        let cfg = CertifyConfig { legendre_samples: 100, ..CertifyConfig::<f64>::default() };
        let e = check_legendre_identities(&double_well::<f64>(), &cfg).unwrap();
        assert_eq!(e.checked, 100);
        assert!(e.worst() <= 1e-10, "{e:?}");
    }

    #[test]
    fn legendre_with_vanishing_quartic_terms() {
        let mut inst = single_well::<f64>();
        inst.b[0] = crate::linalg::Matrix::zeros(1, 1);
        let e = check_legendre_identities(&inst, &CertifyConfig::default()).unwrap();
        assert!(e.l2 <= 1e-14 && e.l3 <= 1e-14, "{e:?}");
    }

    #[test]
    fn certify_reference_cases() {
        let cfg = quick_cfg();
        let a = double_well::<f64>();
        let c = certify(&a, &[0.6], &cfg).unwrap();
        assert_eq!(c.case_label, CaseLabel::Item1LocalMin);
        assert!(c.passed, "{:?}", c.warnings);
        assert!(c.duality.as_ref().unwrap().gap_rel <= 1e-12);

        let c = certify(&a, &[0.0], &cfg).unwrap();
        assert_eq!(c.case_label, CaseLabel::Item3LocalMax);
        assert!(c.passed, "{:?}", c.warnings);

        let c = certify(&single_well::<f64>(), &[0.7], &cfg).unwrap();
        assert_eq!(c.case_label, CaseLabel::Item2GlobalMin);
        assert!(c.passed, "{:?}", c.warnings);
    }

    #[test]
    fn certify_reports_non_convergence() {
        let cfg = CertifyConfig { max_iter: 1, ..quick_cfg() };
        let c = certify(&double_well::<f64>(), &[5.0], &cfg).unwrap();
        assert!(!c.passed);
        assert!(c.duality.is_none());
        assert!(!c.warnings.is_empty());
    }

    #[test]
    fn certificate_document_round_trips() {
        let c = certify(&double_well::<f64>(), &[0.6], &quick_cfg()).unwrap();
        let bytes = c.to_bytes().unwrap();
        let back = Certificate::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn dispatch_rules() {
        let m = |estar, aminus| ConeMembership {
            in_bstar: estar,
            margin_bstar: 0.0,
            in_aplus: estar,
            margin_aplus: 0.0,
            in_aminus: aminus,
            margin_aminus: 0.0,
            in_estar: estar,
            m_pd: true,
            margin_m: 1.0,
        };
        use HessianClass::*;
        assert_eq!(classify_case(PositiveDefinite, &m(true, false)), CaseLabel::Item2GlobalMin);
        assert_eq!(classify_case(PositiveDefinite, &m(false, false)), CaseLabel::Item1LocalMin);
        assert_eq!(classify_case(NegativeDefinite, &m(false, true)), CaseLabel::Item3LocalMax);
        assert_eq!(classify_case(NegativeDefinite, &m(false, false)), CaseLabel::Unclassified);
        assert_eq!(classify_case(Indefinite, &m(true, true)), CaseLabel::Unclassified);
        assert_eq!(classify_case(Degenerate, &m(true, false)), CaseLabel::Degenerate);
    }
}
