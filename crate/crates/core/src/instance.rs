//! Problem instances `(A, {B_j}, {γ_j}, {c_j}, f)`: validation, the canonical
//! JSON document, and seeded random generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalues, sym_norm2, Matrix};
use crate::scalar::Scalar;

/// Relative symmetry tolerance: `‖M − Mᵀ‖_max ≤ SYM_TOL · max(1, ‖M‖_max)`.
pub const SYM_TOL: f64 = 1e-12;

/// The functional `J(x) = ½xᵀAx + Σ_j (γ_j/2)(½xᵀB_jx + c_j)² − fᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    pub a: Matrix<T>,
    pub b: Vec<Matrix<T>>,
    pub gamma: Vec<T>,
    pub c: Vec<T>,
    pub f: Vec<T>,
    pub name: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub description: String,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, field: impl Into<String>, description: impl Into<String>, measured: f64) {
        self.violations.push(Violation {
            field: field.into(),
            description: description.into(),
            measured,
        });
        self.ok = false;
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {} (measured {})", v.field, v.description, v.measured)?;
        }
        Ok(())
    }
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(a: Matrix<T>, b: Vec<Matrix<T>>, gamma: Vec<T>, c: Vec<T>, f: Vec<T>) -> Self {
        Self { a, b, gamma, c, f, name: None, seed: None }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Primal dimension `n`.
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Number of quartic terms `N`.
    pub fn terms(&self) -> usize {
        self.b.len()
    }

    /// `Σ_j w_j B_j`
    pub fn weighted_b(&self, w: &[T]) -> Matrix<T> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (bj, &wj) in self.b.iter().zip(w) {
            out.add_scaled(wj, bj);
        }
        out
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { what: "x", expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn check_multiplier(&self, v0: &[T]) -> Result<()> {
        if v0.len() != self.terms() {
            return Err(Error::DimensionMismatch { what: "v0", expected: self.terms(), found: v0.len() });
        }
        Ok(())
    }

    /// Reports every violated structural assumption. Nothing is repaired.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport { ok: true, violations: Vec::new() };
        let n = self.a.rows();
        let nt = self.b.len();
        if n == 0 {
            report.push("n", "primal dimension must be at least 1", 0.0);
        }
        if nt == 0 {
            report.push("N", "number of quartic terms must be at least 1", 0.0);
        }
        if !self.a.is_square() {
            report.push("A", format!("must be square, got {}x{}", self.a.rows(), self.a.cols()), self.a.cols() as f64);
        }
        check_symmetric(&mut report, "A", &self.a);
        for (j, bj) in self.b.iter().enumerate() {
            let field = format!("B[{j}]");
            if bj.rows() != n || bj.cols() != n {
                report.push(&field, format!("must be {n}x{n}, got {}x{}", bj.rows(), bj.cols()), bj.rows() as f64);
                continue;
            }
            check_symmetric(&mut report, &field, bj);
        }
        if self.gamma.len() != nt {
            report.push("gamma", format!("expected {nt} entries"), self.gamma.len() as f64);
        }
        if self.c.len() != nt {
            report.push("c", format!("expected {nt} entries"), self.c.len() as f64);
        }
        if self.f.len() != n {
            report.push("f", format!("expected {n} entries"), self.f.len() as f64);
        }
        for (j, &g) in self.gamma.iter().enumerate() {
            if g <= T::zero() || !g.is_finite() {
                report.push(format!("gamma[{j}]"), "must be positive and finite", g.as_f64());
            }
        }
        for (j, &cj) in self.c.iter().enumerate() {
            if !cj.is_finite() {
                report.push(format!("c[{j}]"), "must be finite", cj.as_f64());
            }
        }
        if let Some(bad) = self.f.iter().find(|v| !v.is_finite()) {
            report.push("f", "entries must be finite", bad.as_f64());
        }
        report
    }

    /// Content hash (SHA-256, lowercase hex) of the canonical document.
    pub fn digest(&self) -> Result<String> {
        Ok(digest_bytes(&save_instance(self)?))
    }
}

fn check_symmetric<T: Scalar>(report: &mut ValidationReport, field: &str, m: &Matrix<T>) {
    if !m.is_finite() {
        report.push(field, "entries must be finite", f64::NAN);
        return;
    }
    if !m.is_square() {
        return;
    }
    let asym = m.asymmetry().as_f64();
    let tol = SYM_TOL * m.max_abs().as_f64().max(1.0);
    if asym > tol {
        report.push(field, format!("not symmetric: max |M - M^T| exceeds {tol:e}"), asym);
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// On-disk layout. Field order here is the canonical key order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct InstanceDoc<T> {
    n: usize,
    N: usize,
    A: Vec<Vec<T>>,
    B: Vec<Vec<Vec<T>>>,
    gamma: Vec<T>,
    c: Vec<T>,
    f: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn parse_error(field: &str, message: impl Into<String>) -> Error {
    Error::Parse { field: Some(field.to_owned()), message: message.into() }
}

/// Parses an instance document. With `strict`, the instance must also pass
/// [`ProblemInstance::validate`].
pub fn load_instance<T: Scalar>(source: &[u8], strict: bool) -> Result<ProblemInstance<T>> {
    let doc: InstanceDoc<T> = serde_json::from_slice(source).map_err(|e| {
        let message = e.to_string();
        // serde reports "missing field `f`" / "unknown field `x`"
        let field = message.split('`').nth(1).map(str::to_owned);
        Error::Parse { field, message }
    })?;
    let a = Matrix::from_rows(&doc.A).ok_or_else(|| parse_error("A", "ragged rows"))?;
    if a.rows() != doc.n {
        return Err(parse_error("A", format!("has {} rows but n = {}", a.rows(), doc.n)));
    }
    let b = doc
        .B
        .iter()
        .enumerate()
        .map(|(j, rows)| Matrix::from_rows(rows).ok_or_else(|| parse_error(&format!("B[{j}]"), "ragged rows")))
        .collect::<Result<Vec<_>>>()?;
    if b.len() != doc.N {
        return Err(parse_error("B", format!("has {} matrices but N = {}", b.len(), doc.N)));
    }
    let inst = ProblemInstance { a, b, gamma: doc.gamma, c: doc.c, f: doc.f, name: doc.name, seed: doc.seed };
    if strict {
        let report = inst.validate();
        if !report.ok {
            return Err(Error::Invalid(report));
        }
    }
    Ok(inst)
}

/// Canonical document: fixed key order, shortest round-trip floats, one
/// trailing newline.
pub fn save_instance<T: Scalar>(inst: &ProblemInstance<T>) -> Result<Vec<u8>> {
    let doc = InstanceDoc {
        n: inst.dim(),
        N: inst.terms(),
        A: inst.a.to_rows(),
        B: inst.b.iter().map(Matrix::to_rows).collect(),
        gamma: inst.gamma.clone(),
        c: inst.c.clone(),
        f: inst.f.clone(),
        name: inst.name.clone(),
        seed: inst.seed,
    };
    let mut out = serde_json::to_vec(&doc)?;
    out.push(b'\n');
    Ok(out)
}

/// Which regime the random generator should lean towards. The bias is
/// best-effort; only a certificate decides the actual case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTarget {
    ConvexAtRoot,
    GlobalMin,
    LocalMax,
    Unbiased,
}

impl CaseTarget {
    pub const ALL: [CaseTarget; 4] =
        [CaseTarget::ConvexAtRoot, CaseTarget::GlobalMin, CaseTarget::LocalMax, CaseTarget::Unbiased];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTarget::ConvexAtRoot => "convex_at_root",
            CaseTarget::GlobalMin => "global_min",
            CaseTarget::LocalMax => "local_max",
            CaseTarget::Unbiased => "unbiased",
        }
    }
}

impl fmt::Display for CaseTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseTarget::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| Error::InvalidArgument {
            name: "case",
            message: format!("unknown case target `{s}` (expected convex_at_root, global_min, local_max or unbiased)"),
        })
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Matrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// Seeded random instance. Matrices are `(G + Gᵀ)/2` with standard normal
/// `G`, `γ_j ~ U(0.5, 2)`, `c_j ~ U(−1, 1)`, `f ~ N(0, I)`, and then the
/// `target` adjustments are applied:
///
/// * `global_min`: `c_j ~ U(0.1, 1)`, `A` shifted so that
///   `λ_min(A) ≥ 1 + Σ_j γ_j c_j ‖B_j‖₂`, and `f` scaled by 0.1;
/// * `convex_at_root`: `A` shifted so that `λ_min(A + Σ γ_j c_j B_j) ≥ 1`,
///   `f` scaled by 0.1;
/// * `local_max`: `A` shifted so that `λ_max(A + Σ γ_j c_j B_j) ≤ −1`,
///   `f` scaled by 0.1.
pub fn generate_random<T: Scalar>(seed: u64, n: usize, terms: usize, target: CaseTarget) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument { name: "n", message: "must be at least 1".into() });
    }
    if terms == 0 {
        return Err(Error::InvalidArgument { name: "N", message: "must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = random_symmetric(&mut rng, n);
    let b: Vec<Matrix<f64>> = (0..terms).map(|_| random_symmetric(&mut rng, n)).collect();
    let gamma_dist = Uniform::new(0.5, 2.0).expect("valid range");
    let gamma: Vec<f64> = (0..terms).map(|_| gamma_dist.sample(&mut rng)).collect();
    let c_dist = match target {
        CaseTarget::GlobalMin => Uniform::new(0.1, 1.0),
        _ => Uniform::new(-1.0, 1.0),
    }
    .expect("valid range");
    let c: Vec<f64> = (0..terms).map(|_| c_dist.sample(&mut rng)).collect();
    let mut f: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

    let root_hessian = |a: &Matrix<f64>| {
        let mut h = a.clone();
        for j in 0..terms {
            h.add_scaled(gamma[j] * c[j], &b[j]);
        }
        h
    };
    match target {
        CaseTarget::Unbiased => {}
        CaseTarget::GlobalMin => {
            let spread: f64 = (0..terms).map(|j| gamma[j] * c[j] * sym_norm2(&b[j])).sum();
            let (lo, _) = extreme_eigenvalues(&a);
            a.add_diag(1.0 + spread - lo);
        }
        CaseTarget::ConvexAtRoot => {
            let (lo, _) = extreme_eigenvalues(&root_hessian(&a));
            if lo < 1.0 {
                a.add_diag(1.0 - lo);
            }
        }
        CaseTarget::LocalMax => {
            let (_, hi) = extreme_eigenvalues(&root_hessian(&a));
            if hi > -1.0 {
                a.add_diag(-1.0 - hi);
            }
        }
    }
    if target != CaseTarget::Unbiased {
        f.iter_mut().for_each(|v| *v *= 0.1);
    }

    let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    Ok(ProblemInstance {
        a: a.cast(),
        b: b.iter().map(Matrix::cast).collect(),
        gamma: cast(&gamma),
        c: cast(&c),
        f: cast(&f),
        name: Some(format!("random-{target}-n{n}-N{terms}-s{seed}")),
        seed: Some(seed),
    })
}

/// Double well: `A = [1]`, `B₁ = [2]`, `γ₁ = 1`, `c₁ = −1`, `f = 0`.
/// Critical points at `0` (local max, `J = 0.5`) and `±1/√2` (`J = 0.375`).
pub fn double_well<T: Scalar>() -> ProblemInstance<T> {
    scalar_instance(T::one(), T::lit(2.0), T::one(), -T::one(), T::zero()).with_name("double-well")
}

/// Single well: same as [`double_well`] with `c₁ = +1`; unique critical
/// point `0` with `J = 0.5`.
pub fn single_well<T: Scalar>() -> ProblemInstance<T> {
    scalar_instance(T::one(), T::lit(2.0), T::one(), T::one(), T::zero()).with_name("single-well")
}

/// One-dimensional instance with a single quartic term.
pub fn scalar_instance<T: Scalar>(a: T, b: T, gamma: T, c: T, f: T) -> ProblemInstance<T> {
    ProblemInstance::new(
        Matrix::from_diag(&[a]),
        vec![Matrix::from_diag(&[b])],
        vec![gamma],
        vec![c],
        vec![f],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_instance_is_valid() {
        let r = double_well::<f64>().validate();
        assert!(r.ok, "{r}");
        assert!(r.violations.is_empty());
    }

    #[test]
    fn zero_gamma_is_reported() {
        let mut inst = double_well::<f64>();
        inst.gamma[0] = 0.0;
        let r = inst.validate();
        assert!(!r.ok);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "gamma[0]");
    }

    #[test]
    fn asymmetric_a_is_reported_with_measured_gap() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let inst = ProblemInstance::new(a, vec![Matrix::identity(2)], vec![1.0], vec![0.0], vec![0.0, 0.0]);
        let r = inst.validate();
        assert!(!r.ok);
        let v = r.violations.iter().find(|v| v.field == "A").unwrap();
        assert_eq!(v.measured, 1.0);
    }

    #[test]
    fn dimension_mismatches_are_reported() {
        let mut inst = double_well::<f64>();
        inst.f.push(1.0);
        inst.c.clear();
        let r = inst.validate();
        let fields: Vec<_> = r.violations.iter().map(|v| v.field.as_str()).collect();
        assert!(fields.contains(&"f"));
        assert!(fields.contains(&"c"));
    }

    #[test]
    fn load_double_well_document() {
        let doc = br#"{"n":1,"N":1,"A":[[1.0]],"B":[[[2.0]]],"gamma":[1.0],"c":[-1.0],"f":[0.0]}"#;
        let inst: ProblemInstance<f64> = load_instance(doc, true).unwrap();
        assert_eq!(inst.dim(), 1);
        assert_eq!(inst.terms(), 1);
        assert_eq!(inst, double_well::<f64>().clone_without_name());
    }

    #[test]
    fn missing_field_is_named() {
        let doc = br#"{"n":1,"N":1,"A":[[1.0]],"B":[[[2.0]]],"gamma":[1.0],"c":[-1.0]}"#;
        match load_instance::<f64>(doc, true) {
            Err(Error::Parse { field, .. }) => assert_eq!(field.as_deref(), Some("f")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn strict_load_rejects_invalid_and_lenient_accepts() {
        let doc = br#"{"n":1,"N":1,"A":[[1.0]],"B":[[[2.0]]],"gamma":[0.0],"c":[-1.0],"f":[0.0]}"#;
        assert!(matches!(load_instance::<f64>(doc, true), Err(Error::Invalid(_))));
        assert!(load_instance::<f64>(doc, false).is_ok());
    }

    #[test]
    fn ragged_matrix_is_a_parse_error() {
        let doc = br#"{"n":2,"N":1,"A":[[1.0,0.0],[0.0]],"B":[[[2.0,0.0],[0.0,1.0]]],"gamma":[1.0],"c":[-1.0],"f":[0.0,0.0]}"#;
        match load_instance::<f64>(doc, true) {
            Err(Error::Parse { field, .. }) => assert_eq!(field.as_deref(), Some("A")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_bytes_are_stable() {
        let inst = double_well::<f64>();
        let first = save_instance(&inst).unwrap();
        assert_eq!(first, save_instance(&inst).unwrap());
        assert_eq!(
            std::str::from_utf8(&first).unwrap(),
            "{\"n\":1,\"N\":1,\"A\":[[1.0]],\"B\":[[[2.0]]],\"gamma\":[1.0],\"c\":[-1.0],\"f\":[0.0],\"name\":\"double-well\"}\n"
        );
        let back: ProblemInstance<f64> = load_instance(&first, true).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let a: ProblemInstance<f64> = generate_random(7, 3, 2, CaseTarget::Unbiased).unwrap();
        let b: ProblemInstance<f64> = generate_random(7, 3, 2, CaseTarget::Unbiased).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().ok);
        assert_eq!((a.dim(), a.terms()), (3, 2));
        let c: ProblemInstance<f64> = generate_random(8, 3, 2, CaseTarget::Unbiased).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn global_min_target_forces_pd_a_and_positive_c() {
        let inst: ProblemInstance<f64> = generate_random(1, 4, 2, CaseTarget::GlobalMin).unwrap();
        let (lo, _) = extreme_eigenvalues(&inst.a);
        assert!(lo > 0.0);
        assert!(inst.c.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn root_hessian_targets() {
        for seed in 0..20 {
            for (target, want_pd) in [(CaseTarget::ConvexAtRoot, true), (CaseTarget::LocalMax, false)] {
                let inst: ProblemInstance<f64> = generate_random(seed, 3, 2, target).unwrap();
                let w: Vec<f64> = inst.gamma.iter().zip(&inst.c).map(|(g, c)| g * c).collect();
                let mut h = inst.weighted_b(&w);
                h.add_scaled(1.0, &inst.a);
                let (lo, hi) = extreme_eigenvalues(&h);
                if want_pd {
                    assert!(lo >= 1.0 - 1e-9, "{target} seed {seed}: {lo}");
                } else {
                    assert!(hi <= -1.0 + 1e-9, "{target} seed {seed}: {hi}");
                }
            }
        }
    }

    #[test]
    fn generator_rejects_empty_dimensions() {
        assert!(matches!(
            generate_random::<f64>(0, 0, 1, CaseTarget::Unbiased),
            Err(Error::InvalidArgument { name: "n", .. })
        ));
        assert!(matches!(
            generate_random::<f64>(0, 2, 0, CaseTarget::Unbiased),
            Err(Error::InvalidArgument { name: "N", .. })
        ));
    }

    #[test]
    fn case_target_parses() {
        for t in CaseTarget::ALL {
            assert_eq!(t.as_str().parse::<CaseTarget>().unwrap(), t);
        }
        assert!("saddle".parse::<CaseTarget>().is_err());
    }

    impl ProblemInstance<f64> {
        fn clone_without_name(&self) -> Self {
            Self { name: None, seed: None, ..self.clone() }
        }
    }
}
