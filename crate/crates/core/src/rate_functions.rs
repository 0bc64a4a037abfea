//! Closed-form rate functions and limit cumulants for the four model
//! families, each living next to a constructor of the equivalent numerical
//! conjugate problem so formula and generic engine can always be checked
//! against each other.
//!
//! Families of limit cumulants Λ (all vanish at θ = 0, all convex):
//!
//! | family             | Λ(θ)                                     |
//! |--------------------|------------------------------------------|
//! | `ImmLd`            | f_ν(κ_S(θ)), f_ν(y) = y^{1/ν}·1_{y≥0}    |
//! | `ImmMdCentered`    | (⟨θ,Qθ⟩/2)^{1/ν}                         |
//! | `ImmMdDrift`       | (⟨θ,m⟩)^{1/ν}·1_{⟨θ,m⟩≥0}                |
//! | `LevyLd`           | κ_V(κ_S(θ))                              |
//! | `LevyMd`           | κ_V′(0)·κ_S(θ)                           |
//! | `PoissonLd`        | log(1 + p(G(θ) − 1))                     |
//! | `PoissonMd`        | λ(G(θ) − 1)                              |
//! | `GaussMd`          | ⟨θ, Hκ_X(0) θ⟩/2                         |

use std::sync::Arc;

use thiserror::Error;

use crate::legendre::{ConjugateProblem, FiberChart};
use crate::levy_models::{CumulantSpec, JumpMixture, SubordinatorModel};
use crate::linalg::{dot, norm, Matrix};

#[derive(Debug, Error)]
pub enum RateError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// f_ν(y) = y^{1/ν} for y ≥ 0, else 0; +∞ maps to +∞.
pub fn f_nu(y: f64, nu: f64) -> f64 {
    if y >= 0.0 {
        y.powf(1.0 / nu)
    } else {
        0.0
    }
}

/// One-dimensional drift-case rate:
/// H_ν(x; m) = (ν^{ν/(1−ν)} − ν^{1/(1−ν)}) (x/m)^{1/(1−ν)} if x/m ≥ 0, else +∞.
pub fn h_nu(x: f64, m: f64, nu: f64) -> f64 {
    assert!(m != 0.0, "h_nu requires a nonzero drift");
    assert!(nu > 0.0 && nu < 1.0);
    let ratio = x / m;
    if ratio < 0.0 {
        return f64::INFINITY;
    }
    let c = nu.powf(nu / (1.0 - nu)) - nu.powf(1.0 / (1.0 - nu));
    c * ratio.powf(1.0 / (1.0 - nu))
}

/// One-dimensional centered rate for the inverse stable clock:
/// ((ν/2)^{ν/(2−ν)} − (ν/2)^{2/(2−ν)}) (2x²/q)^{1/(2−ν)}.
///
/// ν = 1 is accepted and collapses to the classical quadratic x²/(2q).
pub fn imm_md_centered_1d(x: f64, q: f64, nu: f64) -> f64 {
    assert!(q > 0.0);
    assert!(nu > 0.0 && nu <= 1.0);
    let half_nu = 0.5 * nu;
    let c = half_nu.powf(nu / (2.0 - nu)) - half_nu.powf(2.0 / (2.0 - nu));
    c * (2.0 * x * x / q).powf(1.0 / (2.0 - nu))
}

/// Which of the drift-case classifications applies at x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplicitCase {
    /// Some coordinate has x_i m_i < 0 — rate is +∞.
    OppositeSign,
    /// Some coordinate has m_i = 0 but x_i ≠ 0 — rate is +∞.
    NullComponent,
    /// x = c·m with c ≥ 0 — rate is H_ν(c; 1).
    Ray { c: f64 },
    /// None of the closed-form cases; fall back to the numeric conjugate.
    Unclassified,
}

/// Classifies x against the drift vector m and returns the closed-form value
/// where one exists; `Unclassified` carries NAN and the caller switches to
/// the conjugate engine.
pub fn imm_md_explicit_cases(x: &[f64], m: &[f64], nu: f64) -> (f64, ExplicitCase) {
    assert_eq!(x.len(), m.len());
    assert!(m.iter().any(|&v| v != 0.0), "drift vector must be nonzero");
    let tol = 1e-12;
    if x.iter().zip(m).any(|(&xi, &mi)| xi * mi < -tol) {
        return (f64::INFINITY, ExplicitCase::OppositeSign);
    }
    if x.iter()
        .zip(m)
        .any(|(&xi, &mi)| mi.abs() <= tol && xi.abs() > tol)
    {
        return (f64::INFINITY, ExplicitCase::NullComponent);
    }
    let c = dot(x, m) / dot(m, m);
    if c >= 0.0 {
        let residual: f64 = x
            .iter()
            .zip(m)
            .map(|(&xi, &mi)| (xi - c * mi) * (xi - c * mi))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-9 * norm(m) {
            return (h_nu(c, 1.0, nu), ExplicitCase::Ray { c });
        }
    }
    (f64::NAN, ExplicitCase::Unclassified)
}

/// Binomial-to-Poisson pair of closed-form rates for G(θ) = e^θ, h = 1:
///
/// I_LD(x) = x log(x/p) + (1−x) log((1−x)/(1−p)) on [0,1], +∞ outside;
/// I_MD(x) = x log(x/p) − x + p on x ≥ 0, +∞ outside (0·log 0 := 0).
pub fn binomial_poisson_rates(x: f64, p: f64) -> (f64, f64) {
    assert!(p > 0.0 && p < 1.0);
    let xlogx = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    let ld = if (0.0..=1.0).contains(&x) {
        xlogx(x, p) + xlogx(1.0 - x, 1.0 - p)
    } else {
        f64::INFINITY
    };
    let md = if x >= 0.0 {
        xlogx(x, p) - x + p
    } else {
        f64::INFINITY
    };
    (ld, md)
}

/// Centered Gaussian rate ⟨x, H⁻¹x⟩/2 for an invertible covariance H.
pub fn gaussian_quadratic_rate(x: &[f64], hess: &Matrix) -> Result<f64, RateError> {
    let sol = hess.solve(x)?;
    Ok(0.5 * dot(x, &sol))
}

// ---------------------------------------------------------------------------
// Skew-limit rate
// ---------------------------------------------------------------------------

/// Parameters of the skew transform: Ψ (order h−1, positive definite) and
/// δ ∈ (−1,1)^{h−1}. Derived coordinates:
/// a^{(y,δ)}_j = y_j/√(1−δ_j²) and b^{(δ)}_j = δ_j/√(1−δ_j²).
#[derive(Debug, Clone)]
pub struct SkewParams {
    pub psi: Matrix,
    pub delta: Vec<f64>,
    psi_inv: Matrix,
}

impl SkewParams {
    pub fn new(psi: Matrix, delta: Vec<f64>) -> Result<Self, RateError> {
        if psi.dim() != delta.len() {
            return Err(RateError::InvalidParameter(
                "psi order and delta length differ".into(),
            ));
        }
        if delta.iter().any(|d| d.abs() >= 1.0) {
            return Err(RateError::InvalidParameter(
                "every delta component must lie in (−1,1)".into(),
            ));
        }
        psi.cholesky()
            .map_err(|_| RateError::InvalidParameter("psi must be positive definite".into()))?;
        let psi_inv = psi.inverse()?;
        Ok(SkewParams {
            psi,
            delta,
            psi_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    pub fn a_vec(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.delta)
            .map(|(yj, dj)| yj / (1.0 - dj * dj).sqrt())
            .collect()
    }

    pub fn b_vec(&self) -> Vec<f64> {
        self.delta
            .iter()
            .map(|dj| dj / (1.0 - dj * dj).sqrt())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewBranch {
    /// ⟨a, Ψ⁻¹b⟩ ≤ 0: the half-line infimum sits at x_h = 0.
    CrossTermNonPositive,
    /// ⟨a, Ψ⁻¹b⟩ > 0: the infimum sits at the interior minimizer x̂_h.
    CrossTermPositive,
}

#[derive(Debug, Clone)]
pub struct SkewRate {
    pub value: f64,
    pub branch: SkewBranch,
    /// The minimizing |x_h| (0 on the first branch).
    pub minimizer_xh: f64,
}

/// Two-branch closed form of the skew moderate-deviation rate:
/// ½⟨a,Ψ⁻¹a⟩ when ⟨a,Ψ⁻¹b⟩ ≤ 0, else
/// ½{⟨a,Ψ⁻¹a⟩ − ⟨a,Ψ⁻¹b⟩²/(⟨b,Ψ⁻¹b⟩+1)} attained at
/// x̂_h = ⟨a,Ψ⁻¹b⟩/(⟨b,Ψ⁻¹b⟩+1).
pub fn skew_md_rate(y: &[f64], params: &SkewParams) -> Result<SkewRate, RateError> {
    if y.len() != params.dim() {
        return Err(RateError::InvalidParameter(
            "target dimension must match delta".into(),
        ));
    }
    let a = params.a_vec(y);
    let b = params.b_vec();
    let aa = params.psi_inv.bilinear(&a, &a);
    let ab = params.psi_inv.bilinear(&a, &b);
    let bb = params.psi_inv.bilinear(&b, &b);
    if ab <= 0.0 {
        Ok(SkewRate {
            value: 0.5 * aa,
            branch: SkewBranch::CrossTermNonPositive,
            minimizer_xh: 0.0,
        })
    } else {
        Ok(SkewRate {
            value: 0.5 * (aa - ab * ab / (bb + 1.0)),
            branch: SkewBranch::CrossTermPositive,
            minimizer_xh: ab / (bb + 1.0),
        })
    }
}

/// The skew transform U₂: (x₁,…,x_h) ↦ (√(1−δ_j²)·x_j + δ_j|x_h|)_{j<h}.
pub fn skew_map(x: &[f64], delta: &[f64]) -> Vec<f64> {
    let h = x.len();
    assert_eq!(delta.len(), h - 1);
    let xh = x[h - 1].abs();
    (0..h - 1)
        .map(|j| (1.0 - delta[j] * delta[j]).sqrt() * x[j] + delta[j] * xh)
        .collect()
}

/// One-dimensional fiber chart of U₂ through y: x_h parametrizes
/// x = ((y_j − |x_h|δ_j)/√(1−δ_j²), …, x_h).
pub fn skew_fiber_chart(y: &[f64], delta: &[f64]) -> FiberChart {
    let y = y.to_vec();
    let delta = delta.to_vec();
    FiberChart {
        dim: 1,
        map: Arc::new(move |s: &[f64]| {
            let xh = s[0];
            let mut point: Vec<f64> = y
                .iter()
                .zip(&delta)
                .map(|(yj, dj)| (yj - xh.abs() * dj) / (1.0 - dj * dj).sqrt())
                .collect();
            point.push(xh);
            Some(point)
        }),
    }
}

// ---------------------------------------------------------------------------
// Logistic (simplex) rates
// ---------------------------------------------------------------------------

/// The simplex transform U₁: ℝ^h → ℝ^{h+1},
/// x ↦ (e^{x_1}, …, e^{x_h}, 1)/(1 + Σ e^{x_j}).
pub fn logistic_map(x: &[f64]) -> Vec<f64> {
    let denom = 1.0 + x.iter().map(|v| v.exp()).sum::<f64>();
    let mut y: Vec<f64> = x.iter().map(|v| v.exp() / denom).collect();
    y.push(1.0 / denom);
    y
}

/// Inverse chart of U₁ on the open simplex: y ↦ (log(y_j / y_{h+1}))_j.
/// `None` off the open simplex (a zero coordinate or total mass away from 1).
pub fn logit_coordinates(y: &[f64]) -> Option<Vec<f64>> {
    let h1 = y.len();
    if h1 < 2 || y.iter().any(|&v| v <= 0.0) {
        return None;
    }
    if (y.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return None;
    }
    let last = y[h1 - 1];
    Some(y[..h1 - 1].iter().map(|&v| (v / last).ln()).collect())
}

/// Moderate-deviation rate of the simplex limit: the Gaussian quadratic
/// evaluated at the logit coordinates; +∞ off the open simplex.
pub fn logistic_md_rate(y: &[f64], hess: &Matrix) -> Result<f64, RateError> {
    match logit_coordinates(y) {
        Some(logits) => gaussian_quadratic_rate(&logits, hess),
        None => Ok(f64::INFINITY),
    }
}

/// Dimension-0 fiber chart of U₁ through y (the fiber is a single point on
/// the open simplex, empty elsewhere).
pub fn logistic_fiber_chart(y: &[f64]) -> FiberChart {
    let y = y.to_vec();
    FiberChart {
        dim: 0,
        map: Arc::new(move |_: &[f64]| logit_coordinates(&y)),
    }
}

// ---------------------------------------------------------------------------
// Limit cumulants
// ---------------------------------------------------------------------------

/// The eight limit cumulant families, with enough payload to evaluate
/// exactly and to build the matching numerical conjugate problem.
#[derive(Clone)]
pub enum LimitCumulant {
    ImmLd {
        kappa_s: CumulantSpec,
        nu: f64,
    },
    ImmMdCentered {
        q: Matrix,
        nu: f64,
    },
    ImmMdDrift {
        m: Vec<f64>,
        nu: f64,
    },
    LevyLd {
        kappa_s: CumulantSpec,
        clock: SubordinatorModel,
    },
    LevyMd {
        kappa_s: CumulantSpec,
        v_rate: f64,
    },
    PoissonLd {
        p: f64,
        jumps: JumpMixture,
    },
    PoissonMd {
        lambda: f64,
        jumps: JumpMixture,
    },
    GaussMd {
        hess: Matrix,
    },
}

impl LimitCumulant {
    pub fn imm_ld(kappa_s: CumulantSpec, nu: f64) -> Result<Self, RateError> {
        check_nu(nu)?;
        Ok(LimitCumulant::ImmLd { kappa_s, nu })
    }

    pub fn imm_md_centered(q: Matrix, nu: f64) -> Result<Self, RateError> {
        check_nu(nu)?;
        if !q.is_positive_semidefinite(1e-10) {
            return Err(RateError::InvalidParameter("Q must be PSD".into()));
        }
        if q.symmetric_eigenvalues().iter().all(|&e| e.abs() < 1e-12) {
            // S ≡ 0 in this regime; no nondegenerate rate function exists
            return Err(RateError::InvalidParameter(
                "Q must not be the null matrix when the drift vanishes".into(),
            ));
        }
        Ok(LimitCumulant::ImmMdCentered { q, nu })
    }

    pub fn imm_md_drift(m: Vec<f64>, nu: f64) -> Result<Self, RateError> {
        check_nu(nu)?;
        if m.iter().all(|&v| v == 0.0) {
            return Err(RateError::InvalidParameter(
                "drift vector must be nonzero".into(),
            ));
        }
        Ok(LimitCumulant::ImmMdDrift { m, nu })
    }

    pub fn levy_ld(kappa_s: CumulantSpec, clock: SubordinatorModel) -> Result<Self, RateError> {
        if clock.mean_rate().is_none() {
            return Err(RateError::InvalidParameter(
                "clock must have a finite mean rate (light-tailed subordinator)".into(),
            ));
        }
        Ok(LimitCumulant::LevyLd { kappa_s, clock })
    }

    pub fn levy_md(kappa_s: CumulantSpec, v_rate: f64) -> Result<Self, RateError> {
        if !(v_rate > 0.0) {
            return Err(RateError::InvalidParameter(
                "the mean clock rate must be positive".into(),
            ));
        }
        Ok(LimitCumulant::LevyMd { kappa_s, v_rate })
    }

    pub fn poisson_ld(p: f64, jumps: JumpMixture) -> Result<Self, RateError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(RateError::InvalidParameter(format!(
                "p must lie in (0,1), got {p}"
            )));
        }
        Ok(LimitCumulant::PoissonLd { p, jumps })
    }

    pub fn poisson_md(lambda: f64, jumps: JumpMixture) -> Result<Self, RateError> {
        if !(lambda > 0.0) {
            return Err(RateError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(LimitCumulant::PoissonMd { lambda, jumps })
    }

    pub fn gauss_md(hess: Matrix) -> Result<Self, RateError> {
        if !hess.is_positive_semidefinite(1e-10) {
            return Err(RateError::InvalidParameter("Hessian must be PSD".into()));
        }
        Ok(LimitCumulant::GaussMd { hess })
    }

    pub fn dim(&self) -> usize {
        match self {
            LimitCumulant::ImmLd { kappa_s, .. } => kappa_s.dim,
            LimitCumulant::ImmMdCentered { q, .. } => q.dim(),
            LimitCumulant::ImmMdDrift { m, .. } => m.len(),
            LimitCumulant::LevyLd { kappa_s, .. } => kappa_s.dim,
            LimitCumulant::LevyMd { kappa_s, .. } => kappa_s.dim,
            LimitCumulant::PoissonLd { jumps, .. } => jumps.dim(),
            LimitCumulant::PoissonMd { jumps, .. } => jumps.dim(),
            LimitCumulant::GaussMd { hess } => hess.dim(),
        }
    }

    /// Exact evaluation; +∞ propagates from inner cumulants.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            LimitCumulant::ImmLd { kappa_s, nu } => f_nu(kappa_s.eval(theta), *nu),
            LimitCumulant::ImmMdCentered { q, nu } => {
                (0.5 * q.quadratic_form(theta)).powf(1.0 / nu)
            }
            LimitCumulant::ImmMdDrift { m, nu } => {
                let s = dot(theta, m);
                if s >= 0.0 {
                    s.powf(1.0 / nu)
                } else {
                    0.0
                }
            }
            LimitCumulant::LevyLd { kappa_s, clock } => {
                let inner = kappa_s.eval(theta);
                if inner.is_finite() {
                    clock.kappa_v(inner)
                } else {
                    f64::INFINITY
                }
            }
            LimitCumulant::LevyMd { kappa_s, v_rate } => {
                let inner = kappa_s.eval(theta);
                if inner.is_finite() {
                    v_rate * inner
                } else {
                    f64::INFINITY
                }
            }
            LimitCumulant::PoissonLd { p, jumps } => {
                let g = jumps.mgf(theta);
                if g.is_finite() {
                    (p * (g - 1.0)).ln_1p()
                } else {
                    // log(1−p+pG) stays finite where G overflows: switch to
                    // log-sum-exp so suprema can still escape along rays
                    let a = (1.0 - p).ln();
                    let b = p.ln() + jumps.log_mgf(theta);
                    let m = a.max(b);
                    m + ((a - m).exp() + (b - m).exp()).ln()
                }
            }
            LimitCumulant::PoissonMd { lambda, jumps } => {
                let g = jumps.mgf(theta);
                if g.is_finite() {
                    lambda * (g - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            LimitCumulant::GaussMd { hess } => 0.5 * hess.quadratic_form(theta),
        }
    }

    /// Point where the conjugate rate function vanishes: ∇Λ(0).
    pub fn zero_point(&self) -> Vec<f64> {
        match self {
            LimitCumulant::ImmLd { kappa_s, .. } => vec![0.0; kappa_s.dim],
            LimitCumulant::ImmMdCentered { q, .. } => vec![0.0; q.dim()],
            LimitCumulant::ImmMdDrift { m, .. } => vec![0.0; m.len()],
            LimitCumulant::LevyLd { kappa_s, clock } => {
                let c = clock.mean_rate().unwrap_or(0.0);
                kappa_s.grad0.iter().map(|g| c * g).collect()
            }
            LimitCumulant::LevyMd { kappa_s, v_rate } => {
                kappa_s.grad0.iter().map(|g| v_rate * g).collect()
            }
            LimitCumulant::PoissonLd { p, jumps } => jumps.mean().iter().map(|m| p * m).collect(),
            LimitCumulant::PoissonMd { lambda, jumps } => {
                jumps.mean().iter().map(|m| lambda * m).collect()
            }
            LimitCumulant::GaussMd { hess } => vec![0.0; hess.dim()],
        }
    }

    /// The matching numerical conjugate problem. The Gaussian family carries
    /// its analytic gradient and Hessian; the rest use finite differences.
    pub fn conjugate_problem(&self) -> ConjugateProblem {
        let this = self.clone();
        let dim = self.dim();
        let mut p = ConjugateProblem::new(dim, Arc::new(move |theta: &[f64]| this.eval(theta)));
        match self {
            LimitCumulant::GaussMd { hess } => {
                let h1 = hess.clone();
                let h2 = hess.clone();
                p = p
                    .with_grad(Arc::new(move |theta: &[f64]| h1.matvec(theta)))
                    .with_hess(Arc::new(move |_: &[f64]| h2.clone()));
            }
            LimitCumulant::LevyLd { kappa_s, .. }
            | LimitCumulant::LevyMd { kappa_s, .. }
            | LimitCumulant::ImmLd { kappa_s, .. } => {
                p = p.with_domain_radius(kappa_s.domain_radius);
            }
            _ => {}
        }
        p
    }
}

fn check_nu(nu: f64) -> Result<(), RateError> {
    if nu > 0.0 && nu < 1.0 {
        Ok(())
    } else {
        Err(RateError::InvalidParameter(format!(
            "nu must lie in (0,1), got {nu}"
        )))
    }
}

/// Exact evaluation of a limit cumulant (free-function form).
pub fn limit_cumulant_eval(lc: &LimitCumulant, theta: &[f64]) -> f64 {
    lc.eval(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{conjugate, contract, ContractionProblem};
    use crate::levy_models::{mgf_of_summand, LevyModel, TriangularSummandModel};
    use crate::oracle::{grid_conjugate_1d, grid_infimum_1d};

    #[test]
    fn h_nu_values() {
        assert_eq!(h_nu(0.0, 1.0, 0.5), 0.0);
        // ν = 1/2, m = 1, x = 2 → (1/2 − 1/4)·4 = 1
        assert!((h_nu(2.0, 1.0, 0.5) - 1.0).abs() < 1e-14);
        assert_eq!(h_nu(-1.0, 1.0, 0.5), f64::INFINITY);
        // grid-sup oracle for the same point: Λ(θ) = θ²·1_{θ≥0}
        let oracle = grid_conjugate_1d(
            &|t| if t >= 0.0 { t * t } else { 0.0 },
            2.0,
            -50.0,
            50.0,
            2_000_000,
        );
        assert!((oracle - 1.0).abs() < 1e-4, "oracle {oracle}");
    }

    #[test]
    fn centered_1d_values() {
        assert_eq!(imm_md_centered_1d(0.0, 1.0, 0.5), 0.0);
        // ν = 1 collapses to the Gaussian quadratic
        assert!((imm_md_centered_1d(1.0, 1.0, 1.0) - 0.5).abs() < 1e-14);
        // ν = 1/2, q = 2, x = 1
        let v = imm_md_centered_1d(1.0, 2.0, 0.5);
        let expected = 0.25_f64.powf(1.0 / 3.0) - 0.25_f64.powf(4.0 / 3.0);
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 0.472_470_393_7).abs() < 1e-9, "got {v}");
        // numeric conjugate of Λ(θ) = (qθ²/2)^{1/ν} = θ⁴ at x = 1
        let lc = LimitCumulant::imm_md_centered(Matrix::diagonal(&[2.0]), 0.5).unwrap();
        let out = conjugate(&lc.conjugate_problem(), &[1.0]).unwrap();
        assert!((out.value - v).abs() < 1e-4, "conjugate {}", out.value);
    }

    #[test]
    fn explicit_cases_classification() {
        let (v, c) = imm_md_explicit_cases(&[0.0, 0.0], &[2.0, 1.0], 0.5);
        assert_eq!(c, ExplicitCase::Ray { c: 0.0 });
        assert_eq!(v, 0.0);

        let (v, c) = imm_md_explicit_cases(&[1.0, 1.0], &[1.0, 0.0], 0.5);
        assert_eq!(c, ExplicitCase::NullComponent);
        assert_eq!(v, f64::INFINITY);

        let (v, c) = imm_md_explicit_cases(&[1.0, -0.5], &[2.0, 1.0], 0.5);
        assert_eq!(c, ExplicitCase::OppositeSign);
        assert_eq!(v, f64::INFINITY);

        // ray case: m = (2,1), x = (1, 0.5) = 0.5·m, ν = 1/2 → H(0.5;1) = 1/16
        let (v, c) = imm_md_explicit_cases(&[1.0, 0.5], &[2.0, 1.0], 0.5);
        assert!(matches!(c, ExplicitCase::Ray { .. }));
        assert!((v - 0.0625).abs() < 1e-12);
        // against the 2-d numeric conjugate of (⟨θ,m⟩)²·1_{⟨θ,m⟩≥0}
        let lc = LimitCumulant::imm_md_drift(vec![2.0, 1.0], 0.5).unwrap();
        let out = conjugate(&lc.conjugate_problem(), &[1.0, 0.5]).unwrap();
        assert!((out.value - 0.0625).abs() < 1e-4, "conjugate {}", out.value);

        // off-ray, sign-compatible: no closed form
        let (_, c) = imm_md_explicit_cases(&[1.0, 1.0], &[2.0, 1.0], 0.5);
        assert_eq!(c, ExplicitCase::Unclassified);
    }

    #[test]
    fn binomial_rates_values() {
        let (ld, md) = binomial_poisson_rates(0.5, 0.5);
        assert_eq!((ld, md), (0.0, 0.0));

        let (ld, md) = binomial_poisson_rates(0.75, 0.5);
        assert!((ld - 0.130_812_035_941_137).abs() < 1e-12, "ld {ld}");
        assert!((md - 0.054_098_831_081_123_3).abs() < 1e-12, "md {md}");

        let (ld, md) = binomial_poisson_rates(1.5, 0.5);
        assert_eq!(ld, f64::INFINITY);
        assert!((md - (1.5 * 3.0_f64.ln() - 1.0)).abs() < 1e-12);

        // boundary convention 0·log 0 = 0
        let (ld, _) = binomial_poisson_rates(0.0, 0.5);
        assert!((ld - 2.0_f64.ln()).abs() < 1e-12);
        let (ld, _) = binomial_poisson_rates(1.0, 0.5);
        assert!((ld - 2.0_f64.ln()).abs() < 1e-12);

        // numeric-conjugate oracles for both closed forms
        let jumps = JumpMixture::unit_point_mass();
        let lc_ld = LimitCumulant::poisson_ld(0.5, jumps.clone()).unwrap();
        let lc_md = LimitCumulant::poisson_md(0.5, jumps).unwrap();
        let (ld, md) = binomial_poisson_rates(0.75, 0.5);
        let c_ld = conjugate(&lc_ld.conjugate_problem(), &[0.75]).unwrap();
        let c_md = conjugate(&lc_md.conjugate_problem(), &[0.75]).unwrap();
        assert!((c_ld.value - ld).abs() < 1e-6, "{} vs {ld}", c_ld.value);
        assert!((c_md.value - md).abs() < 1e-6, "{} vs {md}", c_md.value);
    }

    #[test]
    fn skew_rate_branches() {
        // δ = 0 kills the skewness: quadratic in y, first branch
        let p0 = SkewParams::new(Matrix::identity(1), vec![0.0]).unwrap();
        for y in [-2.0, -0.5, 1.0, 3.0] {
            let r = skew_md_rate(&[y], &p0).unwrap();
            assert_eq!(r.branch, SkewBranch::CrossTermNonPositive);
            assert!((r.value - 0.5 * y * y).abs() < 1e-12);
        }

        let p = SkewParams::new(Matrix::identity(1), vec![0.6]).unwrap();
        // y = 1: positive cross term; the closed form collapses to y²/2
        let r = skew_md_rate(&[1.0], &p).unwrap();
        assert_eq!(r.branch, SkewBranch::CrossTermPositive);
        assert!((r.value - 0.5).abs() < 1e-12, "value {}", r.value);
        // y = −1: first branch, 1/(2·(1−0.36)) = 0.78125
        let r = skew_md_rate(&[-1.0], &p).unwrap();
        assert_eq!(r.branch, SkewBranch::CrossTermNonPositive);
        assert!((r.value - 0.78125).abs() < 1e-12, "value {}", r.value);

        // grid-infimum oracle over x_h of the quadratic along the fiber
        for y in [1.0, -1.0] {
            let closed = skew_md_rate(&[y], &p).unwrap().value;
            let oracle = grid_infimum_1d(
                &|xh: f64| {
                    let x1 = (y - xh.abs() * 0.6) / 0.8;
                    0.5 * (x1 * x1 + xh * xh)
                },
                -10.0,
                10.0,
                4000,
                3,
            );
            assert!(
                (closed - oracle).abs() < 1e-6,
                "y={y}: {closed} vs {oracle}"
            );
        }
    }

    #[test]
    fn skew_rate_matches_contract_through_the_fiber() {
        let delta = vec![0.6];
        let p = SkewParams::new(Matrix::identity(1), delta.clone()).unwrap();
        let hess = Matrix::identity(2);
        for y in [-1.0, -0.3, 0.4, 1.0, 2.0] {
            let closed = skew_md_rate(&[y], &p).unwrap().value;
            let hess_c = hess.clone();
            let problem = ContractionProblem::new(
                Arc::new(move |x: &[f64]| gaussian_quadratic_rate(x, &hess_c).unwrap()),
                {
                    let d = delta.clone();
                    Arc::new(move |x: &[f64]| skew_map(x, &d))
                },
                2,
                vec![y],
            )
            .with_chart(skew_fiber_chart(&[y], &delta));
            let numeric = contract(&problem).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-4,
                "y={y}: closed {closed} vs contract {numeric}"
            );
        }
    }

    #[test]
    fn logistic_map_and_rate() {
        // center of the simplex is the image of 0 and has rate 0
        let y = logistic_map(&[0.0]);
        assert!((y[0] - 0.5).abs() < 1e-15 && (y[1] - 0.5).abs() < 1e-15);
        let hess = Matrix::identity(1);
        assert_eq!(logistic_md_rate(&[0.5, 0.5], &hess).unwrap(), 0.0);
        // off the open simplex: +∞
        assert_eq!(logistic_md_rate(&[1.0, 0.0], &hess).unwrap(), f64::INFINITY);
        assert_eq!(logistic_md_rate(&[0.7, 0.2], &hess).unwrap(), f64::INFINITY);

        // closed form matches contract() with the dimension-0 chart
        for y1 in [0.2, 0.35, 0.5, 0.8] {
            let target = vec![y1, 1.0 - y1];
            let closed = logistic_md_rate(&target, &hess).unwrap();
            let problem = ContractionProblem::new(
                Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]),
                Arc::new(|x: &[f64]| logistic_map(x)),
                1,
                target.clone(),
            )
            .with_chart(logistic_fiber_chart(&target));
            let numeric = contract(&problem).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-4,
                "y1={y1}: {closed} vs {numeric}"
            );
        }
    }

    #[test]
    fn limit_cumulants_vanish_at_origin() {
        let jumps = JumpMixture::unit_point_mass();
        let kappa_s = LevyModel::standard_brownian(2).cumulant().clone();
        let kappa_1 = LevyModel::standard_brownian(1).cumulant().clone();
        let clock = SubordinatorModel::gamma(1.0, 1.0).unwrap();
        let families: Vec<LimitCumulant> = vec![
            LimitCumulant::imm_ld(kappa_s.clone(), 0.5).unwrap(),
            LimitCumulant::imm_md_centered(Matrix::identity(2), 0.5).unwrap(),
            LimitCumulant::imm_md_drift(vec![2.0, 1.0], 0.5).unwrap(),
            LimitCumulant::levy_ld(kappa_1.clone(), clock).unwrap(),
            LimitCumulant::levy_md(kappa_1, 1.0).unwrap(),
            LimitCumulant::poisson_ld(0.3, jumps.clone()).unwrap(),
            LimitCumulant::poisson_md(2.0, jumps).unwrap(),
            LimitCumulant::gauss_md(Matrix::identity(2)).unwrap(),
        ];
        for lc in &families {
            let zero = vec![0.0; lc.dim()];
            assert_eq!(limit_cumulant_eval(lc, &zero), 0.0);
        }
    }

    #[test]
    fn limit_cumulant_values() {
        // f_ν applied to κ_S(θ) = θ²/2 at θ = 2 with ν = 1/2: f(2) = 4
        let lc =
            LimitCumulant::imm_ld(LevyModel::standard_brownian(1).cumulant().clone(), 0.5).unwrap();
        assert!((lc.eval(&[2.0]) - 4.0).abs() < 1e-12);

        // Poisson LD cumulant equals the log summand MGF for every θ
        let jumps = JumpMixture::unit_point_mass();
        let lc = LimitCumulant::poisson_ld(0.3, jumps.clone()).unwrap();
        let summand = TriangularSummandModel::new(0.3, jumps).unwrap();
        for theta in [-1.0, 0.3, 1.0, 2.0] {
            let expected = mgf_of_summand(&summand, &[theta]).ln();
            assert!((lc.eval(&[theta]) - expected).abs() < 1e-13);
        }
        // frozen arithmetic: log(1 + 0.3(e − 1))
        assert!((lc.eval(&[1.0]) - 0.415_735_221_843_628_5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_centered_model_is_rejected() {
        let err = LimitCumulant::imm_md_centered(Matrix::zeros(2), 0.5);
        assert!(err.is_err());
    }

    #[test]
    fn gaussian_family_conjugate_is_quadratic() {
        let hess = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let lc = LimitCumulant::gauss_md(hess.clone()).unwrap();
        for x in [[1.0, 1.0], [-0.4, 0.7]] {
            let out = conjugate(&lc.conjugate_problem(), &x).unwrap();
            let expected = gaussian_quadratic_rate(&x, &hess).unwrap();
            assert!((out.value - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_points() {
        let jumps = JumpMixture::unit_point_mass();
        let lc = LimitCumulant::poisson_md(2.0, jumps).unwrap();
        assert_eq!(lc.zero_point(), vec![2.0]);
        let clock = SubordinatorModel::gamma(2.0, 1.0).unwrap();
        let drift = LevyModel::deterministic_drift(vec![0.5]);
        let lc = LimitCumulant::levy_ld(drift.cumulant().clone(), clock).unwrap();
        assert_eq!(lc.zero_point(), vec![1.0]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// With λ = p the reference rate dominates the moderate rate
            /// everywhere on [0,1], and both are nonnegative.
            #[test]
            fn binomial_pair_ordering(x in 0.0f64..=1.0, p in 0.01f64..0.99) {
                let (ld, md) = binomial_poisson_rates(x, p);
                prop_assert!(ld >= md - 1e-12, "x={x} p={p}: {ld} < {md}");
                prop_assert!(md >= -1e-15);
            }

            /// The two-branch skew closed form never exceeds the value of
            /// the fiber objective at any probe x_h, and δ = 0 collapses it
            /// to the plain quadratic.
            #[test]
            fn skew_rate_is_a_true_infimum(y in -3.0f64..3.0, d in -0.9f64..0.9,
                                           probe in -5.0f64..5.0) {
                let params = SkewParams::new(Matrix::identity(1), vec![d]).unwrap();
                let rate = skew_md_rate(&[y], &params).unwrap();
                let along = |xh: f64| {
                    let x1 = (y - xh.abs() * d) / (1.0 - d * d).sqrt();
                    0.5 * (x1 * x1 + xh * xh)
                };
                prop_assert!(rate.value <= along(probe) + 1e-12);
                prop_assert!((rate.value - along(rate.minimizer_xh)).abs() < 1e-12);
            }
        }
    }
}
