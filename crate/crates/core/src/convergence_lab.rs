//! The verification harness: deterministic scaled-cumulant-limit checks,
//! Monte Carlo MGF weak-convergence checks, and tail-decay measurements
//! against rate functions.
//!
//! Conventions, enforced uniformly: deterministic checks pass when the final
//! error is within tolerance and the error decreases over the last three
//! horizons; stochastic checks pass when every z-score stays within the SE
//! multiplier (default 4). Probabilities that would vanish in plain Monte
//! Carlo are measured by exact log-space enumeration (Binomial families) or
//! exponential tilting.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::levy_models::{JumpMixture, LevyKind, LevyModel, SubordinatorModel};
use crate::mittag_leffler::MlParams;
use crate::random_time::alpha_exponent;
use crate::rate_functions::{LimitCumulant, RateError};
use crate::rng::{stream_rng, SampleBatch, StreamDomain};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("prelimit is not finite at horizon {horizon} and theta {theta:?}")]
    NonFinitePrelimit { horizon: f64, theta: Vec<f64> },
    #[error("target MGF is not finite at theta {theta:?}")]
    TargetInfinite { theta: Vec<f64> },
    #[error("weak-convergence checks need at least 10^4 draws, got {0}")]
    TooFewDraws(usize),
    #[error("all draws missed the target set and no tilt was supplied")]
    ZeroProbabilityEstimate,
    #[error(transparent)]
    Model(#[from] crate::levy_models::ModelError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

// ---------------------------------------------------------------------------
// Deterministic scaled-cumulant-limit checks
// ---------------------------------------------------------------------------

pub type PrelimitFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type LimitFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// (1/v)·log MGF computed exactly from model formulas, against its limit.
#[derive(Clone)]
pub struct ScgfLimitCheck {
    pub label: String,
    pub prelimit: PrelimitFn,
    pub limit: LimitFn,
    pub grid: Vec<Vec<f64>>,
    /// Increasing horizons (t or n).
    pub horizons: Vec<f64>,
    /// Bound on the error at the final horizon.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct ScgfReport {
    pub label: String,
    /// (horizon, max error over the grid).
    pub per_horizon_error: Vec<(f64, f64)>,
    pub final_error: f64,
    pub decreasing: bool,
    pub pass: bool,
}

pub fn run_scgf_check(check: &ScgfLimitCheck) -> Result<ScgfReport, LabError> {
    for theta in &check.grid {
        let l = (check.limit)(theta);
        if !l.is_finite() {
            return Err(LabError::TargetInfinite {
                theta: theta.clone(),
            });
        }
    }
    let mut per_horizon_error = Vec::with_capacity(check.horizons.len());
    for &h in &check.horizons {
        let mut err: f64 = 0.0;
        for theta in &check.grid {
            let pre = (check.prelimit)(h, theta);
            if !pre.is_finite() {
                return Err(LabError::NonFinitePrelimit {
                    horizon: h,
                    theta: theta.clone(),
                });
            }
            err = err.max((pre - (check.limit)(theta)).abs());
        }
        per_horizon_error.push((h, err));
    }
    let final_error = per_horizon_error.last().map(|(_, e)| *e).unwrap_or(0.0);
    let tail: Vec<f64> = per_horizon_error
        .iter()
        .rev()
        .take(3)
        .map(|(_, e)| *e)
        .collect();
    // tail is reversed: last horizon first
    let decreasing = tail.windows(2).all(|w| w[0] <= w[1] + 1e-15);
    let pass = final_error <= check.tolerance && decreasing;
    Ok(ScgfReport {
        label: check.label.clone(),
        per_horizon_error,
        final_error,
        decreasing,
        pass,
    })
}

/// Reference-LDP check for the inverse stable clock:
/// (1/t)·log E_ν(κ_S(θ)·t^ν) → f_ν(κ_S(θ)).
pub fn scgf_imm_reference(
    levy: &LevyModel,
    nu: f64,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let lc = LimitCumulant::imm_ld(levy.cumulant().clone(), nu)?;
    let kappa = levy.cumulant().eval_fn();
    let ml = MlParams::new(nu).map_err(|_| {
        LabError::Rate(RateError::InvalidParameter(format!(
            "nu must lie in (0,1), got {nu}"
        )))
    })?;
    Ok(ScgfLimitCheck {
        label: format!("imm-reference-scgf nu={nu}"),
        prelimit: Arc::new(move |t, theta| ml.log_eval(kappa(theta) * t.powf(nu)) / t),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

/// Moderate-deviations check for the inverse stable clock with a_t = t^{−β}:
/// a_t·log E_ν(κ_S(θ/(a_t t)^{1−α})·t^ν) → Λ_{ν,∇κ_S(0)}(θ).
pub fn scgf_imm_moderate(
    levy: &LevyModel,
    nu: f64,
    beta: f64,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let drift_free = levy.cumulant().grad0.iter().all(|&g| g == 0.0);
    let alpha = alpha_exponent(nu, drift_free);
    let lc = if drift_free {
        LimitCumulant::imm_md_centered(levy.cumulant().hess0.clone(), nu)?
    } else {
        LimitCumulant::imm_md_drift(levy.cumulant().grad0.clone(), nu)?
    };
    let kappa = levy.cumulant().eval_fn();
    let ml = MlParams::new(nu).map_err(|_| {
        LabError::Rate(RateError::InvalidParameter(format!(
            "nu must lie in (0,1), got {nu}"
        )))
    })?;
    Ok(ScgfLimitCheck {
        label: format!("imm-moderate-scgf nu={nu} beta={beta}"),
        prelimit: Arc::new(move |t, theta| {
            let a_t = t.powf(-beta);
            let scale = (a_t * t).powf(-(1.0 - alpha));
            let scaled: Vec<f64> = theta.iter().map(|v| v * scale).collect();
            a_t * ml.log_eval(kappa(&scaled) * t.powf(nu))
        }),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

/// Reference-LDP check for subordinator clocks: the prelimit
/// (1/t)·log E e^{⟨θ,S(V(t))⟩} = κ_V(κ_S(θ)) is exact at every t.
pub fn scgf_levy_reference(
    levy: &LevyModel,
    clock: &SubordinatorModel,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let lc = LimitCumulant::levy_ld(levy.cumulant().clone(), clock.clone())?;
    let kappa = levy.cumulant().eval_fn();
    let clock = clock.clone();
    Ok(ScgfLimitCheck {
        label: "levy-reference-scgf".into(),
        prelimit: Arc::new(move |_t, theta| clock.kappa_v(kappa(theta))),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

/// Moderate-deviations check for subordinator clocks with a_t = t^{−β}:
/// a_t·t·κ_V(κ_S(θ)/(t a_t)) → κ_V′(0)·κ_S(θ).
pub fn scgf_levy_moderate(
    levy: &LevyModel,
    clock: &SubordinatorModel,
    beta: f64,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let v_rate = clock.mean_rate().ok_or_else(|| {
        LabError::Rate(RateError::InvalidParameter(
            "clock must have a finite mean rate".into(),
        ))
    })?;
    let lc = LimitCumulant::levy_md(levy.cumulant().clone(), v_rate)?;
    let kappa = levy.cumulant().eval_fn();
    let clock = clock.clone();
    Ok(ScgfLimitCheck {
        label: format!("levy-moderate-scgf beta={beta}"),
        prelimit: Arc::new(move |t, theta| {
            let ta = t * t.powf(-beta);
            ta * clock.kappa_v(kappa(theta) / ta)
        }),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

/// Reference-LDP check for triangular arrays with p_n → p:
/// log(1 + p_n(G(θ) − 1)) → log(1 + p(G(θ) − 1)); the default approach
/// schedule is p_n = p·(1 + 1/√n), clamped into (0,1).
pub fn scgf_poisson_reference(
    jumps: &JumpMixture,
    p: f64,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let lc = LimitCumulant::poisson_ld(p, jumps.clone())?;
    let jumps = jumps.clone();
    Ok(ScgfLimitCheck {
        label: format!("poisson-reference-scgf p={p}"),
        prelimit: Arc::new(move |n, theta| {
            let p_n = (p * (1.0 + 1.0 / n.sqrt())).min(1.0 - 1e-12);
            (p_n * (jumps.mgf(theta) - 1.0)).ln_1p()
        }),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

/// Moderate-deviations check for triangular arrays under the exact-λ
/// schedule p_n = λ/(n a_n) with a_n = n^{−β}:
/// n a_n log(1 + p_n(G(θ) − 1)) → λ(G(θ) − 1).
pub fn scgf_poisson_moderate(
    jumps: &JumpMixture,
    lambda: f64,
    beta: f64,
    grid: Vec<Vec<f64>>,
    horizons: Vec<f64>,
    tolerance: f64,
) -> Result<ScgfLimitCheck, LabError> {
    let lc = LimitCumulant::poisson_md(lambda, jumps.clone())?;
    let jumps = jumps.clone();
    Ok(ScgfLimitCheck {
        label: format!("poisson-moderate-scgf lambda={lambda} beta={beta}"),
        prelimit: Arc::new(move |n, theta| {
            let na = n * n.powf(-beta);
            let p_n = lambda / na;
            na * (p_n * (jumps.mgf(theta) - 1.0)).ln_1p()
        }),
        limit: Arc::new(move |theta| lc.eval(theta)),
        grid,
        horizons,
        tolerance,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo weak-convergence checks
// ---------------------------------------------------------------------------

pub type BatchSampler = Arc<dyn Fn(usize, u64) -> Result<SampleBatch, LabError> + Send + Sync>;

/// Empirical MGF of a sampled scaled object against a target MGF.
#[derive(Clone)]
pub struct WeakConvergenceCheck {
    pub label: String,
    pub sampler: BatchSampler,
    pub target_mgf: LimitFn,
    pub grid: Vec<Vec<f64>>,
    pub batch_size: usize,
    pub se_multiplier: f64,
}

#[derive(Debug, Clone)]
pub struct WeakRow {
    pub theta: Vec<f64>,
    pub empirical: f64,
    pub se: f64,
    pub target: f64,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct WeakReport {
    pub label: String,
    pub rows: Vec<WeakRow>,
    pub max_abs_z: f64,
    pub pass: bool,
}

pub fn run_weak_convergence(
    check: &WeakConvergenceCheck,
    seed: u64,
) -> Result<WeakReport, LabError> {
    if check.batch_size < 10_000 {
        return Err(LabError::TooFewDraws(check.batch_size));
    }
    for theta in &check.grid {
        if !(check.target_mgf)(theta).is_finite() {
            return Err(LabError::TargetInfinite {
                theta: theta.clone(),
            });
        }
    }
    let batch = (check.sampler)(check.batch_size, seed)?;
    let mut rows = Vec::with_capacity(check.grid.len());
    let mut max_abs_z: f64 = 0.0;
    for theta in &check.grid {
        let est = batch.empirical_mgf(theta);
        let target = (check.target_mgf)(theta);
        let z = est.z_score(target);
        max_abs_z = max_abs_z.max(z.abs());
        rows.push(WeakRow {
            theta: theta.clone(),
            empirical: est.mean,
            se: est.se,
            target,
            z,
        });
    }
    Ok(WeakReport {
        label: check.label.clone(),
        pass: max_abs_z <= check.se_multiplier,
        rows,
        max_abs_z,
    })
}

// ---------------------------------------------------------------------------
// Tail decay
// ---------------------------------------------------------------------------

/// How the tail probability is measured.
#[derive(Clone)]
pub enum TailEstimator {
    /// Exact log-space enumeration of Binomial(n, p_n) upper tails for the
    /// scaled sum a_n·S_n. Horizons are n values.
    BinomialExact {
        p_of_n: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        scale_of_n: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        speed_of_n: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Importance sampling of P(S(t)/t ≥ c) for a one-dimensional driver,
    /// weighted back from the exponentially tilted law. `tilt: None` runs
    /// plain Monte Carlo, which errors out when no draw lands in the set.
    TiltedMonteCarlo {
        model: LevyModel,
        tilt: Option<f64>,
        batch: usize,
    },
}

/// Tail-decay measurement on the half-space {x ≥ threshold}.
#[derive(Clone)]
pub struct TailDecayCheck {
    pub label: String,
    pub estimator: TailEstimator,
    pub threshold: f64,
    pub horizons: Vec<f64>,
    /// −inf of the rate function over the set.
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct TailRow {
    pub horizon: f64,
    /// (1/v)·log P̂ of the set.
    pub scaled_log_prob: f64,
    /// standard error of the scaled log-probability (0 for exact counts)
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct TailReport {
    pub label: String,
    pub rows: Vec<TailRow>,
    pub target: f64,
    pub final_gap: f64,
    pub decreasing: bool,
    pub pass: bool,
}

/// log P(S ≥ k) for S ~ Binomial(n, p), summed stably in log space.
pub fn binomial_tail_log_prob(n: u64, p: f64, k: u64) -> f64 {
    binomial_range_log_prob(n, p, k, n)
}

/// log P(a ≤ S ≤ b) for S ~ Binomial(n, p).
///
/// The first log-pmf is anchored with the extended-precision log-gamma and
/// the rest follow the exact ratio recurrence, so the accumulated drift
/// stays far below the 1e-12 mass-conservation contract.
pub fn binomial_range_log_prob(n: u64, p: f64, a: u64, b: u64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let b = b.min(n);
    if a > b {
        return f64::NEG_INFINITY;
    }
    use crate::oracle::{ln_gamma_dd, Dd};
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let af = a as f64;
    let anchor = ln_gamma_dd(Dd::from_f64(n as f64 + 1.0))
        .sub(ln_gamma_dd(Dd::from_f64(af + 1.0)))
        .sub(ln_gamma_dd(Dd::from_f64((n - a) as f64 + 1.0)))
        .value()
        + af * lp
        + (n as f64 - af) * lq;
    let mut term = anchor;
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0_f64;
    for j in a..=b {
        if j > a {
            // pmf(j)/pmf(j−1) = (n−j+1)/j · p/(1−p)
            let jf = j as f64;
            term += ((n as f64 - jf + 1.0) / jf).ln() + lp - lq;
        }
        if term > max {
            acc = acc * (max - term).exp() + 1.0;
            max = term;
        } else {
            acc += (term - max).exp();
        }
    }
    max + acc.ln()
}

pub fn run_tail_decay(check: &TailDecayCheck, seed: u64) -> Result<TailReport, LabError> {
    let mut rows = Vec::with_capacity(check.horizons.len());
    for (hi, &h) in check.horizons.iter().enumerate() {
        let row = match &check.estimator {
            TailEstimator::BinomialExact {
                p_of_n,
                scale_of_n,
                speed_of_n,
            } => {
                let n = h as u64;
                let p_n = p_of_n(h);
                let scale = scale_of_n(h);
                let k = (check.threshold / scale - 1e-9).ceil().max(0.0) as u64;
                let log_p = binomial_tail_log_prob(n, p_n, k);
                TailRow {
                    horizon: h,
                    scaled_log_prob: log_p / speed_of_n(h),
                    se: 0.0,
                }
            }
            TailEstimator::TiltedMonteCarlo { model, tilt, batch } => {
                tilted_half_space(model, check.threshold, h, *tilt, *batch, seed + hi as u64)?
            }
        };
        rows.push(row);
    }
    let final_gap = rows
        .last()
        .map(|r| (r.scaled_log_prob - check.target).abs())
        .unwrap_or(f64::INFINITY);
    let gaps: Vec<f64> = rows
        .iter()
        .rev()
        .take(3)
        .map(|r| (r.scaled_log_prob - check.target).abs())
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[0] <= w[1] + 1e-12);
    Ok(TailReport {
        label: check.label.clone(),
        target: check.target,
        final_gap,
        decreasing,
        pass: final_gap <= check.tolerance && decreasing,
        rows,
    })
}

/// Estimate (1/t)·log P(S(t)/t ≥ c) by exponential tilting.
fn tilted_half_space(
    model: &LevyModel,
    c: f64,
    t: f64,
    tilt: Option<f64>,
    batch: usize,
    seed: u64,
) -> Result<TailRow, LabError> {
    assert_eq!(model.dim(), 1, "tilted tail estimation is one-dimensional");
    let theta = tilt.unwrap_or(0.0);
    let kappa_theta = model.kappa(&[theta]);
    let mut sum = 0.0_f64;
    let mut sumsq = 0.0_f64;
    for i in 0..batch {
        let mut rng = stream_rng(seed, StreamDomain::Harness, i as u64);
        let s = sample_tilted(model, theta, t, &mut rng);
        let w = if s / t >= c {
            (-theta * s + t * kappa_theta).exp()
        } else {
            0.0
        };
        sum += w;
        sumsq += w * w;
    }
    let nb = batch as f64;
    let mean = sum / nb;
    if mean == 0.0 {
        return Err(LabError::ZeroProbabilityEstimate);
    }
    let var = (sumsq - nb * mean * mean).max(0.0) / (nb - 1.0);
    let se_mean = (var / nb).sqrt();
    Ok(TailRow {
        horizon: t,
        scaled_log_prob: mean.ln() / t,
        // delta method: se(log P)/t
        se: se_mean / (mean * t),
    })
}

/// Summand law for the transformed-sum sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummandKind {
    /// Independent ±1 coordinates (covariance I).
    Rademacher,
    /// Centered Gaussian with the supplied covariance; the n-fold sum is
    /// drawn exactly in one shot.
    Gaussian,
}

/// Draws of U((X₁ + … + Xₙ)/√n) for centered i.i.d. summands: the sampled
/// side of the continuous-mapping weak-convergence checks.
pub fn transformed_sum_batch(
    kind: SummandKind,
    dim: usize,
    cov_chol: &crate::linalg::Matrix,
    n: usize,
    map: &crate::legendre::MapFn,
    image_dim: usize,
    batch: usize,
    seed: u64,
) -> SampleBatch {
    let mut data = vec![0.0; batch * image_dim];
    data.par_chunks_mut(image_dim)
        .enumerate()
        .for_each(|(i, out)| {
            let mut rng = stream_rng(seed, StreamDomain::Jumps, i as u64);
            let mut sum = vec![0.0; dim];
            match kind {
                SummandKind::Rademacher => {
                    for _ in 0..n {
                        for s in sum.iter_mut() {
                            *s += if rng.random::<bool>() { 1.0 } else { -1.0 };
                        }
                    }
                }
                SummandKind::Gaussian => {
                    let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    let lz = cov_chol.matvec(&z);
                    let scale = (n as f64).sqrt();
                    for (s, v) in sum.iter_mut().zip(lz) {
                        *s = scale * v;
                    }
                }
            }
            let scaled: Vec<f64> = sum.iter().map(|v| v / (n as f64).sqrt()).collect();
            out.copy_from_slice(&map(&scaled));
        });
    SampleBatch::from_rows(image_dim, data, seed)
}

/// One draw of S(t) under the exponentially tilted law dP_θ ∝ e^{θS(t)} dP.
fn sample_tilted(model: &LevyModel, theta: f64, t: f64, rng: &mut rand_chacha::ChaCha12Rng) -> f64 {
    match model.kind() {
        LevyKind::BrownianWithDrift { mu, sigma } => {
            // tilted Brownian: drift shifts by σ²θ
            let s2 = sigma.get(0, 0);
            let z: f64 = rng.sample(StandardNormal);
            (mu[0] + s2 * theta) * t + (s2 * t).sqrt() * z
        }
        LevyKind::CompoundPoisson { rate, jumps } => {
            // tilted compound Poisson: rate λG(θ), jumps tilted by e^{θx}
            let g = jumps.mgf(&[theta]);
            let tilted_jumps = jumps.tilted(&[theta]).expect("finite tilt");
            let n = rand_distr::Poisson::new(rate * g * t).unwrap().sample(rng) as u64;
            let mut s = 0.0;
            for _ in 0..n {
                s += tilted_jumps.sample(rng)[0];
            }
            s
        }
        LevyKind::DeterministicDrift { mu } => mu[0] * t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::TriangularSummandModel;
    use crate::linalg::Matrix;
    use crate::mittag_leffler::ml_eval;
    use crate::quadrature::adaptive_simpson;
    use crate::random_time::{
        sample_time_changed, Clock, InverseStableModel, ScalingFamily, ScalingRegime,
    };

    #[test]
    fn poisson_moderate_scgf_is_tight() {
        // exact-λ schedule: error λ·p_n·u²/2, decreasing in n
        let jumps = JumpMixture::unit_point_mass();
        let grid: Vec<Vec<f64>> = vec![vec![-0.25], vec![-0.1], vec![0.1], vec![0.25]];
        let check =
            scgf_poisson_moderate(&jumps, 1.0, 0.2, grid, vec![1e3, 1e4, 1e5, 1e6], 1e-6).unwrap();
        let report = run_scgf_check(&check).unwrap();
        assert!(report.pass, "{report:?}");
        // exact at θ = 0
        let check0 = scgf_poisson_moderate(
            &JumpMixture::unit_point_mass(),
            1.0,
            0.2,
            vec![vec![0.0]],
            vec![10.0, 100.0],
            0.0,
        )
        .unwrap();
        let r0 = run_scgf_check(&check0).unwrap();
        assert_eq!(r0.final_error, 0.0);
    }

    #[test]
    fn levy_moderate_gamma_clock_example() {
        // Gamma(1,1) clock, κ_S = θ²/2, a_t = t^{−1/2}, θ = 1:
        // prelimit √t·(−log(1 − 0.5/√t)) → 0.5 with error ≈ 0.125/√t.
        let levy = LevyModel::standard_brownian(1);
        let clock = SubordinatorModel::gamma(1.0, 1.0).unwrap();
        let check = scgf_levy_moderate(
            &levy,
            &clock,
            0.5,
            vec![vec![1.0]],
            vec![1e2, 1e4, 1e6],
            1e-3,
        )
        .unwrap();
        let report = run_scgf_check(&check).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.final_error <= 1.3e-4, "err {}", report.final_error);
    }

    #[test]
    fn levy_reference_prelimit_is_exact() {
        let levy = LevyModel::standard_brownian(1);
        let clock = SubordinatorModel::poisson(2.0).unwrap();
        let check = scgf_levy_reference(
            &levy,
            &clock,
            vec![vec![0.5], vec![-0.3]],
            vec![10.0, 100.0],
            1e-12,
        )
        .unwrap();
        let report = run_scgf_check(&check).unwrap();
        assert!(report.pass);
        assert_eq!(report.final_error, 0.0);
    }

    #[test]
    fn imm_moderate_drift_free_example() {
        // ν = 1/2, Q = 1, a_t = t^{−1/2}, θ = 1: limit (θ²/2)² = 0.25 with
        // error ≈ (log 2)·t^{−1/2}.
        let levy = LevyModel::standard_brownian(1);
        let check = scgf_imm_moderate(
            &levy,
            0.5,
            0.5,
            vec![vec![1.0], vec![0.5]],
            vec![1e4, 1e6, 1e8],
            1e-4,
        )
        .unwrap();
        let report = run_scgf_check(&check).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(
            (report.final_error - 0.693e-4).abs() < 0.2e-4,
            "err {}",
            report.final_error
        );
    }

    #[test]
    fn imm_moderate_drift_case_negative_side() {
        // drift driver: limit vanishes on ⟨θ,m⟩ < 0, exercising the
        // negative-argument log evaluation
        let levy = LevyModel::deterministic_drift(vec![1.0]);
        let check = scgf_imm_moderate(
            &levy,
            0.5,
            0.5,
            vec![vec![-1.0], vec![0.5], vec![1.0]],
            vec![1e4, 1e6, 1e8],
            2e-3,
        )
        .unwrap();
        let report = run_scgf_check(&check).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn non_finite_prelimit_is_reported() {
        // Gamma clock pole: at tiny t the inner argument crosses the pole
        let levy = LevyModel::standard_brownian(1);
        let clock = SubordinatorModel::gamma(1.0, 1.0).unwrap();
        let check =
            scgf_levy_moderate(&levy, &clock, 0.5, vec![vec![2.0]], vec![1.0, 1e2], 1e-3).unwrap();
        assert!(matches!(
            run_scgf_check(&check),
            Err(LabError::NonFinitePrelimit { .. })
        ));
    }

    #[test]
    fn scgf_prefix_reporting_is_monotone() {
        let jumps = JumpMixture::unit_point_mass();
        let grid: Vec<Vec<f64>> = vec![vec![0.2]];
        let full = scgf_poisson_moderate(
            &jumps,
            1.0,
            0.2,
            grid.clone(),
            vec![1e2, 1e3, 1e4, 1e5],
            1e-3,
        )
        .unwrap();
        let prefix =
            scgf_poisson_moderate(&jumps, 1.0, 0.2, grid, vec![1e2, 1e3, 1e4], 1e-3).unwrap();
        let rf = run_scgf_check(&full).unwrap();
        let rp = run_scgf_check(&prefix).unwrap();
        // identical errors at the common horizons
        for (a, b) in rf.per_horizon_error.iter().zip(&rp.per_horizon_error) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn weak_convergence_compound_poisson_limit() {
        // §-style triangular array: n = 10⁴, p_n = λ/n, λ = 2, θ = 0.3;
        // target exp(λ(e^θ − 1)) computed by arithmetic.
        let lambda = 2.0;
        let n = 10_000u64;
        let summand =
            TriangularSummandModel::new(lambda / n as f64, JumpMixture::unit_point_mass()).unwrap();
        let check = WeakConvergenceCheck {
            label: "poisson-weak".into(),
            sampler: Arc::new(
                move |batch, seed| Ok(summand.sample_sum_batch(n, 1.0, batch, seed)?),
            ),
            target_mgf: Arc::new(move |theta: &[f64]| (lambda * theta[0].exp_m1()).exp()),
            grid: vec![vec![0.0], vec![0.3], vec![-0.5]],
            batch_size: 100_000,
            se_multiplier: 4.0,
        };
        let report = run_weak_convergence(&check, 5).unwrap();
        assert!(report.pass, "{report:?}");
        // θ = 0 row is exact
        assert_eq!(report.rows[0].z, 0.0);
    }

    #[test]
    fn weak_convergence_imm_limit() {
        let nu = 0.5;
        let levy = LevyModel::standard_brownian(2);
        let check = WeakConvergenceCheck {
            label: "imm-weak".into(),
            sampler: Arc::new(move |batch, seed| {
                let clock = Clock::InverseStable(InverseStableModel::new(nu).unwrap());
                let scaling = ScalingRegime::inverse_stable(nu, true, ScalingFamily::Constant);
                Ok(
                    sample_time_changed(&levy, &clock, 1e4, &scaling, batch, seed).map_err(
                        |e| match e {
                            crate::random_time::RandomTimeError::Model(m) => LabError::Model(m),
                            other => LabError::Rate(RateError::InvalidParameter(other.to_string())),
                        },
                    )?,
                )
            }),
            target_mgf: Arc::new(move |theta: &[f64]| {
                let q = theta[0] * theta[0] + theta[1] * theta[1];
                ml_eval(nu, 0.5 * q).unwrap()
            }),
            grid: vec![vec![0.5, 0.0], vec![0.2, 0.2]],
            batch_size: 50_000,
            se_multiplier: 4.0,
        };
        let report = run_weak_convergence(&check, 6).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn weak_convergence_guards() {
        let check = WeakConvergenceCheck {
            label: "guard".into(),
            sampler: Arc::new(|batch, seed| {
                Ok(LevyModel::standard_brownian(1).sample_batch(1.0, batch, seed)?)
            }),
            target_mgf: Arc::new(|_: &[f64]| f64::INFINITY),
            grid: vec![vec![1.0]],
            batch_size: 100,
            se_multiplier: 4.0,
        };
        assert!(matches!(
            run_weak_convergence(&check, 0),
            Err(LabError::TooFewDraws(100))
        ));
        let check = WeakConvergenceCheck {
            batch_size: 10_000,
            ..check
        };
        assert!(matches!(
            run_weak_convergence(&check, 0),
            Err(LabError::TargetInfinite { .. })
        ));
    }

    #[test]
    fn binomial_tail_enumeration_is_consistent() {
        // total mass 1 within 1e-12, complement splits exactly
        let (n, p) = (5000u64, 0.37);
        let total = binomial_range_log_prob(n, p, 0, n);
        assert!(total.abs() < 1e-12, "total {total}");
        let k = 2000;
        let upper = binomial_tail_log_prob(n, p, k);
        let lower = binomial_range_log_prob(n, p, 0, k - 1);
        let sum = upper.exp() + lower.exp();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binomial_ld_tail_decay() {
        // d_n = (1/n) log P(S_n/n ≥ 0.75) → −I_LD(0.75) ≈ −0.130812
        let p = 0.5;
        let target = -crate::rate_functions::binomial_poisson_rates(0.75, p).0;
        let check = TailDecayCheck {
            label: "binomial-ld".into(),
            estimator: TailEstimator::BinomialExact {
                p_of_n: Arc::new(move |_| p),
                scale_of_n: Arc::new(|n| 1.0 / n),
                speed_of_n: Arc::new(|n| n),
            },
            threshold: 0.75,
            horizons: vec![250.0, 500.0, 1000.0, 2000.0],
            target,
            tolerance: 0.01,
        };
        let report = run_tail_decay(&check, 0).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn binomial_md_tail_decay() {
        // a_n = n^{−1/2}, λ = p = 0.5: d_n → −I_MD(0.75) ≈ −0.054099
        let lambda = 0.5;
        let target = -crate::rate_functions::binomial_poisson_rates(0.75, lambda).1;
        let check = TailDecayCheck {
            label: "binomial-md".into(),
            estimator: TailEstimator::BinomialExact {
                p_of_n: Arc::new(move |n: f64| lambda / (n * n.powf(-0.5))),
                scale_of_n: Arc::new(|n: f64| n.powf(-0.5)),
                speed_of_n: Arc::new(|n: f64| n.powf(0.5)),
            },
            threshold: 0.75,
            horizons: vec![1e3, 1e4, 1e5],
            target,
            tolerance: 0.02,
        };
        let report = run_tail_decay(&check, 0).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn tilted_estimator_is_unbiased_on_gaussian_half_line() {
        // P(Z ≥ 3) against the quadrature value, within 3 SE.
        let model = LevyModel::standard_brownian(1);
        let quad = adaptive_simpson(
            &|u: f64| (-0.5 * u * u).exp() / (2.0 * core::f64::consts::PI).sqrt(),
            3.0,
            14.0,
            1e-14,
        );
        let row = tilted_half_space(&model, 3.0, 1.0, Some(3.0), 200_000, 77).unwrap();
        let p_hat = row.scaled_log_prob.exp();
        let se_p = p_hat * row.se; // delta method back to probability scale
        assert!(
            (p_hat - quad).abs() < 3.0 * se_p,
            "p_hat {p_hat}, quad {quad}, se {se_p}"
        );
    }

    #[test]
    fn plain_monte_carlo_reports_zero_probability() {
        let model = LevyModel::standard_brownian(1);
        let check = TailDecayCheck {
            label: "hopeless".into(),
            estimator: TailEstimator::TiltedMonteCarlo {
                model,
                tilt: None,
                batch: 20_000,
            },
            threshold: 12.0,
            horizons: vec![1.0],
            target: -72.0,
            tolerance: 1.0,
        };
        assert!(matches!(
            run_tail_decay(&check, 1),
            Err(LabError::ZeroProbabilityEstimate)
        ));
    }

    #[test]
    fn whole_space_set_has_zero_rate() {
        // threshold at −∞ makes the set everything: d_n = 0 = target
        let check = TailDecayCheck {
            label: "whole-space".into(),
            estimator: TailEstimator::BinomialExact {
                p_of_n: Arc::new(|_| 0.5),
                scale_of_n: Arc::new(|n| 1.0 / n),
                speed_of_n: Arc::new(|n| n),
            },
            threshold: -1.0,
            horizons: vec![100.0, 1000.0],
            target: 0.0,
            tolerance: 1e-12,
        };
        let report = run_tail_decay(&check, 0).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.final_gap < 1e-12);
    }
}
