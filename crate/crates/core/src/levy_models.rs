//! Driving processes: cumulant generating functions paired with exact
//! fixed-t samplers.
//!
//! Three families cover every experiment in the crate: multivariate Lévy
//! drivers S (Brownian with drift, compound Poisson, deterministic drift),
//! scalar subordinator clocks V (gamma, Poisson, drift-free stable), and the
//! i.i.d. triangular-array summands with MGF 1 − p + p G(θ).
//!
//! Cumulants return `+∞` outside their effective domain rather than
//! extrapolating, so suprema over θ see the true extended-real function.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Poisson as PoissonDist, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::rng::{stream_rng, SampleBatch, StreamDomain};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

pub type CumulantFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A cumulant generating function κ with its local data at the origin.
///
/// `domain_radius` is a guarantee (κ finite on the open ball of that
/// radius), not the exact effective domain; `eval` itself is authoritative
/// and returns `+∞` where κ diverges. `essentially_smooth` is declared
/// model metadata, not derived.
#[derive(Clone)]
pub struct CumulantSpec {
    pub dim: usize,
    eval: CumulantFn,
    pub grad0: Vec<f64>,
    pub hess0: Matrix,
    pub domain_radius: f64,
    pub essentially_smooth: bool,
}

impl std::fmt::Debug for CumulantSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulantSpec")
            .field("dim", &self.dim)
            .field("grad0", &self.grad0)
            .field("domain_radius", &self.domain_radius)
            .field("essentially_smooth", &self.essentially_smooth)
            .finish()
    }
}

impl CumulantSpec {
    pub fn new(
        dim: usize,
        eval: CumulantFn,
        grad0: Vec<f64>,
        hess0: Matrix,
        domain_radius: f64,
        essentially_smooth: bool,
    ) -> Result<Self, ModelError> {
        if dim == 0 || grad0.len() != dim || hess0.dim() != dim {
            return Err(ModelError::InvalidParameter(format!(
                "cumulant dimension mismatch: dim={dim}, grad0 len {}, hess0 dim {}",
                grad0.len(),
                hess0.dim()
            )));
        }
        if !(domain_radius > 0.0) {
            return Err(ModelError::InvalidParameter(
                "domain_radius must be positive".into(),
            ));
        }
        Ok(CumulantSpec {
            dim,
            eval,
            grad0,
            hess0,
            domain_radius,
            essentially_smooth,
        })
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.dim);
        (self.eval)(theta)
    }

    pub fn eval_fn(&self) -> CumulantFn {
        Arc::clone(&self.eval)
    }

    /// Central-difference gradient at the origin; step scaled to the domain.
    pub fn finite_difference_grad0(&self) -> Vec<f64> {
        let h = 1e-4 * self.domain_radius.min(1.0);
        let mut g = vec![0.0; self.dim];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut up = vec![0.0; self.dim];
            let mut dn = vec![0.0; self.dim];
            up[i] = h;
            dn[i] = -h;
            *gi = (self.eval(&up) - self.eval(&dn)) / (2.0 * h);
        }
        g
    }

    /// Central-difference Hessian at the origin.
    pub fn finite_difference_hess0(&self) -> Matrix {
        let h = 1e-4 * self.domain_radius.min(1.0);
        let n = self.dim;
        let mut m = Matrix::zeros(n);
        let at = |pts: &[(usize, f64)]| {
            let mut t = vec![0.0; n];
            for &(i, v) in pts {
                t[i] += v;
            }
            self.eval(&t)
        };
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    (at(&[(i, h)]) - 2.0 * at(&[]) + at(&[(i, -h)])) / (h * h)
                } else {
                    (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                        + at(&[(i, -h), (j, -h)]))
                        / (4.0 * h * h)
                };
                m.set(i, j, v);
            }
        }
        m
    }

    /// Validates κ(0)=0, the declared origin data against finite differences,
    /// PSD of the Hessian, and midpoint convexity on random pairs.
    pub fn check_consistency(&self, seed: u64) -> Result<(), ModelError> {
        if self.eval(&vec![0.0; self.dim]).abs() > 1e-12 {
            return Err(ModelError::InvalidParameter("kappa(0) != 0".into()));
        }
        let fd = self.finite_difference_grad0();
        for (i, (a, b)) in fd.iter().zip(&self.grad0).enumerate() {
            if (a - b).abs() > 1e-5 * (1.0 + b.abs()) {
                return Err(ModelError::InvalidParameter(format!(
                    "grad0[{i}] = {b} disagrees with finite difference {a}"
                )));
            }
        }
        let fh = self.finite_difference_hess0();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let (a, b) = (fh.get(i, j), self.hess0.get(i, j));
                if (a - b).abs() > 1e-4 * (1.0 + b.abs()) {
                    return Err(ModelError::InvalidParameter(format!(
                        "hess0[{i},{j}] = {b} disagrees with finite difference {a}"
                    )));
                }
            }
        }
        if !self.hess0.is_positive_semidefinite(1e-8) {
            return Err(ModelError::InvalidParameter(
                "hess0 is not positive semidefinite".into(),
            ));
        }
        // midpoint convexity probe on random pairs in the guaranteed ball
        let mut rng = stream_rng(seed, StreamDomain::Harness, 0);
        let r = 0.5 * self.domain_radius.min(2.0);
        for _ in 0..100 {
            let a: Vec<f64> = (0..self.dim)
                .map(|_| r * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            let b: Vec<f64> = (0..self.dim)
                .map(|_| r * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (fa, fb, fm) = (self.eval(&a), self.eval(&b), self.eval(&mid));
            if fa.is_finite() && fb.is_finite() && fm > 0.5 * (fa + fb) + 1e-12 {
                return Err(ModelError::InvalidParameter(format!(
                    "convexity violated at midpoint of {a:?}, {b:?}"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Jump mixtures
// ---------------------------------------------------------------------------

/// One component of a jump distribution.
#[derive(Debug, Clone)]
pub enum JumpComponent {
    PointMass(Vec<f64>),
    Gaussian { mean: Vec<f64>, cov: Matrix },
}

/// Finite mixture of point masses and Gaussians, so the jump MGF G, its
/// gradient and second moment are all available in closed form.
#[derive(Debug, Clone)]
pub struct JumpMixture {
    dim: usize,
    components: Vec<(f64, JumpComponent)>,
    cached_chol: Vec<Option<Matrix>>,
}

impl JumpMixture {
    pub fn new(dim: usize, components: Vec<(f64, JumpComponent)>) -> Result<Self, ModelError> {
        if components.is_empty() {
            return Err(ModelError::InvalidParameter("empty jump mixture".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if (total - 1.0).abs() > 1e-12 || components.iter().any(|(w, _)| *w <= 0.0) {
            return Err(ModelError::InvalidParameter(
                "mixture weights must be positive and sum to 1".into(),
            ));
        }
        let mut cached_chol = Vec::with_capacity(components.len());
        for (_, c) in &components {
            match c {
                JumpComponent::PointMass(x) => {
                    if x.len() != dim {
                        return Err(ModelError::InvalidParameter(
                            "point mass dimension mismatch".into(),
                        ));
                    }
                    cached_chol.push(None);
                }
                JumpComponent::Gaussian { mean, cov } => {
                    if mean.len() != dim || cov.dim() != dim {
                        return Err(ModelError::InvalidParameter(
                            "gaussian component dimension mismatch".into(),
                        ));
                    }
                    cached_chol.push(Some(cov.cholesky()?));
                }
            }
        }
        Ok(JumpMixture {
            dim,
            components,
            cached_chol,
        })
    }

    /// Point mass at +1 in dimension 1; the Bernoulli/Binomial workhorse.
    pub fn unit_point_mass() -> Self {
        JumpMixture::new(1, vec![(1.0, JumpComponent::PointMass(vec![1.0]))]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[(f64, JumpComponent)] {
        &self.components
    }

    /// G(θ) = E[e^{⟨θ,J⟩}]; entire, but may overflow to +∞ in f64.
    pub fn mgf(&self, theta: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|(w, c)| match c {
                JumpComponent::PointMass(x) => w * dot(theta, x).exp(),
                JumpComponent::Gaussian { mean, cov } => {
                    w * (dot(theta, mean) + 0.5 * cov.quadratic_form(theta)).exp()
                }
            })
            .sum()
    }

    /// log G(θ) by log-sum-exp over the components; finite for every θ even
    /// where G itself overflows f64.
    pub fn log_mgf(&self, theta: &[f64]) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|(w, c)| {
                w.ln()
                    + match c {
                        JumpComponent::PointMass(x) => dot(theta, x),
                        JumpComponent::Gaussian { mean, cov } => {
                            dot(theta, mean) + 0.5 * cov.quadratic_form(theta)
                        }
                    }
            })
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }

    /// ∇G(0) = E[J].
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (w, c) in &self.components {
            let cm = match c {
                JumpComponent::PointMass(x) => x.clone(),
                JumpComponent::Gaussian { mean, .. } => mean.clone(),
            };
            for (mi, v) in m.iter_mut().zip(cm) {
                *mi += w * v;
            }
        }
        m
    }

    /// E[J Jᵀ], the Hessian of G at the origin.
    pub fn second_moment(&self) -> Matrix {
        let mut s = Matrix::zeros(self.dim);
        for (w, c) in &self.components {
            match c {
                JumpComponent::PointMass(x) => {
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            s.set(i, j, s.get(i, j) + w * x[i] * x[j]);
                        }
                    }
                }
                JumpComponent::Gaussian { mean, cov } => {
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            s.set(i, j, s.get(i, j) + w * (cov.get(i, j) + mean[i] * mean[j]));
                        }
                    }
                }
            }
        }
        s
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let mut u: f64 = rng.random();
        let mut idx = self.components.len() - 1;
        for (i, (w, _)) in self.components.iter().enumerate() {
            if u < *w {
                idx = i;
                break;
            }
            u -= w;
        }
        match &self.components[idx].1 {
            JumpComponent::PointMass(x) => x.clone(),
            JumpComponent::Gaussian { mean, .. } => {
                let l = self.cached_chol[idx].as_ref().unwrap();
                let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let lz = l.matvec(&z);
                mean.iter().zip(lz).map(|(m, v)| m + v).collect()
            }
        }
    }

    /// Exponentially tilted mixture: dF*(x) ∝ e^{⟨θ,x⟩} dF(x). Point masses
    /// are reweighted, Gaussian components are reweighted and mean-shifted.
    pub fn tilted(&self, theta: &[f64]) -> Result<JumpMixture, ModelError> {
        let g = self.mgf(theta);
        if !g.is_finite() {
            return Err(ModelError::InvalidParameter(
                "tilt parameter overflows the jump MGF".into(),
            ));
        }
        let comps = self
            .components
            .iter()
            .map(|(w, c)| match c {
                JumpComponent::PointMass(x) => (
                    w * dot(theta, x).exp() / g,
                    JumpComponent::PointMass(x.clone()),
                ),
                JumpComponent::Gaussian { mean, cov } => {
                    let w2 = w * (dot(theta, mean) + 0.5 * cov.quadratic_form(theta)).exp() / g;
                    let shifted: Vec<f64> = mean
                        .iter()
                        .zip(cov.matvec(theta))
                        .map(|(m, s)| m + s)
                        .collect();
                    (
                        w2,
                        JumpComponent::Gaussian {
                            mean: shifted,
                            cov: cov.clone(),
                        },
                    )
                }
            })
            .collect();
        JumpMixture::new(self.dim, comps)
    }
}

// ---------------------------------------------------------------------------
// Lévy drivers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum LevyKind {
    BrownianWithDrift { mu: Vec<f64>, sigma: Matrix },
    CompoundPoisson { rate: f64, jumps: JumpMixture },
    DeterministicDrift { mu: Vec<f64> },
}

/// An ℝ^h-valued Lévy process with exact fixed-t marginals.
#[derive(Debug, Clone)]
pub struct LevyModel {
    kind: LevyKind,
    cumulant: CumulantSpec,
    chol: Option<Matrix>,
}

impl LevyModel {
    pub fn brownian(mu: Vec<f64>, sigma: Matrix) -> Result<Self, ModelError> {
        let dim = mu.len();
        if sigma.dim() != dim {
            return Err(ModelError::InvalidParameter(
                "drift and covariance dimensions differ".into(),
            ));
        }
        let chol = sigma.cholesky()?;
        let mu_c = mu.clone();
        let sig_c = sigma.clone();
        let cumulant = CumulantSpec::new(
            dim,
            Arc::new(move |theta: &[f64]| dot(theta, &mu_c) + 0.5 * sig_c.quadratic_form(theta)),
            mu.clone(),
            sigma.clone(),
            f64::INFINITY,
            true,
        )?;
        Ok(LevyModel {
            kind: LevyKind::BrownianWithDrift { mu, sigma },
            cumulant,
            chol: Some(chol),
        })
    }

    pub fn standard_brownian(dim: usize) -> Self {
        LevyModel::brownian(vec![0.0; dim], Matrix::identity(dim)).unwrap()
    }

    pub fn compound_poisson(rate: f64, jumps: JumpMixture) -> Result<Self, ModelError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "compound Poisson rate must be positive, got {rate}"
            )));
        }
        let dim = jumps.dim();
        let jumps_c = jumps.clone();
        let grad0: Vec<f64> = jumps.mean().iter().map(|m| rate * m).collect();
        let hess0 = jumps.second_moment().scaled(rate);
        let cumulant = CumulantSpec::new(
            dim,
            Arc::new(move |theta: &[f64]| {
                let g = jumps_c.mgf(theta);
                if g.is_finite() {
                    rate * (g - 1.0)
                } else {
                    f64::INFINITY
                }
            }),
            grad0,
            hess0,
            f64::INFINITY,
            true,
        )?;
        Ok(LevyModel {
            kind: LevyKind::CompoundPoisson { rate, jumps },
            cumulant,
            chol: None,
        })
    }

    pub fn deterministic_drift(mu: Vec<f64>) -> Self {
        let dim = mu.len();
        let mu_c = mu.clone();
        let cumulant = CumulantSpec::new(
            dim,
            Arc::new(move |theta: &[f64]| dot(theta, &mu_c)),
            mu.clone(),
            Matrix::zeros(dim),
            f64::INFINITY,
            true,
        )
        .unwrap();
        LevyModel {
            kind: LevyKind::DeterministicDrift { mu },
            cumulant,
            chol: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.cumulant.dim
    }

    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    pub fn cumulant(&self) -> &CumulantSpec {
        &self.cumulant
    }

    /// κ_S(θ).
    pub fn kappa(&self, theta: &[f64]) -> f64 {
        self.cumulant.eval(theta)
    }

    /// One draw of S(t).
    pub fn sample(&self, t: f64, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(t, rng, &mut out);
        out
    }

    pub(crate) fn sample_into(&self, t: f64, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if t == 0.0 {
            return;
        }
        match &self.kind {
            LevyKind::BrownianWithDrift { mu, .. } => {
                let l = self.chol.as_ref().unwrap();
                let z: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
                let lz = l.matvec(&z);
                let st = t.sqrt();
                for ((o, m), v) in out.iter_mut().zip(mu).zip(lz) {
                    *o = m * t + st * v;
                }
            }
            LevyKind::CompoundPoisson { rate, jumps } => {
                let n = PoissonDist::new(rate * t).unwrap().sample(rng) as u64;
                for _ in 0..n {
                    let j = jumps.sample(rng);
                    for (o, v) in out.iter_mut().zip(j) {
                        *o += v;
                    }
                }
            }
            LevyKind::DeterministicDrift { mu } => {
                for (o, m) in out.iter_mut().zip(mu) {
                    *o = m * t;
                }
            }
        }
    }

    /// n independent draws of S(t); bit-identical for identical inputs and
    /// independent of thread count.
    pub fn sample_batch(&self, t: f64, n: usize, seed: u64) -> Result<SampleBatch, ModelError> {
        validate_batch(t, n)?;
        let dim = self.dim();
        let mut data = vec![0.0; n * dim];
        data.par_chunks_mut(dim).enumerate().for_each(|(i, out)| {
            let mut rng = stream_rng(seed, StreamDomain::Driver, i as u64);
            self.sample_into(t, &mut rng, out);
        });
        Ok(SampleBatch::from_rows(dim, data, seed))
    }
}

fn validate_batch(t: f64, n: usize) -> Result<(), ModelError> {
    if !t.is_finite() || t < 0.0 {
        return Err(ModelError::BadTime(t));
    }
    if n == 0 {
        return Err(ModelError::EmptyBatch);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subordinators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum SubordinatorKind {
    /// V(t) ~ Gamma(shape·t, rate); κ_V(η) = −shape·log(1 − η/rate).
    Gamma { shape: f64, rate: f64 },
    /// V(t) ~ Poisson(rate·t); κ_V(η) = rate·(e^η − 1).
    Poisson { rate: f64 },
    /// ν-stable subordinator, E[e^{ηV(1)}] = e^{−(−η)^ν} for η ≤ 0 only;
    /// sampling-only — no cumulant data at the origin exists.
    StableDriftFree { nu: f64 },
}

/// Nondecreasing Lévy clock.
#[derive(Debug, Clone)]
pub struct SubordinatorModel {
    kind: SubordinatorKind,
    cumulant: Option<CumulantSpec>,
}

impl SubordinatorModel {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self, ModelError> {
        if !(shape > 0.0 && rate > 0.0) {
            return Err(ModelError::InvalidParameter(
                "gamma subordinator needs positive shape and rate".into(),
            ));
        }
        let cumulant = CumulantSpec::new(
            1,
            Arc::new(move |eta: &[f64]| {
                if eta[0] < rate {
                    -shape * (-eta[0] / rate).ln_1p()
                } else {
                    f64::INFINITY
                }
            }),
            vec![shape / rate],
            Matrix::diagonal(&[shape / (rate * rate)]),
            rate,
            true,
        )?;
        Ok(SubordinatorModel {
            kind: SubordinatorKind::Gamma { shape, rate },
            cumulant: Some(cumulant),
        })
    }

    pub fn poisson(rate: f64) -> Result<Self, ModelError> {
        if !(rate > 0.0) {
            return Err(ModelError::InvalidParameter(
                "poisson subordinator needs a positive rate".into(),
            ));
        }
        let cumulant = CumulantSpec::new(
            1,
            Arc::new(move |eta: &[f64]| rate * eta[0].exp_m1()),
            vec![rate],
            Matrix::diagonal(&[rate]),
            f64::INFINITY,
            true,
        )?;
        Ok(SubordinatorModel {
            kind: SubordinatorKind::Poisson { rate },
            cumulant: Some(cumulant),
        })
    }

    pub fn stable(nu: f64) -> Result<Self, ModelError> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "stable index must lie in (0,1), got {nu}"
            )));
        }
        Ok(SubordinatorModel {
            kind: SubordinatorKind::StableDriftFree { nu },
            cumulant: None,
        })
    }

    pub fn kind(&self) -> &SubordinatorKind {
        &self.kind
    }

    /// Cumulant data at the origin; `None` for the stable kind, whose κ_V is
    /// +∞ on every right-neighborhood of 0.
    pub fn cumulant(&self) -> Option<&CumulantSpec> {
        self.cumulant.as_ref()
    }

    /// κ_V(η) as an extended real.
    pub fn kappa_v(&self, eta: f64) -> f64 {
        match self.kind {
            SubordinatorKind::Gamma { shape, rate } => {
                if eta < rate {
                    -shape * (-eta / rate).ln_1p()
                } else {
                    f64::INFINITY
                }
            }
            SubordinatorKind::Poisson { rate } => rate * eta.exp_m1(),
            SubordinatorKind::StableDriftFree { nu } => {
                if eta <= 0.0 {
                    -(-eta).powf(nu)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// κ_V′(0) = E[V(1)]; `None` for the stable kind (infinite mean).
    pub fn mean_rate(&self) -> Option<f64> {
        match self.kind {
            SubordinatorKind::Gamma { shape, rate } => Some(shape / rate),
            SubordinatorKind::Poisson { rate } => Some(rate),
            SubordinatorKind::StableDriftFree { .. } => None,
        }
    }

    pub fn sample(&self, t: f64, rng: &mut ChaCha12Rng) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.kind {
            SubordinatorKind::Gamma { shape, rate } => {
                GammaDist::new(shape * t, 1.0 / rate).unwrap().sample(rng)
            }
            SubordinatorKind::Poisson { rate } => PoissonDist::new(rate * t).unwrap().sample(rng),
            SubordinatorKind::StableDriftFree { nu } => {
                // marginal self-similarity: V(t) =_d t^{1/ν} V(1)
                t.powf(1.0 / nu) * positive_stable(nu, rng)
            }
        }
    }

    pub fn sample_batch(&self, t: f64, n: usize, seed: u64) -> Result<SampleBatch, ModelError> {
        validate_batch(t, n)?;
        let mut data = vec![0.0; n];
        data.par_chunks_mut(1).enumerate().for_each(|(i, out)| {
            let mut rng = stream_rng(seed, StreamDomain::Clock, i as u64);
            out[0] = self.sample(t, &mut rng);
        });
        Ok(SampleBatch::from_rows(1, data, seed))
    }
}

/// One draw of the standard positive ν-stable law with Laplace transform
/// e^{−s^ν}, by the Chambers–Mallows–Stuck construction (exact, no
/// discretization).
pub fn positive_stable(nu: f64, rng: &mut ChaCha12Rng) -> f64 {
    let u = core::f64::consts::PI * clamp_open01(rng.random());
    let w = -clamp_open01(rng.random::<f64>()).ln();
    let s1 = (nu * u).sin() / u.sin().powf(1.0 / nu);
    let s2 = (((1.0 - nu) * u).sin() / w).powf((1.0 - nu) / nu);
    s1 * s2
}

#[inline]
fn clamp_open01(u: f64) -> f64 {
    u.clamp(1e-12, 1.0 - 1e-12)
}

// ---------------------------------------------------------------------------
// Triangular-array summands
// ---------------------------------------------------------------------------

/// One summand X(p): zero with probability 1 − p, otherwise a jump with
/// MGF G, so E[e^{⟨θ,X⟩}] = 1 − p + p G(θ).
#[derive(Debug, Clone)]
pub struct TriangularSummandModel {
    pub p: f64,
    pub jumps: JumpMixture,
}

impl TriangularSummandModel {
    pub fn new(p: f64, jumps: JumpMixture) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidParameter(format!(
                "probability of a nonzero value must lie in [0,1], got {p}"
            )));
        }
        Ok(TriangularSummandModel { p, jumps })
    }

    pub fn dim(&self) -> usize {
        self.jumps.dim()
    }

    /// E[e^{⟨θ,X⟩}] = 1 − p + p G(θ); +∞ exactly when G(θ) = +∞.
    pub fn mgf(&self, theta: &[f64]) -> f64 {
        let g = self.jumps.mgf(theta);
        if g.is_finite() {
            1.0 - self.p + self.p * g
        } else {
            f64::INFINITY
        }
    }

    pub fn sample_summand(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        if rng.random::<f64>() < self.p {
            self.jumps.sample(rng)
        } else {
            vec![0.0; self.dim()]
        }
    }

    /// X₁ + … + Xₙ drawn exactly: the nonzero count is Binomial(n, p) and
    /// the corresponding jumps are summed.
    pub fn sample_sum(&self, n: u64, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let count = if self.p == 0.0 {
            0
        } else if self.p == 1.0 {
            n
        } else {
            rand_distr::Binomial::new(n, self.p).unwrap().sample(rng)
        };
        let mut out = vec![0.0; self.dim()];
        for _ in 0..count {
            for (o, v) in out.iter_mut().zip(self.jumps.sample(rng)) {
                *o += v;
            }
        }
        out
    }

    /// Batch of scaled sums a·(X₁ + … + Xₙ).
    pub fn sample_sum_batch(
        &self,
        n: u64,
        scale: f64,
        batch: usize,
        seed: u64,
    ) -> Result<SampleBatch, ModelError> {
        if batch == 0 {
            return Err(ModelError::EmptyBatch);
        }
        let dim = self.dim();
        let mut data = vec![0.0; batch * dim];
        data.par_chunks_mut(dim).enumerate().for_each(|(i, out)| {
            let mut rng = stream_rng(seed, StreamDomain::Jumps, i as u64);
            let s = self.sample_sum(n, &mut rng);
            for (o, v) in out.iter_mut().zip(s) {
                *o = scale * v;
            }
        });
        Ok(SampleBatch::from_rows(dim, data, seed))
    }
}

/// MGF of one triangular-array summand: 1 − p + p G(θ).
pub fn mgf_of_summand(model: &TriangularSummandModel, theta: &[f64]) -> f64 {
    model.mgf(theta)
}
