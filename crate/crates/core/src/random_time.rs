//! Random time changes: inverse stable subordinator marginals L_ν(t) and the
//! scaled compositions S(L_ν(t)) and S(V(t)) that every limit statement in
//! this crate is about.
//!
//! Only fixed-t marginals are ever sampled. For the inverse stable clock the
//! marginal comes from self-similarity of the stable subordinator,
//! L_ν(t) =_d (t / S_ν(1))^ν, with S_ν(1) drawn exactly by
//! Chambers–Mallows–Stuck. Clock and driver always consume separate RNG
//! streams, so their independence is structural.

use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::levy_models::{positive_stable, LevyModel, ModelError, SubordinatorModel};
use crate::rng::{stream_rng, SampleBatch, StreamDomain};

#[derive(Debug, Error)]
pub enum RandomTimeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scaling regime inconsistent with clock: {0}")]
    InconsistentScaling(String),
}

/// Inverse stable subordinator L_ν: first passage of a ν-stable subordinator.
#[derive(Debug, Clone, Copy)]
pub struct InverseStableModel {
    pub nu: f64,
}

impl InverseStableModel {
    pub fn new(nu: f64) -> Result<Self, ModelError> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "inverse stable index must lie in (0,1), got {nu}"
            )));
        }
        Ok(InverseStableModel { nu })
    }

    /// One draw of L_ν(t) = (t / S_ν(1))^ν in distribution.
    pub fn sample(&self, t: f64, rng: &mut ChaCha12Rng) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        (t / positive_stable(self.nu, rng)).powf(self.nu)
    }

    pub fn sample_batch(&self, t: f64, n: usize, seed: u64) -> Result<SampleBatch, ModelError> {
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::BadTime(t));
        }
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        let mut data = vec![0.0; n];
        data.par_chunks_mut(1).enumerate().for_each(|(i, out)| {
            let mut rng = stream_rng(seed, StreamDomain::Clock, i as u64);
            out[0] = self.sample(t, &mut rng);
        });
        Ok(SampleBatch::from_rows(1, data, seed))
    }
}

/// n i.i.d. draws of L_ν(t).
pub fn sample_inverse_stable(
    model: &InverseStableModel,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<SampleBatch, ModelError> {
    model.sample_batch(t, n, seed)
}

/// The exponent α(ν): 1 − ν/2 when ∇κ_S(0) = 0, else 1 − ν.
pub fn alpha_exponent(nu: f64, drift_free: bool) -> f64 {
    if drift_free {
        1.0 - nu / 2.0
    } else {
        1.0 - nu
    }
}

/// The normalization family a_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFamily {
    /// a_t ≡ 1: the weak-convergence endpoint (a_t → 0 fails).
    Constant,
    /// a_t = t^{−β} with β ∈ (0,1): a_t → 0 and t·a_t → ∞ both hold.
    PowerLaw { beta: f64 },
    /// a_t = 1/t: the reference-LDP endpoint (t·a_t → ∞ fails).
    InverseTime,
}

impl ScalingFamily {
    pub fn power_law(beta: f64) -> Result<Self, ModelError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "power-law exponent must lie in (0,1), got {beta}"
            )));
        }
        Ok(ScalingFamily::PowerLaw { beta })
    }

    pub fn a(&self, t: f64) -> f64 {
        match *self {
            ScalingFamily::Constant => 1.0,
            ScalingFamily::PowerLaw { beta } => t.powf(-beta),
            ScalingFamily::InverseTime => 1.0 / t,
        }
    }

    /// True exactly for the families with a_t → 0 and t·a_t → ∞.
    pub fn is_moderate(&self) -> bool {
        matches!(self, ScalingFamily::PowerLaw { .. })
    }
}

/// Scaling data for a time-changed draw. `alpha` is required by the inverse
/// stable clock and must be absent for subordinator clocks, whose scaled
/// objects carry no exponent.
#[derive(Debug, Clone, Copy)]
pub struct ScalingRegime {
    pub family: ScalingFamily,
    pub alpha: Option<f64>,
}

impl ScalingRegime {
    /// Regime for S(L_ν(t)) draws; α(ν) is derived from the driver drift.
    pub fn inverse_stable(nu: f64, drift_free: bool, family: ScalingFamily) -> Self {
        ScalingRegime {
            family,
            alpha: Some(alpha_exponent(nu, drift_free)),
        }
    }

    /// Regime for S(V(t)) draws.
    pub fn subordinator(family: ScalingFamily) -> Self {
        ScalingRegime {
            family,
            alpha: None,
        }
    }
}

/// The random clock driving a time change.
#[derive(Debug, Clone)]
pub enum Clock {
    InverseStable(InverseStableModel),
    Subordinator(SubordinatorModel),
}

/// Draws of the exact scaled object selected by (clock kind, scaling):
///
/// * inverse stable clock: (a_t t)^α · S(L_ν(t)) / t, which specializes to
///   t^α S(L_ν(t))/t at a_t ≡ 1 and to S(L_ν(t))/t at a_t = 1/t;
/// * subordinator clock: a_t · S(V(t) / (t a_t)), which specializes to
///   S(V(t)/t) at a_t ≡ 1 and to S(V(t))/t at a_t = 1/t.
pub fn sample_time_changed(
    levy: &LevyModel,
    clock: &Clock,
    t: f64,
    scaling: &ScalingRegime,
    n: usize,
    seed: u64,
) -> Result<SampleBatch, RandomTimeError> {
    if !t.is_finite() || t < 0.0 {
        return Err(ModelError::BadTime(t).into());
    }
    if n == 0 {
        return Err(ModelError::EmptyBatch.into());
    }
    let dim = levy.dim();
    let a_t = scaling.family.a(t);
    let mut data = vec![0.0; n * dim];
    match clock {
        Clock::InverseStable(inv) => {
            let alpha = scaling.alpha.ok_or_else(|| {
                RandomTimeError::InconsistentScaling(
                    "inverse stable clock requires the exponent alpha".into(),
                )
            })?;
            let factor = if t == 0.0 {
                0.0
            } else {
                (a_t * t).powf(alpha) / t
            };
            data.par_chunks_mut(dim).enumerate().for_each(|(i, out)| {
                let mut clock_rng = stream_rng(seed, StreamDomain::Clock, i as u64);
                let mut driver_rng = stream_rng(seed, StreamDomain::Driver, i as u64);
                let l = inv.sample(t, &mut clock_rng);
                levy.sample_into(l, &mut driver_rng, out);
                out.iter_mut().for_each(|v| *v *= factor);
            });
        }
        Clock::Subordinator(sub) => {
            if scaling.alpha.is_some() {
                return Err(RandomTimeError::InconsistentScaling(
                    "subordinator clock takes no exponent".into(),
                ));
            }
            data.par_chunks_mut(dim).enumerate().for_each(|(i, out)| {
                let mut clock_rng = stream_rng(seed, StreamDomain::Clock, i as u64);
                let mut driver_rng = stream_rng(seed, StreamDomain::Driver, i as u64);
                let v = sub.sample(t, &mut clock_rng);
                let inner = if t == 0.0 { 0.0 } else { v / (t * a_t) };
                levy.sample_into(inner, &mut driver_rng, out);
                out.iter_mut().for_each(|x| *x *= a_t);
            });
        }
    }
    Ok(SampleBatch::from_rows(dim, data, seed))
}
