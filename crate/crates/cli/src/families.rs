//! The experiment registry: seventeen runnable families, each reproducing
//! one limit statement, inequality, or closed-form identity, with verdicts
//! and CSV tables as output.

use std::sync::Arc;

use ratelab_core::convergence_lab::{
    run_scgf_check, run_tail_decay, run_weak_convergence, scgf_imm_moderate, scgf_imm_reference,
    scgf_levy_moderate, scgf_levy_reference, scgf_poisson_moderate, scgf_poisson_reference,
    transformed_sum_batch, LabError, ScgfReport, SummandKind, TailDecayCheck, TailEstimator,
    WeakConvergenceCheck, WeakReport,
};
use ratelab_core::legendre::{conjugate, contract, ContractionProblem, FiberChart};
use ratelab_core::levy_models::{LevyKind, LevyModel};
use ratelab_core::linalg::Matrix;
use ratelab_core::mittag_leffler::MlParams;
use ratelab_core::quadrature::{gaussian_expectation, gaussian_expectation_2d};
use ratelab_core::random_time::{
    sample_time_changed, Clock, InverseStableModel, ScalingFamily, ScalingRegime,
};
use ratelab_core::rate_functions::{
    binomial_poisson_rates, gaussian_quadratic_rate, h_nu, imm_md_centered_1d,
    imm_md_explicit_cases, logistic_fiber_chart, logistic_map, logistic_md_rate, skew_fiber_chart,
    skew_map, skew_md_rate, ExplicitCase, LimitCumulant, SkewBranch, SkewParams,
};

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ParamReader};
use crate::report::{Cell, FamilyOutput, Table, Verdict};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run failed: {0}")]
    Run(String),
}

macro_rules! run_err_from {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self { RunError::Run(e.to_string()) }
        }
    )*};
}
run_err_from!(
    LabError,
    ratelab_core::levy_models::ModelError,
    ratelab_core::rate_functions::RateError,
    ratelab_core::legendre::ConjugateError,
    ratelab_core::legendre::ContractError,
    ratelab_core::random_time::RandomTimeError
);

/// Catalog entry: what a family checks and which fields it takes.
pub struct FamilyInfo {
    pub id: &'static str,
    pub claim: &'static str,
    pub required: &'static [(&'static str, &'static str)],
    pub optional: &'static [(&'static str, &'static str)],
    /// A complete working config (also used as a golden fixture).
    pub template: &'static str,
}

macro_rules! fixture {
    ($name:literal) => {
        include_str!(concat!("../tests/fixtures/", $name, ".toml"))
    };
}

pub fn catalog() -> &'static [FamilyInfo] {
    &[
        FamilyInfo {
            id: "imm-ld",
            claim: "reference LDP at speed t for inverse-stable time changes: (1/t)·log MGF of S(L_nu(t))/t converges to f_nu(kappa_S(theta)); rate table from the numeric conjugate",
            required: &[
                ("driver", "table: brownian | compound-poisson | drift"),
                ("nu", "number in (0,1)"),
                ("theta_grid", "array of theta points"),
                ("horizons", "increasing array of t values"),
            ],
            optional: &[
                ("tolerance", "final-horizon error bound, default 1e-3"),
                ("x_grid", "{start, stop, points} rate-table grid (1-d drivers)"),
            ],
            template: fixture!("imm-ld"),
        },
        FamilyInfo {
            id: "imm-weak",
            claim: "weak limit of t^alpha·S(L_nu(t))/t at speed 1 (a_t = 1): empirical MGF against the Mittag-Leffler target within 4 SE",
            required: &[
                ("driver", "table"),
                ("nu", "number in (0,1)"),
                ("t", "positive horizon"),
                ("theta_grid", "array of theta points"),
            ],
            optional: &[
                ("batch_size", "draws, default 100000 (min 10000)"),
                ("se_multiplier", "z bound, default 4"),
            ],
            template: fixture!("imm-weak"),
        },
        FamilyInfo {
            id: "imm-md",
            claim: "moderate-deviation LDP with speed 1/a_t, a_t = t^-beta: scaled log-MGF converges to the power-law limit cumulant; closed forms vs numeric conjugates on the rate table",
            required: &[
                ("driver", "table"),
                ("nu", "number in (0,1)"),
                ("beta", "number in (0,1)"),
                ("theta_grid", "array"),
                ("horizons", "increasing array"),
            ],
            optional: &[
                ("tolerance", "default 1e-3 (slow-nu schedules need calibration)"),
                ("x_grid", "rate-table grid (1-d drivers)"),
            ],
            template: fixture!("imm-md"),
        },
        FamilyInfo {
            id: "imm-explicit-cases",
            claim: "drift-case classification of the moderate rate: ray values match H_nu against the numeric conjugate, sign-conflict and null-component points are infinite by ray divergence",
            required: &[
                ("m", "nonzero drift vector"),
                ("nu", "number in (0,1)"),
                ("ray_grid", "{start, stop, points} of ray multipliers c >= 0"),
            ],
            optional: &[("probe_points", "array of x points for the infinite/unclassified cases")],
            template: fixture!("imm-explicit-cases"),
        },
        FamilyInfo {
            id: "levy-ld",
            claim: "reference LDP at speed t for subordinator time changes: the scaled log-MGF equals kappa_V(kappa_S(theta)) exactly at every t; rate table from the numeric conjugate",
            required: &[
                ("driver", "table"),
                ("clock", "gamma | poisson clock table"),
                ("theta_grid", "array"),
                ("horizons", "increasing array"),
            ],
            optional: &[
                ("tolerance", "default 1e-9"),
                ("x_grid", "rate-table grid (1-d drivers)"),
            ],
            template: fixture!("levy-ld"),
        },
        FamilyInfo {
            id: "levy-weak",
            claim: "weak limit of S(V(t)/t): empirical MGF against exp(kappa_V'(0)·kappa_S(theta)) within 4 SE",
            required: &[
                ("driver", "table"),
                ("clock", "gamma | poisson clock table"),
                ("t", "positive horizon"),
                ("theta_grid", "array"),
            ],
            optional: &[
                ("batch_size", "default 100000"),
                ("se_multiplier", "default 4"),
            ],
            template: fixture!("levy-weak"),
        },
        FamilyInfo {
            id: "levy-md",
            claim: "moderate-deviation LDP with speed 1/a_t for subordinator time changes: a_t·t·kappa_V(kappa_S(theta)/(t·a_t)) converges to kappa_V'(0)·kappa_S(theta)",
            required: &[
                ("driver", "table"),
                ("clock", "clock table"),
                ("beta", "number in (0,1)"),
                ("theta_grid", "array"),
                ("horizons", "increasing array"),
            ],
            optional: &[
                ("tolerance", "default 1e-3"),
                ("x_grid", "rate-table grid (Brownian drivers get a closed-form column)"),
            ],
            template: fixture!("levy-md"),
        },
        FamilyInfo {
            id: "levy-inequality",
            claim: "I_MD(x) >= I_LD(x) for subordinator time changes, with both rates vanishing exactly at kappa_V'(0)·grad kappa_S(0)",
            required: &[
                ("driver", "table"),
                ("clock", "clock table"),
                ("x_grid", "{start, stop, points} (1-d drivers)"),
            ],
            optional: &[],
            template: fixture!("levy-inequality"),
        },
        FamilyInfo {
            id: "poisson-ld",
            claim: "reference LDP at speed n for triangular arrays with p_n -> p: log(1 + p_n(G-1)) converges to log(1 + p(G-1)); binomial closed form vs numeric conjugate",
            required: &[
                ("jumps", "jump table"),
                ("p", "number in (0,1)"),
                ("theta_grid", "array"),
                ("horizons", "increasing array of n"),
            ],
            optional: &[
                ("tolerance", "default 1e-3"),
                ("x_grid", "rate-table grid (unit jumps get the closed-form column)"),
            ],
            template: fixture!("poisson-ld"),
        },
        FamilyInfo {
            id: "poisson-weak",
            claim: "weak limit of X_1 + ... + X_n with n·p_n -> lambda: empirical MGF against exp(lambda(G(theta)-1)), sums drawn by exact Binomial counts",
            required: &[
                ("jumps", "jump table"),
                ("lambda", "positive number"),
                ("n", "array length (positive integer)"),
                ("theta_grid", "array"),
            ],
            optional: &[
                ("batch_size", "default 100000"),
                ("se_multiplier", "default 4"),
            ],
            template: fixture!("poisson-weak"),
        },
        FamilyInfo {
            id: "poisson-md",
            claim: "moderate-deviation LDP with speed 1/a_n under the exact-lambda schedule p_n = lambda/(n·a_n): n·a_n·log(1+p_n(G-1)) converges to lambda(G(theta)-1)",
            required: &[
                ("jumps", "jump table"),
                ("lambda", "positive number"),
                ("beta", "number in (0,1)"),
                ("theta_grid", "array"),
                ("horizons", "increasing array of n"),
            ],
            optional: &[
                ("tolerance", "default 1e-3"),
                ("x_grid", "rate-table grid"),
            ],
            template: fixture!("poisson-md"),
        },
        FamilyInfo {
            id: "poisson-inequality",
            claim: "I_LD(x) >= I_MD(x) on [0,1] for the binomial family with lambda = p; the difference attains its minimum 0 at x = p",
            required: &[
                ("p", "number in (0,1)"),
                ("grid", "{start, stop, points} on [0,1]"),
            ],
            optional: &[("tail_horizons", "n values for the exact tail-decay check")],
            template: fixture!("poisson-inequality"),
        },
        FamilyInfo {
            id: "contraction-ld",
            claim: "LDP pushed through a continuous map at speed n: I(y) = inf of the Cramér rate over the fiber U^{-1}(y)",
            required: &[
                ("x_model", "driver-style table for the summand law"),
                ("map", "identity | logistic | skew map table"),
                ("y_grid", "array of target points"),
            ],
            optional: &[],
            template: fixture!("contraction-ld"),
        },
        FamilyInfo {
            id: "contraction-weak",
            claim: "weak limit of U applied to centered scaled sums: empirical transform against the quadrature MGF of U(Z) within 4 SE",
            required: &[
                ("x_kind", "rademacher | gaussian summands"),
                ("dim", "summand dimension h"),
                ("map", "map table"),
                ("n", "summands per draw"),
                ("theta_grid", "array in the image space"),
            ],
            optional: &[
                ("cov", "summand covariance (gaussian kind)"),
                ("batch_size", "default 100000"),
                ("se_multiplier", "default 4"),
            ],
            template: fixture!("contraction-weak"),
        },
        FamilyInfo {
            id: "contraction-md",
            claim: "moderate-deviation rate pushed through a continuous map: the fiber infimum of the Gaussian quadratic matches the map-specific closed form",
            required: &[
                ("map", "map table"),
                ("y_grid", "array of target points"),
            ],
            optional: &[
                ("hess", "covariance of the summand law, default identity"),
            ],
            template: fixture!("contraction-md"),
        },
        FamilyInfo {
            id: "logistic-example",
            claim: "simplex-valued limits: closed-form logit rate vs fiber infimum, plus the weak limit of the simplex transform against a quadrature target",
            required: &[
                ("y_grid", "{start, stop, points} strictly inside (0,1)"),
                ("n", "summands per draw"),
            ],
            optional: &[
                ("hess", "summand covariance, default identity (dimension 1)"),
                ("theta_grid", "array of simplex-space theta points"),
                ("batch_size", "default 100000"),
                ("se_multiplier", "default 4"),
            ],
            template: fixture!("logistic-example"),
        },
        FamilyInfo {
            id: "skew-example",
            claim: "skew-limit rate: two-branch closed form with its minimizer vs the fiber infimum, plus the weak limit of the skew transform against a quadrature target",
            required: &[
                ("delta", "vector in (-1,1)^{h-1}"),
                ("psi", "positive-definite matrix of order h-1"),
                ("y_grid", "{start, stop, points} (h = 2)"),
                ("n", "summands per draw"),
            ],
            optional: &[
                ("theta_grid", "array of image-space theta points"),
                ("batch_size", "default 100000"),
                ("se_multiplier", "default 4"),
            ],
            template: fixture!("skew-example"),
        },
    ]
}

pub fn family_info(id: &str) -> Option<&'static FamilyInfo> {
    catalog().iter().find(|f| f.id == id)
}

/// Runs one experiment; the seed may have been overridden by the CLI.
pub fn run_family(cfg: &ExperimentConfig, seed: u64) -> Result<FamilyOutput, RunError> {
    let p = cfg.params();
    match cfg.family.as_str() {
        "imm-ld" => imm_ld(&p),
        "imm-weak" => imm_weak(&p, seed),
        "imm-md" => imm_md(&p),
        "imm-explicit-cases" => imm_explicit_cases(&p),
        "levy-ld" => levy_ld(&p),
        "levy-weak" => levy_weak(&p, seed),
        "levy-md" => levy_md(&p),
        "levy-inequality" => levy_inequality(&p),
        "poisson-ld" => poisson_ld(&p),
        "poisson-weak" => poisson_weak(&p, seed),
        "poisson-md" => poisson_md(&p),
        "poisson-inequality" => poisson_inequality(&p, seed),
        "contraction-ld" => contraction_ld(&p),
        "contraction-weak" => contraction_weak(&p, seed),
        "contraction-md" => contraction_md(&p),
        "logistic-example" => logistic_example(&p, seed),
        "skew-example" => skew_example(&p, seed),
        other => Err(ConfigError::UnknownFamily(other.to_string()).into()),
    }
}

// ---------------------------------------------------------------------------
// shared pieces
// ---------------------------------------------------------------------------

fn scgf_outputs(report: &ScgfReport, tolerance: f64) -> (Verdict, Table) {
    let mut table = Table::new("scgf", &["horizon", "max_error"]);
    for (h, e) in &report.per_horizon_error {
        table.push(vec![Cell::Num(*h), Cell::Num(*e)]);
    }
    let verdict = Verdict::new(
        "scgf-limit",
        report.pass,
        format!(
            "final error {:.3e} (tolerance {:.1e}), trend {}",
            report.final_error,
            tolerance,
            if report.decreasing {
                "decreasing"
            } else {
                "not decreasing"
            }
        ),
    );
    (verdict, table)
}

fn weak_outputs(report: &WeakReport) -> (Verdict, Table) {
    let dim = report.rows.first().map(|r| r.theta.len()).unwrap_or(1);
    let mut headers: Vec<String> = (1..=dim).map(|i| format!("theta{i}")).collect();
    headers.extend(["empirical", "se", "target", "z"].map(String::from));
    let headers_ref: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("weak", &headers_ref);
    for row in &report.rows {
        let mut cells: Vec<Cell> = row.theta.iter().map(|&v| Cell::Num(v)).collect();
        cells.extend([
            Cell::Num(row.empirical),
            Cell::Num(row.se),
            Cell::Num(row.target),
            Cell::Num(row.z),
        ]);
        table.push(cells);
    }
    let verdict = Verdict::new(
        "weak-convergence",
        report.pass,
        format!("max |z| = {:.3}", report.max_abs_z),
    );
    (verdict, table)
}

/// Closed-form-vs-numeric comparison with agreement on +∞ classification.
fn comparison_verdict(name: &str, pairs: &[(f64, f64)], tol: f64) -> Verdict {
    let mut max_diff = 0.0_f64;
    let mut classification_ok = true;
    for &(closed, numeric) in pairs {
        match (closed.is_finite(), numeric.is_finite()) {
            (true, true) => max_diff = max_diff.max((closed - numeric).abs()),
            (false, false) => {}
            _ => classification_ok = false,
        }
    }
    Verdict::new(
        name,
        classification_ok && max_diff <= tol,
        format!(
            "max |closed − numeric| = {:.3e} over finite values (tolerance {:.1e}); infinity classification {}",
            max_diff,
            tol,
            if classification_ok { "agrees" } else { "DISAGREES" }
        ),
    )
}

fn conj_value(lc: &LimitCumulant, x: &[f64]) -> Result<f64, RunError> {
    Ok(conjugate(&lc.conjugate_problem(), x)?.value)
}

/// Poisson-type rate x·log(x/λ) − x + λ on x ≥ 0 (0·log 0 := 0), +∞ below.
fn poisson_rate(x: f64, lambda: f64) -> f64 {
    if x < 0.0 {
        f64::INFINITY
    } else if x == 0.0 {
        lambda
    } else {
        x * (x / lambda).ln() - x + lambda
    }
}

fn drift_free(levy: &LevyModel) -> bool {
    levy.cumulant().grad0.iter().all(|&g| g == 0.0)
}

// ---------------------------------------------------------------------------
// inverse stable clock families
// ---------------------------------------------------------------------------

fn imm_ld(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let nu = p.f64_in_open("nu", 0.0, 1.0)?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-3)?;
    let check = scgf_imm_reference(&levy, nu, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    if levy.dim() == 1 {
        if let Some(xs) = optional_grid(p, "x_grid")? {
            let lc = LimitCumulant::imm_ld(levy.cumulant().clone(), nu)?;
            let mut t = Table::new("rate", &["x", "numeric"]);
            for &x in &xs {
                t.push(vec![Cell::Num(x), Cell::Num(conj_value(&lc, &[x])?)]);
            }
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn imm_weak(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let nu = p.f64_in_open("nu", 0.0, 1.0)?;
    let t = p.f64_positive("t")?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let batch_size = p.usize_or("batch_size", 100_000)?;
    let mult = p.f64_or("se_multiplier", 4.0)?;
    let centered = drift_free(&levy);
    let q = levy.cumulant().hess0.clone();
    let m = levy.cumulant().grad0.clone();
    let ml = MlParams::new(nu)
        .map_err(|e| RunError::Run(e.to_string()))?
        .with_max_terms(100_000);
    let levy_s = levy.clone();
    let check = WeakConvergenceCheck {
        label: "imm-weak".into(),
        sampler: Arc::new(move |batch, seed| {
            let clock = Clock::InverseStable(InverseStableModel::new(nu).unwrap());
            let scaling = ScalingRegime::inverse_stable(nu, centered, ScalingFamily::Constant);
            sample_time_changed(&levy_s, &clock, t, &scaling, batch, seed).map_err(|e| {
                LabError::Rate(ratelab_core::rate_functions::RateError::InvalidParameter(
                    e.to_string(),
                ))
            })
        }),
        target_mgf: Arc::new(move |theta: &[f64]| {
            let arg = if centered {
                0.5 * q.quadratic_form(theta)
            } else {
                ratelab_core::linalg::dot(theta, &m)
            };
            ml.eval(arg).unwrap_or(f64::INFINITY)
        }),
        grid,
        batch_size,
        se_multiplier: mult,
    };
    let report = run_weak_convergence(&check, seed)?;
    let (verdict, table) = weak_outputs(&report);
    Ok(FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    })
}

fn imm_md(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let nu = p.f64_in_open("nu", 0.0, 1.0)?;
    let beta = p.f64_in_open("beta", 0.0, 1.0)?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-3)?;
    let check = scgf_imm_moderate(&levy, nu, beta, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    if levy.dim() == 1 {
        if let Some(xs) = optional_grid(p, "x_grid")? {
            let centered = drift_free(&levy);
            let lc = if centered {
                LimitCumulant::imm_md_centered(levy.cumulant().hess0.clone(), nu)?
            } else {
                LimitCumulant::imm_md_drift(levy.cumulant().grad0.clone(), nu)?
            };
            let mut t = Table::new("rate", &["x", "closed", "numeric", "diff"]);
            let mut pairs = Vec::new();
            for &x in &xs {
                let closed = if centered {
                    imm_md_centered_1d(x, levy.cumulant().hess0.get(0, 0), nu)
                } else {
                    h_nu(x, levy.cumulant().grad0[0], nu)
                };
                let numeric = conj_value(&lc, &[x])?;
                pairs.push((closed, numeric));
                t.push(vec![
                    Cell::Num(x),
                    Cell::Num(closed),
                    Cell::Num(numeric),
                    Cell::Num(if closed.is_finite() && numeric.is_finite() {
                        (closed - numeric).abs()
                    } else {
                        0.0
                    }),
                ]);
            }
            out.verdicts
                .push(comparison_verdict("rate-closed-vs-numeric", &pairs, 1e-4));
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn imm_explicit_cases(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let m = p.vec_f64("m")?;
    if m.iter().all(|&v| v == 0.0) {
        return Err(ConfigError::field("params.m", "must be a nonzero vector").into());
    }
    let nu = p.f64_in_open("nu", 0.0, 1.0)?;
    let cs = p.linear_grid("ray_grid")?;
    if cs.iter().any(|&c| c < 0.0) {
        return Err(ConfigError::field("params.ray_grid", "ray multipliers must be >= 0").into());
    }
    let probes = if p.has("probe_points") {
        p.theta_grid("probe_points", m.len())?
    } else {
        Vec::new()
    };
    let lc = LimitCumulant::imm_md_drift(m.clone(), nu)?;
    let headers: Vec<String> = (1..=m.len())
        .map(|i| format!("x{i}"))
        .chain(["case", "closed", "numeric", "diff"].map(String::from))
        .collect();
    let headers_ref: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("cases", &headers_ref);
    let mut ray_pairs = Vec::new();
    let mut infinity_ok = true;
    let mut row = |x: &[f64]| -> Result<(), RunError> {
        let (closed, case) = imm_md_explicit_cases(x, &m, nu);
        let numeric = conj_value(&lc, x)?;
        let tag = match case {
            ExplicitCase::OppositeSign => "opposite-sign",
            ExplicitCase::NullComponent => "null-component",
            ExplicitCase::Ray { .. } => "ray",
            ExplicitCase::Unclassified => "none",
        };
        match case {
            ExplicitCase::Ray { .. } => ray_pairs.push((closed, numeric)),
            ExplicitCase::OppositeSign | ExplicitCase::NullComponent => {
                if numeric.is_finite() {
                    infinity_ok = false;
                }
            }
            ExplicitCase::Unclassified => {}
        }
        let diff = if closed.is_finite() && numeric.is_finite() {
            (closed - numeric).abs()
        } else {
            0.0
        };
        let mut cells: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
        cells.extend([
            Cell::Text(tag.into()),
            Cell::Num(closed),
            Cell::Num(numeric),
            Cell::Num(diff),
        ]);
        table.push(cells);
        Ok(())
    };
    for &c in &cs {
        let x: Vec<f64> = m.iter().map(|&mi| c * mi).collect();
        row(&x)?;
    }
    for x in &probes {
        row(x)?;
    }
    let verdicts = vec![
        comparison_verdict("ray-values", &ray_pairs, 1e-4),
        Verdict::new(
            "infinite-classification",
            infinity_ok,
            "sign-conflict and null-component points diverge under the ray probe",
        ),
    ];
    Ok(FamilyOutput {
        verdicts,
        tables: vec![table],
    })
}

// ---------------------------------------------------------------------------
// subordinator clock families
// ---------------------------------------------------------------------------

fn levy_ld(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let clock = p.clock("clock")?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-9)?;
    let check = scgf_levy_reference(&levy, &clock, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    let lc = LimitCumulant::levy_ld(levy.cumulant().clone(), clock.clone())?;
    let zero = lc.zero_point();
    let at_zero = conj_value(&lc, &zero)?;
    out.verdicts.push(Verdict::new(
        "zero-at-limit-point",
        at_zero <= 1e-8,
        format!("rate at the limit point = {at_zero:.3e}"),
    ));
    if levy.dim() == 1 {
        if let Some(xs) = optional_grid(p, "x_grid")? {
            // unit-drift driver over a Poisson clock has the Poisson rate in
            // closed form; everything else gets the numeric column only
            let closed_form: Option<Box<dyn Fn(f64) -> f64>> = match (levy.kind(), clock.kind()) {
                (
                    LevyKind::DeterministicDrift { mu },
                    ratelab_core::levy_models::SubordinatorKind::Poisson { rate },
                ) if mu[0] != 0.0 => {
                    let (mu0, lam) = (mu[0], *rate);
                    Some(Box::new(move |x: f64| poisson_rate(x / mu0, lam)))
                }
                _ => None,
            };
            let mut t = Table::new(
                "rate",
                if closed_form.is_some() {
                    &["x", "closed", "numeric", "diff"][..]
                } else {
                    &["x", "numeric"][..]
                },
            );
            let mut pairs = Vec::new();
            for &x in &xs {
                let numeric = conj_value(&lc, &[x])?;
                match &closed_form {
                    Some(f) => {
                        let closed = f(x);
                        pairs.push((closed, numeric));
                        let diff = if closed.is_finite() && numeric.is_finite() {
                            (closed - numeric).abs()
                        } else {
                            0.0
                        };
                        t.push(vec![
                            Cell::Num(x),
                            Cell::Num(closed),
                            Cell::Num(numeric),
                            Cell::Num(diff),
                        ]);
                    }
                    None => t.push(vec![Cell::Num(x), Cell::Num(numeric)]),
                }
            }
            if !pairs.is_empty() {
                out.verdicts
                    .push(comparison_verdict("rate-closed-vs-numeric", &pairs, 1e-4));
            }
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn levy_weak(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let clock = p.clock("clock")?;
    let v_rate = clock.mean_rate().ok_or_else(|| {
        ConfigError::field("params.clock.kind", "weak limit needs a finite mean rate")
    })?;
    let t = p.f64_positive("t")?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let batch_size = p.usize_or("batch_size", 100_000)?;
    let mult = p.f64_or("se_multiplier", 4.0)?;
    let kappa = levy.cumulant().eval_fn();
    let levy_s = levy.clone();
    let clock_s = clock.clone();
    let check = WeakConvergenceCheck {
        label: "levy-weak".into(),
        sampler: Arc::new(move |batch, seed| {
            let scaling = ScalingRegime::subordinator(ScalingFamily::Constant);
            sample_time_changed(
                &levy_s,
                &Clock::Subordinator(clock_s.clone()),
                t,
                &scaling,
                batch,
                seed,
            )
            .map_err(|e| {
                LabError::Rate(ratelab_core::rate_functions::RateError::InvalidParameter(
                    e.to_string(),
                ))
            })
        }),
        target_mgf: Arc::new(move |theta: &[f64]| {
            let k = kappa(theta);
            if k.is_finite() {
                (v_rate * k).exp()
            } else {
                f64::INFINITY
            }
        }),
        grid,
        batch_size,
        se_multiplier: mult,
    };
    let report = run_weak_convergence(&check, seed)?;
    let (verdict, table) = weak_outputs(&report);
    Ok(FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    })
}

fn levy_md(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    let clock = p.clock("clock")?;
    let beta = p.f64_in_open("beta", 0.0, 1.0)?;
    let grid = p.theta_grid("theta_grid", levy.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-3)?;
    let check = scgf_levy_moderate(&levy, &clock, beta, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    if let Some(xs) = optional_grid(p, "x_grid")? {
        if levy.dim() == 1 {
            let v_rate = clock.mean_rate().unwrap();
            let lc = LimitCumulant::levy_md(levy.cumulant().clone(), v_rate)?;
            let closed_form: Option<Box<dyn Fn(f64) -> f64>> = match levy.kind() {
                LevyKind::BrownianWithDrift { mu, sigma } => {
                    let (mu0, s2) = (mu[0], sigma.get(0, 0));
                    Some(Box::new(move |x: f64| {
                        let d = x - v_rate * mu0;
                        d * d / (2.0 * v_rate * s2)
                    }))
                }
                _ => None,
            };
            let mut t = Table::new(
                "rate",
                if closed_form.is_some() {
                    &["x", "closed", "numeric", "diff"][..]
                } else {
                    &["x", "numeric"][..]
                },
            );
            let mut pairs = Vec::new();
            for &x in &xs {
                let numeric = conj_value(&lc, &[x])?;
                match &closed_form {
                    Some(f) => {
                        let closed = f(x);
                        pairs.push((closed, numeric));
                        t.push(vec![
                            Cell::Num(x),
                            Cell::Num(closed),
                            Cell::Num(numeric),
                            Cell::Num((closed - numeric).abs()),
                        ]);
                    }
                    None => t.push(vec![Cell::Num(x), Cell::Num(numeric)]),
                }
            }
            if !pairs.is_empty() {
                out.verdicts
                    .push(comparison_verdict("rate-closed-vs-numeric", &pairs, 1e-4));
            }
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn levy_inequality(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let levy = p.driver("driver")?;
    if levy.dim() != 1 {
        return Err(
            ConfigError::field("params.driver", "inequality grids are one-dimensional").into(),
        );
    }
    let clock = p.clock("clock")?;
    let v_rate = clock
        .mean_rate()
        .ok_or_else(|| ConfigError::field("params.clock.kind", "needs a finite mean rate"))?;
    let xs = p.linear_grid("x_grid")?;
    let lc_ld = LimitCumulant::levy_ld(levy.cumulant().clone(), clock.clone())?;
    let lc_md = LimitCumulant::levy_md(levy.cumulant().clone(), v_rate)?;
    let mut table = Table::new("rates", &["x", "i_ld", "i_md", "diff"]);
    let mut inequality_ok = true;
    let mut worst = f64::INFINITY;
    for &x in &xs {
        let ld = conj_value(&lc_ld, &[x])?;
        let md = conj_value(&lc_md, &[x])?;
        // +∞ on both sides is fine; a finite I_MD below I_LD is a violation
        let margin = match (md.is_finite(), ld.is_finite()) {
            (true, true) => md - ld,
            (false, _) => f64::INFINITY,
            (true, false) => f64::NEG_INFINITY,
        };
        worst = worst.min(margin);
        if margin < -1e-9 {
            inequality_ok = false;
        }
        table.push(vec![
            Cell::Num(x),
            Cell::Num(ld),
            Cell::Num(md),
            Cell::Num(if md.is_finite() && ld.is_finite() {
                md - ld
            } else {
                f64::INFINITY
            }),
        ]);
    }
    let zero = lc_ld.zero_point();
    let ld0 = conj_value(&lc_ld, &zero)?;
    let md0 = conj_value(&lc_md, &zero)?;
    let mut positive_away = true;
    for offset in [-0.5, 0.5] {
        let x = vec![zero[0] + offset];
        if conj_value(&lc_ld, &x)? < 1e-6 || conj_value(&lc_md, &x)? < 1e-6 {
            positive_away = false;
        }
    }
    let verdicts = vec![
        Verdict::new(
            "md-dominates-ld",
            inequality_ok,
            format!("min(I_MD − I_LD) = {worst:.3e} over the grid"),
        ),
        Verdict::new(
            "common-zero",
            ld0 <= 1e-8 && md0 <= 1e-8,
            format!("I_LD = {ld0:.3e}, I_MD = {md0:.3e} at the shared zero"),
        ),
        Verdict::new(
            "zero-is-isolated",
            positive_away,
            "both rates exceed 1e-6 half a unit away from the zero",
        ),
    ];
    Ok(FamilyOutput {
        verdicts,
        tables: vec![table],
    })
}

// ---------------------------------------------------------------------------
// triangular array families
// ---------------------------------------------------------------------------

fn poisson_ld(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let jumps = p.jumps("jumps")?;
    let prob = p.f64_in_open("p", 0.0, 1.0)?;
    let grid = p.theta_grid("theta_grid", jumps.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-3)?;
    let check = scgf_poisson_reference(&jumps, prob, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    if jumps.dim() == 1 {
        if let Some(xs) = optional_grid(p, "x_grid")? {
            let unit = is_unit_jump(&jumps);
            let lc = LimitCumulant::poisson_ld(prob, jumps.clone())?;
            let mut t = Table::new(
                "rate",
                if unit {
                    &["x", "closed", "numeric", "diff"][..]
                } else {
                    &["x", "numeric"][..]
                },
            );
            let mut pairs = Vec::new();
            for &x in &xs {
                let numeric = conj_value(&lc, &[x])?;
                if unit {
                    let closed = binomial_poisson_rates(x, prob).0;
                    pairs.push((closed, numeric));
                    let diff = if closed.is_finite() && numeric.is_finite() {
                        (closed - numeric).abs()
                    } else {
                        0.0
                    };
                    t.push(vec![
                        Cell::Num(x),
                        Cell::Num(closed),
                        Cell::Num(numeric),
                        Cell::Num(diff),
                    ]);
                } else {
                    t.push(vec![Cell::Num(x), Cell::Num(numeric)]);
                }
            }
            if unit {
                out.verdicts
                    .push(comparison_verdict("rate-closed-vs-numeric", &pairs, 1e-4));
            }
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn is_unit_jump(jumps: &ratelab_core::levy_models::JumpMixture) -> bool {
    jumps.dim() == 1
        && jumps.components().len() == 1
        && matches!(
            &jumps.components()[0].1,
            ratelab_core::levy_models::JumpComponent::PointMass(x) if x == &vec![1.0]
        )
}

fn poisson_weak(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let jumps = p.jumps("jumps")?;
    let lambda = p.f64_positive("lambda")?;
    let n = p.usize_or("n", 10_000)? as u64;
    if lambda / n as f64 > 1.0 {
        return Err(ConfigError::field("params.n", "needs lambda/n <= 1").into());
    }
    let grid = p.theta_grid("theta_grid", jumps.dim())?;
    let batch_size = p.usize_or("batch_size", 100_000)?;
    let mult = p.f64_or("se_multiplier", 4.0)?;
    let summand =
        ratelab_core::levy_models::TriangularSummandModel::new(lambda / n as f64, jumps.clone())?;
    let jumps_t = jumps.clone();
    let check = WeakConvergenceCheck {
        label: "poisson-weak".into(),
        sampler: Arc::new(move |batch, seed| Ok(summand.sample_sum_batch(n, 1.0, batch, seed)?)),
        target_mgf: Arc::new(move |theta: &[f64]| {
            let g = jumps_t.mgf(theta);
            if g.is_finite() {
                (lambda * (g - 1.0)).exp()
            } else {
                f64::INFINITY
            }
        }),
        grid,
        batch_size,
        se_multiplier: mult,
    };
    let report = run_weak_convergence(&check, seed)?;
    let (verdict, table) = weak_outputs(&report);
    Ok(FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    })
}

fn poisson_md(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let jumps = p.jumps("jumps")?;
    let lambda = p.f64_positive("lambda")?;
    let beta = p.f64_in_open("beta", 0.0, 1.0)?;
    let grid = p.theta_grid("theta_grid", jumps.dim())?;
    let horizons = p.horizons("horizons")?;
    let tol = p.f64_or("tolerance", 1e-3)?;
    let check = scgf_poisson_moderate(&jumps, lambda, beta, grid, horizons, tol)?;
    let report = run_scgf_check(&check)?;
    let (verdict, table) = scgf_outputs(&report, tol);
    let mut out = FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    };
    if jumps.dim() == 1 {
        if let Some(xs) = optional_grid(p, "x_grid")? {
            let unit = is_unit_jump(&jumps);
            let lc = LimitCumulant::poisson_md(lambda, jumps.clone())?;
            let mut t = Table::new(
                "rate",
                if unit {
                    &["x", "closed", "numeric", "diff"][..]
                } else {
                    &["x", "numeric"][..]
                },
            );
            let mut pairs = Vec::new();
            for &x in &xs {
                let numeric = conj_value(&lc, &[x])?;
                if unit {
                    let closed = poisson_rate(x, lambda);
                    pairs.push((closed, numeric));
                    let diff = if closed.is_finite() && numeric.is_finite() {
                        (closed - numeric).abs()
                    } else {
                        0.0
                    };
                    t.push(vec![
                        Cell::Num(x),
                        Cell::Num(closed),
                        Cell::Num(numeric),
                        Cell::Num(diff),
                    ]);
                } else {
                    t.push(vec![Cell::Num(x), Cell::Num(numeric)]);
                }
            }
            if unit {
                out.verdicts
                    .push(comparison_verdict("rate-closed-vs-numeric", &pairs, 1e-4));
            }
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn poisson_inequality(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let prob = p.f64_in_open("p", 0.0, 1.0)?;
    let xs = p.linear_grid("grid")?;
    if xs.first().copied().unwrap_or(-1.0) < 0.0 || xs.last().copied().unwrap_or(2.0) > 1.0 {
        return Err(ConfigError::field("params.grid", "must lie inside [0,1]").into());
    }
    let mut table = Table::new("rates", &["x", "i_ld", "i_md", "diff"]);
    let mut inequality_ok = true;
    let mut min_diff = f64::INFINITY;
    let mut argmin = f64::NAN;
    for &x in &xs {
        let (ld, md) = binomial_poisson_rates(x, prob);
        let diff = ld - md;
        if diff < -1e-12 {
            inequality_ok = false;
        }
        if diff < min_diff {
            min_diff = diff;
            argmin = x;
        }
        table.push(vec![
            Cell::Num(x),
            Cell::Num(ld),
            Cell::Num(md),
            Cell::Num(diff),
        ]);
    }
    let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let (ld_p, md_p) = binomial_poisson_rates(prob, prob);
    let diff_at_p = ld_p - md_p;
    let mut verdicts = vec![
        Verdict::new(
            "ld-dominates-md",
            inequality_ok,
            format!("min(I_LD − I_MD) = {min_diff:.3e} over the grid"),
        ),
        Verdict::new(
            "difference-minimized-at-p",
            (argmin - prob).abs() <= spacing + 1e-12 && diff_at_p.abs() <= 1e-9,
            format!("grid argmin {argmin}, difference at p = {diff_at_p:.3e}"),
        ),
        Verdict::new(
            "common-zero",
            ld_p.abs() <= 1e-8 && md_p.abs() <= 1e-8,
            format!("I_LD(p) = {ld_p:.3e}, I_MD(p) = {md_p:.3e}"),
        ),
    ];
    // optional exact tail-decay measurement at the 0.75 threshold scale
    if let Some(horizons) = p.opt_vec_f64("tail_horizons")? {
        let threshold = p.f64_or("tail_threshold", 0.75)?;
        let target_ld = -binomial_poisson_rates(threshold, prob).0;
        let check = TailDecayCheck {
            label: "binomial-ld-tail".into(),
            estimator: TailEstimator::BinomialExact {
                p_of_n: Arc::new(move |_| prob),
                scale_of_n: Arc::new(|n| 1.0 / n),
                speed_of_n: Arc::new(|n| n),
            },
            threshold,
            horizons,
            target: target_ld,
            tolerance: p.f64_or("tail_tolerance", 0.01)?,
        };
        let report = run_tail_decay(&check, seed)?;
        let mut t = Table::new("tail", &["n", "scaled_log_prob", "target"]);
        for row in &report.rows {
            t.push(vec![
                Cell::Num(row.horizon),
                Cell::Num(row.scaled_log_prob),
                Cell::Num(report.target),
            ]);
        }
        verdicts.push(Verdict::new(
            "tail-decay",
            report.pass,
            format!("final gap {:.4e}", report.final_gap),
        ));
        return Ok(FamilyOutput {
            verdicts,
            tables: vec![table, t],
        });
    }
    Ok(FamilyOutput {
        verdicts,
        tables: vec![table],
    })
}

// ---------------------------------------------------------------------------
// contraction families
// ---------------------------------------------------------------------------

enum MapSpec {
    Identity { dim: usize },
    Logistic { dim: usize },
    Skew { delta: Vec<f64> },
}

impl MapSpec {
    fn parse(p: &ParamReader) -> Result<MapSpec, RunError> {
        let t = p.sub_table("map")?;
        match t.str("kind")? {
            "identity" => Ok(MapSpec::Identity {
                dim: t.usize_or("dim", 1)?,
            }),
            "logistic" => Ok(MapSpec::Logistic {
                dim: t.usize_or("dim", 1)?,
            }),
            "skew" => {
                let delta = t.vec_f64("delta")?;
                if delta.iter().any(|d| d.abs() >= 1.0) {
                    return Err(ConfigError::field(
                        "params.map.delta",
                        "components must lie in (-1,1)",
                    )
                    .into());
                }
                Ok(MapSpec::Skew { delta })
            }
            other => Err(ConfigError::field(
                "params.map.kind",
                format!("must be identity | logistic | skew, got `{other}`"),
            )
            .into()),
        }
    }

    /// (domain dimension h, image dimension k)
    fn dims(&self) -> (usize, usize) {
        match self {
            MapSpec::Identity { dim } => (*dim, *dim),
            MapSpec::Logistic { dim } => (*dim, *dim + 1),
            MapSpec::Skew { delta } => (delta.len() + 1, delta.len()),
        }
    }

    fn map_fn(&self) -> ratelab_core::legendre::MapFn {
        match self {
            MapSpec::Identity { .. } => Arc::new(|x: &[f64]| x.to_vec()),
            MapSpec::Logistic { .. } => Arc::new(|x: &[f64]| logistic_map(x)),
            MapSpec::Skew { delta } => {
                let d = delta.clone();
                Arc::new(move |x: &[f64]| skew_map(x, &d))
            }
        }
    }

    fn chart(&self, y: &[f64]) -> FiberChart {
        match self {
            MapSpec::Identity { .. } => {
                let point = y.to_vec();
                FiberChart {
                    dim: 0,
                    map: Arc::new(move |_: &[f64]| Some(point.clone())),
                }
            }
            MapSpec::Logistic { .. } => logistic_fiber_chart(y),
            MapSpec::Skew { delta } => skew_fiber_chart(y, delta),
        }
    }
}

fn contraction_ld(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let x_model = p.driver("x_model")?;
    let map = MapSpec::parse(p)?;
    let (h, k) = map.dims();
    if x_model.dim() != h {
        return Err(ConfigError::field(
            "params.x_model",
            format!("summand dimension must match the map domain ({h})"),
        )
        .into());
    }
    let targets = p.theta_grid("y_grid", k)?;
    let lc_problem = Arc::new(
        ratelab_core::legendre::ConjugateProblem::new(h, x_model.cumulant().eval_fn())
            .with_domain_radius(x_model.cumulant().domain_radius),
    );
    let inner: ratelab_core::legendre::ExtendedFn = {
        let lp = Arc::clone(&lc_problem);
        Arc::new(move |x: &[f64]| conjugate(&lp, x).map(|o| o.value).unwrap_or(f64::INFINITY))
    };
    let headers: Vec<String> = (1..=k)
        .map(|i| format!("y{i}"))
        .chain(["value".to_string()])
        .collect();
    let headers_ref: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("rate", &headers_ref);
    let mut upper_bound_ok = true;
    let mut identity_pairs = Vec::new();
    for y in &targets {
        let problem = ContractionProblem::new(Arc::clone(&inner), map.map_fn(), h, y.clone())
            .with_chart(map.chart(y));
        let value = contract(&problem)?;
        // the infimum never exceeds the inner rate at explicit fiber points
        let chart = map.chart(y);
        let probes: Vec<Vec<f64>> = match chart.dim {
            0 => (chart.map)(&[]).into_iter().collect(),
            _ => [-1.3_f64, 0.0, 0.7]
                .iter()
                .filter_map(|&s| (chart.map)(&[s]))
                .collect(),
        };
        for point in probes {
            if value > inner(&point) + 1e-6 {
                upper_bound_ok = false;
            }
        }
        if matches!(map, MapSpec::Identity { .. }) {
            identity_pairs.push((inner(y), value));
        }
        let mut cells: Vec<Cell> = y.iter().map(|&v| Cell::Num(v)).collect();
        cells.push(Cell::Num(value));
        table.push(cells);
    }
    let mut verdicts = vec![Verdict::new(
        "fiber-upper-bound",
        upper_bound_ok,
        "contract(y) <= inner rate at explicit fiber points",
    )];
    if !identity_pairs.is_empty() {
        verdicts.push(comparison_verdict(
            "identity-fiber-point",
            &identity_pairs,
            1e-6,
        ));
    }
    Ok(FamilyOutput {
        verdicts,
        tables: vec![table],
    })
}

/// Quadrature MGF of U(Z) for Z ~ N(0, hess): the weak-convergence target.
fn quadrature_target(
    map: &MapSpec,
    hess: &Matrix,
) -> Result<ratelab_core::convergence_lab::LimitFn, RunError> {
    let (h, _k) = map.dims();
    match map {
        MapSpec::Identity { .. } => {
            let hs = hess.clone();
            Ok(Arc::new(move |theta: &[f64]| {
                (0.5 * hs.quadratic_form(theta)).exp()
            }))
        }
        MapSpec::Logistic { dim } => {
            if *dim != 1 {
                return Err(ConfigError::field(
                    "params.map.dim",
                    "quadrature targets for the simplex map support dim 1",
                )
                .into());
            }
            let sd = hess.get(0, 0).sqrt();
            Ok(Arc::new(move |theta: &[f64]| {
                let th = theta.to_vec();
                gaussian_expectation(
                    &|z: f64| {
                        let y = logistic_map(&[sd * z]);
                        ratelab_core::linalg::dot(&th, &y).exp()
                    },
                    80,
                )
            }))
        }
        MapSpec::Skew { delta } => {
            if h != 2 {
                return Err(ConfigError::field(
                    "params.map.delta",
                    "quadrature targets for the skew map support h = 2",
                )
                .into());
            }
            let d = delta[0];
            let s1 = hess.get(0, 0).sqrt();
            let s2 = hess.get(1, 1).sqrt();
            Ok(Arc::new(move |theta: &[f64]| {
                let t0 = theta[0];
                gaussian_expectation_2d(
                    &|z1: f64, z2: f64| {
                        let y = skew_map(&[s1 * z1, s2 * z2], &[d]);
                        (t0 * y[0]).exp()
                    },
                    60,
                )
            }))
        }
    }
}

fn contraction_weak(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let kind = p.str("x_kind")?;
    if kind != "rademacher" && kind != "gaussian" {
        return Err(ConfigError::field("params.x_kind", "must be rademacher | gaussian").into());
    }
    let dim = p.usize_or("dim", 1)?;
    let map = MapSpec::parse(p)?;
    let (h, k) = map.dims();
    if dim != h {
        return Err(ConfigError::field(
            "params.dim",
            format!("must equal the map domain dimension {h}"),
        )
        .into());
    }
    let cov = if kind == "gaussian" && p.has("cov") {
        p.matrix("cov")?
    } else {
        Matrix::identity(dim)
    };
    let n = p.usize_or("n", 400)?;
    let grid = p.theta_grid("theta_grid", k)?;
    let batch_size = p.usize_or("batch_size", 100_000)?;
    let mult = p.f64_or("se_multiplier", 4.0)?;
    let target = quadrature_target(&map, &cov)?;
    let chol = cov.cholesky().map_err(|e| RunError::Run(e.to_string()))?;
    let summand_kind = if kind == "rademacher" {
        SummandKind::Rademacher
    } else {
        SummandKind::Gaussian
    };
    let map_fn = map.map_fn();
    let check = WeakConvergenceCheck {
        label: "contraction-weak".into(),
        sampler: Arc::new(move |batch, seed| {
            Ok(transformed_sum_batch(
                summand_kind,
                dim,
                &chol,
                n,
                &map_fn,
                k,
                batch,
                seed,
            ))
        }),
        target_mgf: target,
        grid,
        batch_size,
        se_multiplier: mult,
    };
    let report = run_weak_convergence(&check, seed)?;
    let (verdict, table) = weak_outputs(&report);
    Ok(FamilyOutput {
        verdicts: vec![verdict],
        tables: vec![table],
    })
}

fn contraction_md(p: &ParamReader) -> Result<FamilyOutput, RunError> {
    let map = MapSpec::parse(p)?;
    let (h, k) = map.dims();
    let hess = if p.has("hess") {
        p.matrix("hess")?
    } else {
        Matrix::identity(h)
    };
    if hess.dim() != h {
        return Err(ConfigError::field(
            "params.hess",
            format!("must have order {h} to match the map domain"),
        )
        .into());
    }
    let targets = p.theta_grid("y_grid", k)?;
    let skew_params = match &map {
        MapSpec::Skew { delta } => {
            // the block structure diag(Ψ, 1) is required by the closed form
            let mut psi = Matrix::zeros(h - 1);
            for i in 0..h - 1 {
                for j in 0..h - 1 {
                    psi.set(i, j, hess.get(i, j));
                }
            }
            if (hess.get(h - 1, h - 1) - 1.0).abs() > 1e-12 {
                return Err(ConfigError::field(
                    "params.hess",
                    "the last diagonal entry must be 1 for the skew closed form",
                )
                .into());
            }
            Some(SkewParams::new(psi, delta.clone())?)
        }
        _ => None,
    };
    let hess_inner = hess.clone();
    let inner: ratelab_core::legendre::ExtendedFn =
        Arc::new(move |x: &[f64]| gaussian_quadratic_rate(x, &hess_inner).unwrap_or(f64::INFINITY));
    let headers: Vec<String> = (1..=k)
        .map(|i| format!("y{i}"))
        .chain(["closed", "numeric", "diff"].map(String::from))
        .collect();
    let headers_ref: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("rate", &headers_ref);
    let mut pairs = Vec::new();
    for y in &targets {
        let closed = match &map {
            MapSpec::Identity { .. } => gaussian_quadratic_rate(y, &hess)?,
            MapSpec::Logistic { .. } => logistic_md_rate(y, &hess)?,
            MapSpec::Skew { .. } => skew_md_rate(y, skew_params.as_ref().unwrap())?.value,
        };
        let problem = ContractionProblem::new(Arc::clone(&inner), map.map_fn(), h, y.clone())
            .with_chart(map.chart(y));
        let numeric = contract(&problem)?;
        pairs.push((closed, numeric));
        let mut cells: Vec<Cell> = y.iter().map(|&v| Cell::Num(v)).collect();
        let diff = if closed.is_finite() && numeric.is_finite() {
            (closed - numeric).abs()
        } else {
            0.0
        };
        cells.extend([Cell::Num(closed), Cell::Num(numeric), Cell::Num(diff)]);
        table.push(cells);
    }
    Ok(FamilyOutput {
        verdicts: vec![comparison_verdict("closed-vs-contract", &pairs, 1e-4)],
        tables: vec![table],
    })
}

fn logistic_example(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let hess = if p.has("hess") {
        p.matrix("hess")?
    } else {
        Matrix::identity(1)
    };
    if hess.dim() != 1 {
        return Err(ConfigError::field("params.hess", "must have order 1").into());
    }
    let ys = p.linear_grid("y_grid")?;
    if ys.first().copied().unwrap_or(0.0) <= 0.0 || ys.last().copied().unwrap_or(1.0) >= 1.0 {
        return Err(ConfigError::field("params.y_grid", "must lie strictly inside (0,1)").into());
    }
    let hess_inner = hess.clone();
    let inner: ratelab_core::legendre::ExtendedFn =
        Arc::new(move |x: &[f64]| gaussian_quadratic_rate(x, &hess_inner).unwrap_or(f64::INFINITY));
    let mut table = Table::new("rate", &["y1", "y2", "closed", "numeric", "diff"]);
    let mut pairs = Vec::new();
    for &y1 in &ys {
        let y = vec![y1, 1.0 - y1];
        let closed = logistic_md_rate(&y, &hess)?;
        let problem = ContractionProblem::new(
            Arc::clone(&inner),
            Arc::new(|x: &[f64]| logistic_map(x)),
            1,
            y.clone(),
        )
        .with_chart(logistic_fiber_chart(&y));
        let numeric = contract(&problem)?;
        pairs.push((closed, numeric));
        table.push(vec![
            Cell::Num(y1),
            Cell::Num(1.0 - y1),
            Cell::Num(closed),
            Cell::Num(numeric),
            Cell::Num((closed - numeric).abs()),
        ]);
    }
    let mut verdicts = vec![comparison_verdict("closed-vs-contract", &pairs, 1e-4)];
    let mut tables = vec![table];
    // weak-convergence part against the quadrature target
    if p.has("theta_grid") {
        let grid = p.theta_grid("theta_grid", 2)?;
        let n = p.usize_or("n", 400)?;
        let batch_size = p.usize_or("batch_size", 100_000)?;
        let mult = p.f64_or("se_multiplier", 4.0)?;
        let map = MapSpec::Logistic { dim: 1 };
        let target = quadrature_target(&map, &hess)?;
        let chol = hess.cholesky().map_err(|e| RunError::Run(e.to_string()))?;
        // Rademacher summands have covariance I; any other hess needs the
        // Gaussian kind so the sampled law matches the quadrature target
        let kind = if (hess.get(0, 0) - 1.0).abs() < 1e-12 {
            SummandKind::Rademacher
        } else {
            SummandKind::Gaussian
        };
        let map_fn = map.map_fn();
        let check = WeakConvergenceCheck {
            label: "logistic-weak".into(),
            sampler: Arc::new(move |batch, seed| {
                Ok(transformed_sum_batch(
                    kind, 1, &chol, n, &map_fn, 2, batch, seed,
                ))
            }),
            target_mgf: target,
            grid,
            batch_size,
            se_multiplier: mult,
        };
        let report = run_weak_convergence(&check, seed)?;
        let (verdict, table) = weak_outputs(&report);
        verdicts.push(verdict);
        tables.push(table);
    }
    Ok(FamilyOutput { verdicts, tables })
}

fn skew_example(p: &ParamReader, seed: u64) -> Result<FamilyOutput, RunError> {
    let delta = p.vec_f64("delta")?;
    let psi = p.matrix("psi")?;
    let params = SkewParams::new(psi.clone(), delta.clone())?;
    let h = delta.len() + 1;
    if h != 2 {
        return Err(ConfigError::field(
            "params.delta",
            "the bundled example runs the two-dimensional case (one delta component)",
        )
        .into());
    }
    let ys = p.linear_grid("y_grid")?;
    // H = diag(Ψ, 1)
    let mut hess = Matrix::identity(h);
    for i in 0..h - 1 {
        for j in 0..h - 1 {
            hess.set(i, j, psi.get(i, j));
        }
    }
    let hess_inner = hess.clone();
    let inner: ratelab_core::legendre::ExtendedFn =
        Arc::new(move |x: &[f64]| gaussian_quadratic_rate(x, &hess_inner).unwrap_or(f64::INFINITY));
    let mut table = Table::new(
        "rate",
        &["y", "closed", "branch", "minimizer_xh", "numeric", "diff"],
    );
    let mut pairs = Vec::new();
    for &y in &ys {
        let rate = skew_md_rate(&[y], &params)?;
        let problem = ContractionProblem::new(
            Arc::clone(&inner),
            {
                let d = delta.clone();
                Arc::new(move |x: &[f64]| skew_map(x, &d))
            },
            h,
            vec![y],
        )
        .with_chart(skew_fiber_chart(&[y], &delta));
        let numeric = contract(&problem)?;
        pairs.push((rate.value, numeric));
        table.push(vec![
            Cell::Num(y),
            Cell::Num(rate.value),
            Cell::Text(
                match rate.branch {
                    SkewBranch::CrossTermNonPositive => "cross-nonpositive",
                    SkewBranch::CrossTermPositive => "cross-positive",
                }
                .into(),
            ),
            Cell::Num(rate.minimizer_xh),
            Cell::Num(numeric),
            Cell::Num((rate.value - numeric).abs()),
        ]);
    }
    let mut verdicts = vec![comparison_verdict("closed-vs-contract", &pairs, 1e-4)];
    let mut tables = vec![table];
    if p.has("theta_grid") {
        let grid = p.theta_grid("theta_grid", 1)?;
        let n = p.usize_or("n", 400)?;
        let batch_size = p.usize_or("batch_size", 100_000)?;
        let mult = p.f64_or("se_multiplier", 4.0)?;
        let identity_psi = (0..h - 1).all(|i| {
            (0..h - 1).all(|j| (psi.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12)
        });
        let kind = if identity_psi {
            SummandKind::Rademacher
        } else {
            SummandKind::Gaussian
        };
        let map = MapSpec::Skew {
            delta: delta.clone(),
        };
        let target = quadrature_target(&map, &hess)?;
        let chol = hess.cholesky().map_err(|e| RunError::Run(e.to_string()))?;
        let map_fn = map.map_fn();
        let check = WeakConvergenceCheck {
            label: "skew-weak".into(),
            sampler: Arc::new(move |batch, seed| {
                Ok(transformed_sum_batch(
                    kind, 2, &chol, n, &map_fn, 1, batch, seed,
                ))
            }),
            target_mgf: target,
            grid,
            batch_size,
            se_multiplier: mult,
        };
        let report = run_weak_convergence(&check, seed)?;
        let (verdict, table) = weak_outputs(&report);
        verdicts.push(verdict);
        tables.push(table);
    }
    Ok(FamilyOutput { verdicts, tables })
}

fn optional_grid(p: &ParamReader, name: &str) -> Result<Option<Vec<f64>>, RunError> {
    match p.opt_sub_table(name)? {
        Some(_) => Ok(Some(p.linear_grid(name)?)),
        None => Ok(None),
    }
}
