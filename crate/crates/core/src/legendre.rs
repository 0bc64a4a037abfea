//! Generic numerical Legendre transform Λ*(x) = sup_θ {⟨θ,x⟩ − Λ(θ)} over
//! ℝ^h, and constrained infima inf{ I(x) : U(x) = y } for rate functions
//! pushed through continuous maps.
//!
//! The conjugate solver minimizes φ(θ) = Λ(θ) − ⟨θ,x⟩: damped Newton when an
//! analytic Hessian is supplied, BFGS on (analytic or central-difference)
//! gradients otherwise, restarted from a deterministic spread of initial
//! points because the Λ's of interest can be C¹-but-not-C² across a
//! hyperplane. A supremum is reported as +∞ when the objective passes
//! `infinity_threshold` along an explicitly probed ray, which is how the
//! solver answers "x lies outside the closure of ∇Λ's range".

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::linalg::{add_scaled, dot, norm, sub, Matrix};
use crate::rng::{stream_rng, StreamDomain};

pub type ExtendedFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Fixed seed for the deterministic restart points.
const RESTART_SEED: u64 = 0x7261_7465_6c61_6221;

#[derive(Debug, Error)]
pub enum ConjugateError {
    #[error("conjugates above dimension 6 are not supported (got {0})")]
    DimensionTooLarge(usize),
    #[error("objective is not concave along a search segment: {0}")]
    NonConvex(String),
}

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("fiber dimension {0} exceeds the grid-search limit of 2")]
    FiberTooHighDimensional(usize),
    #[error("unparametrized fiber search needs h − k ≤ 2 and h ≤ 3 (h = {h}, k = {k})")]
    UnparametrizedHighDimensional { h: usize, k: usize },
    #[error("fiber chart produced a point off the fiber: {0}")]
    ChartInconsistent(String),
}

/// A convex conjugate problem: Λ convex, Λ(0) = 0, so Λ*(x) ≥ 0 always.
#[derive(Clone)]
pub struct ConjugateProblem {
    pub dim: usize,
    pub lambda: ExtendedFn,
    pub grad: Option<GradientFn>,
    pub hess: Option<HessianFn>,
    /// Hint: Λ is finite on the open ball of this radius.
    pub domain_radius: f64,
    /// Gradient-norm stopping tolerance, scaled by (1 + ‖x‖).
    pub solver_tol: f64,
    /// Objective value above which the supremum is reported as +∞.
    pub infinity_threshold: f64,
}

impl ConjugateProblem {
    pub fn new(dim: usize, lambda: ExtendedFn) -> Self {
        ConjugateProblem {
            dim,
            lambda,
            grad: None,
            hess: None,
            domain_radius: f64::INFINITY,
            solver_tol: 1e-9,
            infinity_threshold: 1e12,
        }
    }

    pub fn with_grad(mut self, grad: GradientFn) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_hess(mut self, hess: HessianFn) -> Self {
        self.hess = Some(hess);
        self
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        if let Some(g) = &self.grad {
            return Some(g(theta));
        }
        // central differences, shrinking the step if the domain edge bites
        let mut h = 1e-6 * (1.0 + norm(theta));
        for _ in 0..4 {
            let mut g = vec![0.0; self.dim];
            let mut ok = true;
            for i in 0..self.dim {
                let mut up = theta.to_vec();
                let mut dn = theta.to_vec();
                up[i] += h;
                dn[i] -= h;
                let (fu, fd) = ((self.lambda)(&up), (self.lambda)(&dn));
                if fu.is_finite() && fd.is_finite() {
                    g[i] = (fu - fd) / (2.0 * h);
                } else if fu.is_finite() {
                    let f0 = (self.lambda)(theta);
                    g[i] = (fu - f0) / h;
                } else if fd.is_finite() {
                    let f0 = (self.lambda)(theta);
                    g[i] = (f0 - fd) / h;
                } else {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Some(g);
            }
            h *= 0.1;
        }
        None
    }
}

/// Result of a conjugate evaluation. `maximizer` is present only when some
/// restart reached the stationarity contract ‖x − ∇Λ(θ̂)‖ ≤ tol·(1 + ‖x‖).
#[derive(Debug, Clone)]
pub struct ConjugateOutcome {
    pub value: f64,
    pub maximizer: Option<Vec<f64>>,
    /// ‖x − ∇Λ(θ̂)‖ at the best point found (f64::NAN when value = +∞).
    pub stationarity_gap: f64,
}

enum StartOutcome {
    Finished { theta: Vec<f64>, phi: f64 },
    Diverged,
}

/// Λ*(x) = sup_θ {⟨θ,x⟩ − Λ(θ)}.
pub fn conjugate(p: &ConjugateProblem, x: &[f64]) -> Result<ConjugateOutcome, ConjugateError> {
    assert_eq!(x.len(), p.dim);
    if p.dim > 6 {
        return Err(ConjugateError::DimensionTooLarge(p.dim));
    }
    let phi = |theta: &[f64]| -> f64 { (p.lambda)(theta) - dot(theta, x) };

    // deterministic restart points inside the guaranteed-finite ball
    let r0 = 0.25 * p.domain_radius.min(4.0);
    let mut rng = stream_rng(RESTART_SEED, StreamDomain::Harness, p.dim as u64);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; p.dim]];
    let xn = norm(x);
    if xn > 0.0 {
        starts.push(x.iter().map(|v| 0.5 * r0 * v / xn).collect());
    }
    for _ in 0..8 {
        starts.push(
            (0..p.dim)
                .map(|_| r0 * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        if !phi(start).is_finite() {
            continue;
        }
        match minimize_from(p, x, &phi, start)? {
            StartOutcome::Diverged => {
                return Ok(ConjugateOutcome {
                    value: f64::INFINITY,
                    maximizer: None,
                    stationarity_gap: f64::NAN,
                });
            }
            StartOutcome::Finished { theta, phi: v } => {
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((theta, v));
                }
            }
        }
    }

    // explicit ray screen for divergence the iterates did not reach
    if ray_diverges(p, x) {
        return Ok(ConjugateOutcome {
            value: f64::INFINITY,
            maximizer: None,
            stationarity_gap: f64::NAN,
        });
    }

    let (theta, phi_best) = best.unwrap_or((vec![0.0; p.dim], 0.0));
    let value = (-phi_best).max(0.0);
    let gap = p
        .gradient(&theta)
        .map(|g| norm(&sub(x, &g)))
        .unwrap_or(f64::INFINITY);
    let ok = gap <= p.solver_tol * (1.0 + xn) * 10.0;
    Ok(ConjugateOutcome {
        value,
        maximizer: if ok { Some(theta) } else { None },
        stationarity_gap: gap,
    })
}

fn minimize_from(
    p: &ConjugateProblem,
    x: &[f64],
    phi: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
) -> Result<StartOutcome, ConjugateError> {
    if p.hess.is_some() {
        minimize_newton(p, x, phi, start)
    } else {
        minimize_bfgs(p, x, phi, start)
    }
}

fn grad_phi(p: &ConjugateProblem, x: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
    p.gradient(theta)
        .map(|g| g.iter().zip(x).map(|(a, b)| a - b).collect())
}

/// Backtracking line search with an expansion phase; the expansion is what
/// lets linear descent directions reach the divergence threshold quickly.
/// Returns the accepted step, or None if no progress is possible.
fn line_search(
    phi: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    dir: &[f64],
    f0: f64,
    slope: f64,
) -> Result<Option<(Vec<f64>, f64)>, ConjugateError> {
    let c1 = 1e-4;
    let mut t = 1.0;
    let mut ft = f64::INFINITY;
    let mut accepted = false;
    for _ in 0..60 {
        let cand = add_scaled(theta, t, dir);
        ft = phi(&cand);
        if ft.is_finite() && ft <= f0 + c1 * t * slope {
            accepted = true;
            break;
        }
        t *= 0.5;
    }
    if !accepted {
        return Ok(None);
    }
    // expansion while the objective keeps dropping
    for _ in 0..80 {
        let cand = add_scaled(theta, 2.0 * t, dir);
        let f2 = phi(&cand);
        if f2.is_finite() && f2 < ft {
            t *= 2.0;
            ft = f2;
        } else {
            break;
        }
    }
    // midpoint convexity probe on the accepted segment
    let mid = add_scaled(theta, 0.5 * t, dir);
    let fm = phi(&mid);
    let bound = 0.5 * (f0 + ft) + 1e-8 * (1.0 + f0.abs().max(ft.abs()));
    if fm.is_finite() && f0.is_finite() && ft.is_finite() && fm > bound {
        return Err(ConjugateError::NonConvex(format!(
            "phi(mid) = {fm} above chord value {bound}"
        )));
    }
    Ok(Some((add_scaled(theta, t, dir), ft)))
}

fn minimize_bfgs(
    p: &ConjugateProblem,
    x: &[f64],
    phi: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
) -> Result<StartOutcome, ConjugateError> {
    let n = p.dim;
    let tol = p.solver_tol * (1.0 + norm(x));
    let mut theta = start.to_vec();
    let mut f = phi(&theta);
    let mut g = match grad_phi(p, x, &theta) {
        Some(g) => g,
        None => return Ok(StartOutcome::Finished { theta, phi: f }),
    };
    let mut h_inv = Matrix::identity(n);
    for _iter in 0..400 {
        if f < -p.infinity_threshold {
            return Ok(StartOutcome::Diverged);
        }
        if norm(&g) <= tol {
            break;
        }
        let mut dir: Vec<f64> = h_inv.matvec(&g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // reset to steepest descent when the approximation degenerates
            h_inv = Matrix::identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let Some((theta_new, f_new)) = line_search(phi, &theta, &dir, f, slope)? else {
            break;
        };
        let g_new = match grad_phi(p, x, &theta_new) {
            Some(g) => g,
            None => {
                theta = theta_new;
                f = f_new;
                break;
            }
        };
        let s = sub(&theta_new, &theta);
        let y = sub(&g_new, &g);
        let ys = dot(&y, &s);
        if ys > 1e-12 * norm(&y) * norm(&s) {
            // BFGS inverse update H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ
            let rho = 1.0 / ys;
            let hy = h_inv.matvec(&y);
            let yhy = dot(&y, &hy);
            let mut h2 = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let v = h_inv.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                    h2.set(i, j, v);
                }
            }
            h_inv = h2;
        }
        theta = theta_new;
        f = f_new;
        g = g_new;
    }
    if f < -p.infinity_threshold {
        return Ok(StartOutcome::Diverged);
    }
    Ok(StartOutcome::Finished { theta, phi: f })
}

fn minimize_newton(
    p: &ConjugateProblem,
    x: &[f64],
    phi: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
) -> Result<StartOutcome, ConjugateError> {
    let hess = p.hess.as_ref().unwrap();
    let tol = p.solver_tol * (1.0 + norm(x));
    let mut theta = start.to_vec();
    let mut f = phi(&theta);
    for _iter in 0..200 {
        if f < -p.infinity_threshold {
            return Ok(StartOutcome::Diverged);
        }
        let Some(g) = grad_phi(p, x, &theta) else {
            break;
        };
        if norm(&g) <= tol {
            break;
        }
        let h = hess(&theta);
        let dir: Vec<f64> = match h.solve(&g) {
            Ok(d) => d.iter().map(|v| -v).collect(),
            Err(_) => g.iter().map(|v| -v).collect(),
        };
        let mut slope = dot(&g, &dir);
        let dir = if slope >= 0.0 {
            slope = -dot(&g, &g);
            g.iter().map(|v| -v).collect()
        } else {
            dir
        };
        let Some((theta_new, f_new)) = line_search(phi, &theta, &dir, f, slope)? else {
            break;
        };
        theta = theta_new;
        f = f_new;
    }
    if f < -p.infinity_threshold {
        return Ok(StartOutcome::Diverged);
    }
    Ok(StartOutcome::Finished { theta, phi: f })
}

/// Probes g(t·d) = t⟨d,x⟩ − Λ(t·d) along coordinate rays and ±x; a value
/// past `infinity_threshold` classifies the conjugate as +∞.
fn ray_diverges(p: &ConjugateProblem, x: &[f64]) -> bool {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..p.dim {
        let mut e = vec![0.0; p.dim];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    let xn = norm(x);
    if xn > 0.0 {
        dirs.push(x.iter().map(|v| v / xn).collect());
        dirs.push(x.iter().map(|v| -v / xn).collect());
    }
    for d in dirs {
        let mut t = 1.0;
        while t <= 1.5e12 {
            let point: Vec<f64> = d.iter().map(|v| v * t).collect();
            let l = (p.lambda)(&point);
            if !l.is_finite() {
                break;
            }
            if t * dot(&d, x) - l > p.infinity_threshold {
                return true;
            }
            t *= 10.0;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Contraction: infima over fibers U⁻¹(y)
// ---------------------------------------------------------------------------

/// Explicit parametrization of the fiber U⁻¹(y): coordinates in ℝ^dim map to
/// fiber points; `None` marks an empty fiber (e.g. y off the range of U).
#[derive(Clone)]
pub struct FiberChart {
    pub dim: usize,
    pub map: Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>,
}

/// inf { inner_rate(x) : U(x) = y }.
#[derive(Clone)]
pub struct ContractionProblem {
    pub inner_rate: ExtendedFn,
    pub map_u: MapFn,
    /// Dimension h of the domain of U.
    pub domain_dim: usize,
    pub target: Vec<f64>,
    pub chart: Option<FiberChart>,
    /// Per-coordinate search interval for fiber/grid searches.
    pub search_box: (f64, f64),
    /// Final bracket width as a fraction of the box.
    pub resolution: f64,
}

impl ContractionProblem {
    pub fn new(inner_rate: ExtendedFn, map_u: MapFn, domain_dim: usize, target: Vec<f64>) -> Self {
        ContractionProblem {
            inner_rate,
            map_u,
            domain_dim,
            target,
            chart: None,
            search_box: (-10.0, 10.0),
            resolution: 1e-4,
        }
    }

    pub fn with_chart(mut self, chart: FiberChart) -> Self {
        self.chart = Some(chart);
        self
    }

    pub fn with_search_box(mut self, lo: f64, hi: f64) -> Self {
        self.search_box = (lo, hi);
        self
    }
}

/// Infimum of the inner rate over the fiber; +∞ when the fiber is empty or
/// the rate is +∞ on all of it.
pub fn contract(p: &ContractionProblem) -> Result<f64, ContractError> {
    match &p.chart {
        Some(chart) => contract_with_chart(p, chart),
        None => contract_unparametrized(p),
    }
}

fn check_on_fiber(p: &ContractionProblem, point: &[f64]) -> Result<(), ContractError> {
    let u = (p.map_u)(point);
    let gap = norm(&sub(&u, &p.target));
    if gap > 1e-8 * (1.0 + norm(&p.target)) {
        return Err(ContractError::ChartInconsistent(format!(
            "‖U(x) − y‖ = {gap}"
        )));
    }
    Ok(())
}

fn contract_with_chart(p: &ContractionProblem, chart: &FiberChart) -> Result<f64, ContractError> {
    let eval = |coords: &[f64]| -> f64 {
        match (chart.map)(coords) {
            Some(point) => (p.inner_rate)(&point),
            None => f64::INFINITY,
        }
    };
    match chart.dim {
        0 => match (chart.map)(&[]) {
            Some(point) => {
                check_on_fiber(p, &point)?;
                Ok((p.inner_rate)(&point))
            }
            None => Ok(f64::INFINITY),
        },
        1 => Ok(refined_grid_min(&eval, p.search_box, 1, 201, 4)),
        2 => Ok(refined_grid_min(&eval, p.search_box, 2, 41, 4)),
        d => Err(ContractError::FiberTooHighDimensional(d)),
    }
}

fn contract_unparametrized(p: &ContractionProblem) -> Result<f64, ContractError> {
    let h = p.domain_dim;
    let k = p.target.len();
    if h.saturating_sub(k) > 2 || h > 3 {
        return Err(ContractError::UnparametrizedHighDimensional { h, k });
    }
    // Quadratic-penalty homotopy. A fixed stiff weight would make the first
    // coarse grid see only the distance to the fiber and commit the
    // refinement to whichever cell happens to sit closest, losing the
    // infimum along the fiber; starting soft and stiffening per level keeps
    // the early search on the rate landscape.
    let pts_per_dim = match h {
        1 => 201,
        2 => 41,
        _ => 21,
    };
    let mut lo = vec![p.search_box.0; h];
    let mut hi = vec![p.search_box.1; h];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for level in 0..6 {
        let weight = 1e2 * 1e2f64.powi(level);
        let eval = |coords: &[f64]| -> f64 {
            let u = (p.map_u)(coords);
            let gap2: f64 = u
                .iter()
                .zip(&p.target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let inner = (p.inner_rate)(coords);
            if inner.is_finite() {
                inner + weight * gap2
            } else {
                f64::INFINITY
            }
        };
        let level_best = grid_scan(&eval, &lo, &hi, pts_per_dim);
        let Some((center, value)) = level_best else {
            return Ok(f64::INFINITY);
        };
        for d in 0..h {
            let w = (hi[d] - lo[d]) / (pts_per_dim - 1) as f64;
            lo[d] = (center[d] - 2.0 * w).max(p.search_box.0);
            hi[d] = (center[d] + 2.0 * w).min(p.search_box.1);
        }
        best = Some((center, value));
    }
    match best {
        Some((coords, _)) => {
            let u = (p.map_u)(&coords);
            let gap = norm(&sub(&u, &p.target));
            if gap > 1e-3 * (1.0 + norm(&p.target)) {
                // nothing in the box reaches the fiber
                Ok(f64::INFINITY)
            } else {
                Ok((p.inner_rate)(&coords))
            }
        }
        None => Ok(f64::INFINITY),
    }
}

/// Single scan of a uniform grid over [lo, hi]^dim.
fn grid_scan(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    pts: usize,
) -> Option<(Vec<f64>, f64)> {
    let dim = lo.len();
    let mut idx = vec![0usize; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let point: Vec<f64> = (0..dim)
            .map(|d| lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (pts - 1) as f64)
            .collect();
        let v = f(&point);
        if v.is_finite() && best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((point, v));
        }
        let mut d = 0;
        loop {
            if d == dim {
                break;
            }
            idx[d] += 1;
            if idx[d] < pts {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }
    best
}

fn refined_grid_min(
    f: &dyn Fn(&[f64]) -> f64,
    box_: (f64, f64),
    dim: usize,
    pts: usize,
    levels: usize,
) -> f64 {
    refined_grid_min_arg(f, box_, dim, pts, levels)
        .map(|(_, v)| v)
        .unwrap_or(f64::INFINITY)
}

/// Nested grid minimizer: scan, then shrink the box around the best cell.
fn refined_grid_min_arg(
    f: &dyn Fn(&[f64]) -> f64,
    box_: (f64, f64),
    dim: usize,
    pts: usize,
    levels: usize,
) -> Option<(Vec<f64>, f64)> {
    let mut lo = vec![box_.0; dim];
    let mut hi = vec![box_.1; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..levels {
        let Some((center, v)) = grid_scan(f, &lo, &hi, pts) else {
            return best;
        };
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((center.clone(), v));
        }
        for d in 0..dim {
            let w = (hi[d] - lo[d]) / (pts - 1) as f64;
            lo[d] = (center[d] - 2.0 * w).max(box_.0);
            hi[d] = (center[d] + 2.0 * w).min(box_.1);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quadratic(dim: usize) -> ConjugateProblem {
        ConjugateProblem::new(
            dim,
            Arc::new(|t: &[f64]| 0.5 * t.iter().map(|v| v * v).sum::<f64>()),
        )
    }

    #[test]
    fn self_conjugate_quadratic() {
        let p = quadratic(2);
        for x in [[1.0, 0.0], [0.3, -2.0], [5.0, 4.0]] {
            let out = conjugate(&p, &x).unwrap();
            let expected = 0.5 * (x[0] * x[0] + x[1] * x[1]);
            assert!((out.value - expected).abs() < 1e-8, "{out:?}");
            let m = out.maximizer.expect("stationarity should hold");
            assert!((m[0] - x[0]).abs() < 1e-6 && (m[1] - x[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_conjugate_identity() {
        // Λ(θ) = ⟨θ,Qθ⟩/2 with Q = diag(2,1) at x = (1,1): ⟨x,Q⁻¹x⟩/2 = 0.75
        let q = Matrix::diagonal(&[2.0, 1.0]);
        let qc = q.clone();
        let p = ConjugateProblem::new(2, Arc::new(move |t: &[f64]| 0.5 * qc.quadratic_form(t)))
            .with_hess(Arc::new(move |_t: &[f64]| q.clone()));
        let out = conjugate(&p, &[1.0, 1.0]).unwrap();
        assert!((out.value - 0.75).abs() < 1e-8, "{}", out.value);
    }

    #[test]
    fn one_sided_linear_gives_infinity() {
        // Λ(θ) = θ·m·1_{θm ≥ 0} with m = 1; at x = −0.5 the sup diverges as
        // θ → −∞. The brute-force grid shows the divergence too.
        let p = ConjugateProblem::new(
            1,
            Arc::new(|t: &[f64]| if t[0] >= 0.0 { t[0] } else { 0.0 }),
        );
        let out = conjugate(&p, &[-0.5]).unwrap();
        assert_eq!(out.value, f64::INFINITY);
        let grid = crate::oracle::grid_conjugate_1d(
            &|t| if t >= 0.0 { t } else { 0.0 },
            -0.5,
            -1e6,
            1e6,
            100_000,
        );
        assert!(grid > 1e5);
        // while x in [0,1] stays finite: sup θx − θ over θ ≥ 0 is 0
        let out = conjugate(&p, &[0.5]).unwrap();
        assert!((out.value - 0.0).abs() < 1e-9);
    }

    #[test]
    fn unique_zero_at_gradient_origin() {
        // Λ(θ) = ⟨θ, μ⟩ + ‖θ‖²/2 has ∇Λ(0) = μ; conjugate vanishes there only.
        let mu = vec![0.7, -0.3];
        let mu_c = mu.clone();
        let p = ConjugateProblem::new(
            2,
            Arc::new(move |t: &[f64]| dot(t, &mu_c) + 0.5 * t.iter().map(|v| v * v).sum::<f64>()),
        );
        assert!(conjugate(&p, &mu).unwrap().value < 1e-10);
        for d in [[0.3, 0.0], [0.0, -0.4]] {
            let x: Vec<f64> = mu.iter().zip(d).map(|(m, e)| m + e).collect();
            assert!(conjugate(&p, &x).unwrap().value > 1e-3);
        }
    }

    #[test]
    fn detects_concave_objective() {
        let p = ConjugateProblem::new(1, Arc::new(|t: &[f64]| -t[0] * t[0]));
        assert!(matches!(
            conjugate(&p, &[0.2]),
            Err(ConjugateError::NonConvex(_))
        ));
    }

    #[test]
    fn rejects_dimension_above_six() {
        let p = quadratic(7);
        assert!(matches!(
            conjugate(&p, &[0.0; 7]),
            Err(ConjugateError::DimensionTooLarge(7))
        ));
    }

    #[test]
    fn bounded_domain_conjugate() {
        // Λ(θ) = −log(1−θ) for θ < 1 (steep at the boundary): Λ* is the
        // gamma-type rate x − 1 − log x for x > 0.
        let p = ConjugateProblem::new(
            1,
            Arc::new(|t: &[f64]| {
                if t[0] < 1.0 {
                    -(1.0 - t[0]).ln()
                } else {
                    f64::INFINITY
                }
            }),
        )
        .with_domain_radius(1.0);
        for x in [0.3, 1.0, 2.5] {
            let out = conjugate(&p, &[x]).unwrap();
            let expected = x - 1.0 - x.ln();
            assert!(
                (out.value - expected).abs() < 1e-7,
                "x={x}: {} vs {expected}",
                out.value
            );
        }
    }

    proptest! {
        /// Weak duality: every grid point θ gives a lower bound on Λ*(x).
        #[test]
        fn weak_duality_quadratic(x1 in -3.0f64..3.0, x2 in -3.0f64..3.0,
                                  t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
            let p = quadratic(2);
            let out = conjugate(&p, &[x1, x2]).unwrap();
            let lower = t1 * x1 + t2 * x2 - 0.5 * (t1 * t1 + t2 * t2);
            prop_assert!(lower <= out.value + 1e-8);
        }
    }

    #[test]
    fn contract_identity_is_inner_rate() {
        // fiber of the identity at y is the single point y
        let inner: ExtendedFn = Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]);
        let y = vec![1.3];
        let p = ContractionProblem::new(inner, Arc::new(|x: &[f64]| x.to_vec()), 1, y.clone())
            .with_chart(FiberChart {
                dim: 0,
                map: Arc::new(move |_: &[f64]| Some(y.clone())),
            });
        let v = contract(&p).unwrap();
        assert!((v - 0.5 * 1.3 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn contract_identity_unparametrized_matches() {
        let inner: ExtendedFn = Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let p =
            ContractionProblem::new(inner, Arc::new(|x: &[f64]| x.to_vec()), 2, vec![0.8, -0.6]);
        let v = contract(&p).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "got {v}");
    }

    #[test]
    fn contract_empty_fiber_is_infinite() {
        let inner: ExtendedFn = Arc::new(|_: &[f64]| 1.0);
        let p = ContractionProblem::new(
            inner,
            Arc::new(|x: &[f64]| vec![x[0] * x[0]]),
            1,
            vec![-1.0], // x² = −1 has no solution
        )
        .with_chart(FiberChart {
            dim: 0,
            map: Arc::new(|_: &[f64]| None),
        });
        assert_eq!(contract(&p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn contract_unparametrized_matches_chart_on_curved_fiber() {
        // h = 2, k = 1, U(x) = 0.8·x₁ + 0.6·|x₂|: the penalized search must
        // find the same infimum as the explicit parametrization, including
        // the kink at x₂ = 0.
        let inner: ExtendedFn = Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let map: MapFn = Arc::new(|x: &[f64]| vec![0.8 * x[0] + 0.6 * x[1].abs()]);
        for y in [-1.0, 0.3, 1.5] {
            let chart_problem =
                ContractionProblem::new(Arc::clone(&inner), Arc::clone(&map), 2, vec![y])
                    .with_chart(FiberChart {
                        dim: 1,
                        map: Arc::new(move |s: &[f64]| {
                            Some(vec![(y - 0.6 * s[0].abs()) / 0.8, s[0]])
                        }),
                    });
            let with_chart = contract(&chart_problem).unwrap();
            let free_problem =
                ContractionProblem::new(Arc::clone(&inner), Arc::clone(&map), 2, vec![y]);
            let without = contract(&free_problem).unwrap();
            assert!(
                (with_chart - without).abs() < 2e-3,
                "y={y}: chart {with_chart} vs unparametrized {without}"
            );
        }
    }

    #[test]
    fn contract_rejects_high_dimensional_unparametrized() {
        let inner: ExtendedFn = Arc::new(|_: &[f64]| 0.0);
        let p = ContractionProblem::new(inner, Arc::new(|x: &[f64]| vec![x[0]]), 5, vec![0.0]);
        assert!(matches!(
            contract(&p),
            Err(ContractError::UnparametrizedHighDimensional { .. })
        ));
    }

    #[test]
    fn contract_one_dimensional_fiber() {
        // inner = ‖·‖²/2 on ℝ², U(x) = x₁ + x₂, y = 2: infimum at (1,1) is 1.
        let inner: ExtendedFn = Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let p =
            ContractionProblem::new(inner, Arc::new(|x: &[f64]| vec![x[0] + x[1]]), 2, vec![2.0])
                .with_chart(FiberChart {
                    dim: 1,
                    map: Arc::new(|s: &[f64]| Some(vec![s[0], 2.0 - s[0]])),
                });
        let v = contract(&p).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }
}
