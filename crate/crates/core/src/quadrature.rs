//! Quadrature helpers: adaptive Simpson on finite intervals and
//! Gauss–Hermite rules for expectations against a standard Gaussian.

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Recursion stops when the Richardson error estimate on a panel is below
/// `tol` scaled to the panel; accuracy is limited by f64 and the smoothness
/// of `f`, not by the depth cap (48 levels).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Nodes and weights of the n-point Gauss–Hermite rule for weight e^{-x²},
/// found by Newton iteration on the Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 200);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        // Standard initial guesses for the largest roots, then step inward.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // Orthonormal Hermite recurrence.
            let mut p1 = core::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// E[f(Z)] for Z ~ N(0,1) by an n-point Gauss–Hermite rule.
pub fn gaussian_expectation(f: &dyn Fn(f64) -> f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_hermite(n);
    let c = core::f64::consts::PI.sqrt();
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(core::f64::consts::SQRT_2 * x))
        .sum::<f64>()
        / c
}

/// E[f(Z₁, Z₂)] for independent standard Gaussians, tensorized Gauss–Hermite.
pub fn gaussian_expectation_2d(f: &dyn Fn(f64, f64) -> f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_hermite(n);
    let c = core::f64::consts::PI;
    let mut acc = 0.0;
    for (&x1, &w1) in nodes.iter().zip(&weights) {
        for (&x2, &w2) in nodes.iter().zip(&weights) {
            acc += w1
                * w2
                * f(
                    core::f64::consts::SQRT_2 * x1,
                    core::f64::consts::SQRT_2 * x2,
                );
        }
    }
    acc / c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        // ∫₀² (x³ − 2x + 1) dx = 4 − 4 + 2 = 2
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_gaussian_mass() {
        let v = adaptive_simpson(
            &|x| (-0.5 * x * x).exp() / (2.0 * core::f64::consts::PI).sqrt(),
            -10.0,
            10.0,
            1e-13,
        );
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn hermite_moments() {
        // E[1] = 1, E[Z²] = 1, E[Z⁴] = 3 for N(0,1).
        assert!((gaussian_expectation(&|_| 1.0, 40) - 1.0).abs() < 1e-12);
        assert!((gaussian_expectation(&|z| z * z, 40) - 1.0).abs() < 1e-11);
        assert!((gaussian_expectation(&|z| z.powi(4), 40) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_mgf_of_gaussian() {
        // E[e^{θZ}] = e^{θ²/2}.
        let theta = 0.7;
        let v = gaussian_expectation(&|z| (theta * z).exp(), 60);
        assert!((v - (0.5 * theta * theta).exp()).abs() < 1e-11);
    }

    #[test]
    fn hermite_2d_factorizes() {
        let v = gaussian_expectation_2d(&|a, b| (0.3 * a + 0.2 * b).exp(), 40);
        let target = (0.5 * (0.09 + 0.04) as f64).exp();
        assert!((v - target).abs() < 1e-10);
    }
}
