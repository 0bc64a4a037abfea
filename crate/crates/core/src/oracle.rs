//! Independent reference implementations used to verify the fast paths.
//!
//! Nothing in here is called by the production evaluators; tests and the
//! acceptance suite compare against these routines. The extended-precision
//! pieces use double-double arithmetic (~31 significant digits), which is
//! what makes the alternating Mittag-Leffler series usable as a reference on
//! the moderately negative axis where plain f64 summation loses to
//! cancellation.

use crate::quadrature::adaptive_simpson;

// ---------------------------------------------------------------------------
// Double-double arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum `hi + lo` with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    const LN2: Dd = Dd {
        hi: core::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// 2π to double-double precision.
    const TWO_PI: Dd = Dd {
        hi: core::f64::consts::TAU,
        lo: 2.449_293_598_294_706_4e-16,
    };

    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, v: f64) -> Dd {
        let (p, e) = two_prod(self.hi, v);
        let e = e + self.lo * v;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    /// e^self; |argument| up to ~700 after range reduction by ln 2.
    pub fn exp(self) -> Dd {
        if self.hi < -746.0 {
            return Dd::ZERO;
        }
        if self.hi > 710.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let m = (self.hi / Dd::LN2.hi).round();
        let r = self.sub(Dd::LN2.mul_f64(m));
        // Taylor at the reduced argument, |r| ≤ ln2/2.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..=26 {
            term = term.mul(r).div(Dd::from_f64(k as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        let scale = (m).exp2();
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// ln(self) for self > 0, by Newton refinement of the f64 logarithm.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of non-positive double-double");
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            // y ← y + x·e^{−y} − 1
            let e = self.mul(y.neg().exp());
            y = y.add(e).sub(Dd::ONE);
        }
        y
    }
}

// ---------------------------------------------------------------------------
// Extended-precision log-gamma (Stirling with Bernoulli tail + lifting)
// ---------------------------------------------------------------------------

/// B_{2j} as exact rationals for j = 1..=18.
const BERNOULLI: [(i128, i128); 18] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
    (-7709321041217, 510),
    (2577687858367, 6),
    (-26315271553053477373, 1919190),
];

fn dd_from_i128(v: i128) -> Dd {
    let hi = v as f64;
    let lo = (v - hi as i128) as f64;
    let (h, l) = two_sum(hi, lo);
    Dd { hi: h, lo: l }
}

/// Stirling coefficients B_{2j} / (2j (2j−1)).
fn stirling_coefficients() -> Vec<Dd> {
    BERNOULLI
        .iter()
        .enumerate()
        .map(|(i, &(num, den))| {
            let j = (i + 1) as i128;
            dd_from_i128(num).div(dd_from_i128(den * 2 * j * (2 * j - 1)))
        })
        .collect()
}

/// ln Γ(z) in double-double precision for z ≥ 0.5.
///
/// Arguments below 26 are lifted with ln Γ(z) = ln Γ(z + m) − Σ ln(z + i);
/// the Stirling series with 18 Bernoulli terms then leaves a remainder below
/// the double-double ulp.
pub fn ln_gamma_dd(z: Dd) -> Dd {
    assert!(z.hi >= 0.5, "ln_gamma_dd requires z >= 0.5");
    let coeffs = stirling_coefficients();
    let mut shift = Dd::ZERO;
    let mut w = z;
    while w.hi < 26.0 {
        shift = shift.add(w.ln());
        w = w.add(Dd::ONE);
    }
    // (w − 1/2) ln w − w + ln(2π)/2 + Σ c_j / w^{2j−1}
    let mut res = w
        .sub(Dd::from_f64(0.5))
        .mul(w.ln())
        .sub(w)
        .add(Dd::TWO_PI.ln().mul_f64(0.5));
    let w2 = w.mul(w);
    let mut wp = w;
    for c in &coeffs {
        res = res.add(c.div(wp));
        wp = wp.mul(w2);
    }
    res.sub(shift)
}

// ---------------------------------------------------------------------------
// Mittag-Leffler references
// ---------------------------------------------------------------------------

/// Outcome of the extended-precision series Σ x^k / Γ(νk + 1).
#[derive(Debug, Clone)]
pub struct MlSeriesRef {
    pub value: Dd,
    pub terms_used: usize,
    pub converged: bool,
    /// log of the largest term magnitude; log₁₀(peak/|value|) is the number
    /// of decimal digits lost to cancellation when x < 0.
    pub peak_log: f64,
}

impl MlSeriesRef {
    /// Crude relative error bound: double-double ulp inflated by the
    /// cancellation ratio.
    pub fn rel_err_bound(&self) -> f64 {
        if !self.converged || self.value.hi <= 0.0 {
            return f64::INFINITY;
        }
        let cancel = (self.peak_log - self.value.value().abs().ln()).max(0.0);
        1e-30 * cancel.exp().max(1.0)
    }
}

/// Series reference for E_ν(x), summed in double-double with terms built
/// from the double-double log-gamma. Caps at `max_terms`.
pub fn ml_series_reference(nu: f64, x: f64, max_terms: usize) -> MlSeriesRef {
    assert!(nu > 0.0 && nu < 1.0);
    if x == 0.0 {
        return MlSeriesRef {
            value: Dd::ONE,
            terms_used: 1,
            converged: true,
            peak_log: 0.0,
        };
    }
    let ln_ax = Dd::from_f64(x.abs()).ln();
    let nu_dd = Dd::from_f64(nu);
    let mut sum = Dd::ONE;
    let mut peak_log: f64 = 0.0;
    let mut prev_ln_t = 0.0_f64;
    let mut terms = 1usize;
    let mut converged = false;
    for k in 1..max_terms {
        let kf = k as f64;
        let arg = nu_dd.mul_f64(kf).add(Dd::ONE);
        let ln_t = ln_ax.mul_f64(kf).sub(ln_gamma_dd(arg));
        let ln_t_f = ln_t.value();
        if ln_t_f > 706.0 {
            // Term exceeds the f64 range; the representable sum is already
            // meaningless, report non-convergence and let the caller switch
            // to a log-scale route.
            return MlSeriesRef {
                value: sum,
                terms_used: terms,
                converged: false,
                peak_log: ln_t_f,
            };
        }
        peak_log = peak_log.max(ln_t_f);
        let mut term = ln_t.exp();
        if x < 0.0 && k % 2 == 1 {
            term = term.neg();
        }
        sum = sum.add(term);
        terms += 1;
        let sum_mag = sum.value().abs().max(1e-300);
        if ln_t_f < sum_mag.ln() - 75.0 && ln_t_f < prev_ln_t {
            converged = true;
            break;
        }
        prev_ln_t = ln_t_f;
    }
    MlSeriesRef {
        value: sum,
        terms_used: terms,
        converged,
        peak_log,
    }
}

/// log E_ν(x) for x > 0 from the series, keeping only logarithms so the
/// result is available far past the f64 overflow point of E_ν itself.
///
/// Terms more than 50 log-units below the running peak cannot move the
/// result at the 1e-12 level, so a cheap f64 prescreen picks the window that
/// is then summed in double-double.
pub fn ml_log_series_reference(nu: f64, x: f64, max_terms: usize) -> Option<f64> {
    assert!(x > 0.0);
    let ln_x = x.ln();
    let mut peak = 0.0_f64;
    let mut k_stop = max_terms;
    for k in 1..max_terms {
        let ln_t = k as f64 * ln_x - libm::lgamma(nu * k as f64 + 1.0);
        if ln_t > peak {
            peak = ln_t;
        } else if ln_t < peak - 60.0 {
            k_stop = k;
            break;
        }
    }
    if k_stop == max_terms {
        return None;
    }
    let nu_dd = Dd::from_f64(nu);
    let ln_x_dd = Dd::from_f64(x).ln();
    let mut sum = Dd::ZERO;
    for k in 0..=k_stop {
        let prescreen = k as f64 * ln_x - libm::lgamma(nu * k as f64 + 1.0);
        if prescreen < peak - 50.0 {
            continue;
        }
        let ln_t = if k == 0 {
            Dd::ZERO
        } else {
            let arg = nu_dd.mul_f64(k as f64).add(Dd::ONE);
            ln_x_dd.mul_f64(k as f64).sub(ln_gamma_dd(arg))
        };
        sum = sum.add(ln_t.sub(Dd::from_f64(peak)).exp());
    }
    Some(peak + sum.ln().value())
}

/// Algebraic-tail reference for E_ν(x) with x < 0: the divergent expansion
/// −Σ_{k≥1} x^{−k} / Γ(1 − νk) truncated at its smallest term. The truncation
/// error is ~e^{−|x|^{1/ν}}, so this is a near-exact reference once
/// |x|^{1/ν} ≳ 33 and useless before that.
pub fn ml_asymptotic_negative(nu: f64, x: f64) -> (f64, f64) {
    assert!(x < 0.0);
    let r = -x;
    let ln_r = r.ln();
    // Term magnitudes oscillate near the Γ poles, so locate the global
    // minimum first and truncate there; the error is ~ the smallest term.
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for k in 1..=400usize {
        let (lg, sign) = lgamma_sign(1.0 - nu * k as f64);
        if sign == 0.0 {
            continue;
        }
        let mag = (-(k as f64) * ln_r - lg).exp();
        // term = −x^{−k}/Γ(1−νk) = (−1)^{k+1} r^{−k}/Γ(1−νk)
        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
        terms.push((s * mag * sign, mag));
        if mag < 1e-280 {
            break;
        }
    }
    let cut = terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let sum: f64 = terms[..cut].iter().map(|t| t.0).sum();
    (sum, terms[cut].1)
}

/// (ln |Γ(x)|, sign of Γ(x)); sign 0.0 at the poles.
pub fn lgamma_sign(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.floor() {
        return (f64::INFINITY, 0.0);
    }
    let (v, s) = libm::lgamma_r(x);
    (v, s as f64)
}

/// erfc(z) by quadrature of its defining integral: the exponential scale is
/// factored out so the integrand stays O(1).
pub fn erfc_quadrature(z: f64) -> f64 {
    if z < 0.0 {
        return 2.0 - erfc_quadrature(-z);
    }
    // erfc(z) = (2/√π) e^{−z²} ∫₀^∞ e^{−2zu − u²} du
    let integral = adaptive_simpson(&|u| (-2.0 * z * u - u * u).exp(), 0.0, 40.0, 1e-14);
    2.0 / core::f64::consts::PI.sqrt() * (-z * z).exp() * integral
}

// ---------------------------------------------------------------------------
// Brute-force conjugates
// ---------------------------------------------------------------------------

/// sup_θ { θx − Λ(θ) } over a uniform grid; the blunt instrument the derived
/// test values call for.
pub fn grid_conjugate_1d(lambda: &dyn Fn(f64) -> f64, x: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let theta = lo + (hi - lo) * i as f64 / n as f64;
        let l = lambda(theta);
        if l.is_finite() {
            best = best.max(theta * x - l);
        }
    }
    best
}

/// Grid infimum of `f` over `[lo, hi]`, refined around the best point.
pub fn grid_infimum_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize, levels: usize) -> f64 {
    let mut a = lo;
    let mut b = hi;
    let mut best = f64::INFINITY;
    let mut best_t = 0.5 * (lo + hi);
    for _ in 0..levels {
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let v = f(t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
        let w = (b - a) / n as f64;
        a = (best_t - 2.0 * w).max(lo);
        b = (best_t + 2.0 * w).min(hi);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_basics() {
        // 0.1 + 0.2 differs from 0.3 by the representation error of the
        // f64 literals themselves, ≈2.78e-17; Dd resolves it exactly.
        let a = Dd::from_f64(0.1).add(Dd::from_f64(0.2));
        let b = Dd::from_f64(0.3);
        let d = a.sub(b).value();
        assert!(d > 0.0 && d < 1e-16, "got {d}");
        let p = Dd::from_f64(1e16).add(Dd::from_f64(1.0));
        assert_eq!(p.sub(Dd::from_f64(1e16)).value(), 1.0);
    }

    #[test]
    fn dd_exp_ln_roundtrip() {
        for &v in &[1e-3, 0.5, 1.0, 3.7, 42.0, 600.0] {
            let x = Dd::from_f64(v);
            let r = x.ln().exp();
            assert!(
                (r.value() - v).abs() / v < 1e-29,
                "roundtrip failed at {v}: {}",
                r.value()
            );
        }
    }

    #[test]
    fn dd_exp_matches_f64() {
        for &v in &[-20.0, -1.0, 0.0, 1.0, 10.0, 300.0] {
            let e = Dd::from_f64(v).exp().value();
            assert!((e - v.exp()).abs() <= 2.0 * f64::EPSILON * v.exp());
        }
    }

    #[test]
    fn ln_gamma_dd_matches_libm() {
        for &z in &[1.0, 1.5, 2.0, 3.25, 10.0, 55.5, 140.0, 400.0] {
            let ours = ln_gamma_dd(Dd::from_f64(z)).value();
            let theirs = libm::lgamma(z);
            assert!(
                (ours - theirs).abs() <= 1e-13 * (1.0 + theirs.abs()),
                "lgamma mismatch at {z}: {ours} vs {theirs}"
            );
        }
    }

    #[test]
    fn ln_gamma_dd_recurrence_is_dd_accurate() {
        // ln Γ(z+1) − ln Γ(z) = ln z must hold to double-double accuracy;
        // the argument z+1 is formed in Dd so the identity is exact.
        for &z in &[1.3, 7.8, 26.4, 99.9] {
            let zd = Dd::from_f64(z);
            let lhs = ln_gamma_dd(zd.add(Dd::ONE)).sub(ln_gamma_dd(zd));
            let rhs = zd.ln();
            let res = lhs.sub(rhs).value().abs();
            assert!(
                res < 1e-27 * (1.0 + rhs.value().abs()),
                "recurrence violated at {z}: residual {res:e}"
            );
        }
    }

    #[test]
    fn ml_series_reference_exponential_limit() {
        // ν near 1 reduces to eˣ.
        let r = ml_series_reference(0.999_999, 1.0, 400);
        assert!(r.converged);
        assert!((r.value.value() - 1.0_f64.exp()).abs() < 1e-4);
    }

    #[test]
    fn ml_series_matches_erfc_identity_at_half() {
        // E_{1/2}(x) = e^{x²} erfc(−x)
        for &x in &[-2.0, -0.5, 0.0, 0.5, 1.0, 2.5] {
            let series = ml_series_reference(0.5, x, 600);
            assert!(series.converged);
            let closed = (x * x).exp() * erfc_quadrature(-x);
            let rel = (series.value.value() - closed).abs() / closed;
            assert!(
                rel < 1e-11,
                "x={x}: series {} vs erfc {closed}",
                series.value.value()
            );
        }
    }

    #[test]
    fn ml_asymptotic_meets_series_in_overlap() {
        // Both references are valid near |x|^{1/ν} ≈ 33; they must agree.
        for &nu in &[0.3, 0.5, 0.8] {
            let x = -(34.0_f64.powf(nu));
            let series = ml_series_reference(nu, x, 4000);
            assert!(series.converged, "series did not converge at nu={nu}");
            let (asym, err) = ml_asymptotic_negative(nu, x);
            let rel = (series.value.value() - asym).abs() / asym.abs();
            assert!(
                rel < 1e-9,
                "nu={nu} x={x}: series {} vs asym {asym} (trunc err {err})",
                series.value.value()
            );
        }
    }

    #[test]
    fn log_series_reference_consistent_with_linear() {
        let nu = 0.6;
        let x = 5.0;
        let lin = ml_series_reference(nu, x, 2000);
        let log = ml_log_series_reference(nu, x, 20000).unwrap();
        assert!((log - lin.value.value().ln()).abs() < 1e-11);
    }

    #[test]
    fn erfc_quadrature_known_values() {
        // erfc(0) = 1, and the classical tail value at 1.
        assert!((erfc_quadrature(0.0) - 1.0).abs() < 1e-12);
        assert!((erfc_quadrature(1.0) - 0.157_299_207_050_285_13).abs() < 1e-12);
        assert!((erfc_quadrature(-1.0) - 1.842_700_792_949_714_9).abs() < 1e-12);
    }

    #[test]
    fn grid_conjugate_recovers_quadratic() {
        let v = grid_conjugate_1d(&|t| 0.5 * t * t, 1.5, -10.0, 10.0, 20000);
        assert!((v - 0.5 * 1.5 * 1.5).abs() < 1e-5);
    }
}
