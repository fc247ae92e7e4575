//! Jacobi Θ₃ and its derivative, evaluated in scaled form.
//!
//! Θ₃(u, τ) = Σₙ exp(iπτn² + 2inu) grows like exp((Im u)²/(π Im τ)) away from
//! the real axis, so every evaluation first folds `u` into the strip
//! |Im u| ≤ π Im τ / 2 with the quasi-period u → u + πτ and carries the
//! removed growth as a separate real exponent.

use std::f64::consts::PI;
use std::ops::{Mul, MulAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Nome parameter and truncation policy for the Θ₃ series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaParams {
    tau: Complex64,
    eps: f64,
    terms: i64,
}

impl ThetaParams {
    pub const DEFAULT_EPS: f64 = 1e-14;

    pub fn new(tau: Complex64, eps: f64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "theta series needs Im(tau) > 0, got tau = {tau}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!(
                "truncation tolerance must lie in (0, 1), got {eps}"
            )));
        }
        // Terms decay as exp(-π Im τ n²) inside the reduced strip.
        let terms = ((1.0 / eps).ln() / (PI * tau.im)).sqrt().ceil() as i64 + 2;
        Ok(Self { tau, eps, terms })
    }

    /// τ = i·b for b > 0 with the default tolerance.
    pub fn imaginary(b: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, b), Self::DEFAULT_EPS)
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Series is summed over n = -terms..=terms.
    pub fn terms(&self) -> i64 {
        self.terms
    }

    /// Same τ, with the truncation order doubled.
    pub fn doubled(&self) -> Self {
        Self { terms: 2 * self.terms, ..*self }
    }
}

/// A complex number stored as `value · exp(log_scale)`.
///
/// Products of many theta factors leave the range of `f64` long before the
/// quantities of interest (ratios, phases, zeros) do, so arithmetic between
/// theta values stays in this form until the very end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    pub log_scale: f64,
}

impl ThetaValue {
    pub const ZERO: Self = Self { value: Complex64::new(0.0, 0.0), log_scale: 0.0 };
    pub const ONE: Self = Self { value: Complex64::new(1.0, 0.0), log_scale: 0.0 };

    pub fn new(value: Complex64, log_scale: f64) -> Self {
        Self { value, log_scale }.normalized()
    }

    pub fn from_complex(value: Complex64) -> Self {
        Self::new(value, 0.0)
    }

    /// exp(w) without forming it.
    pub fn exp(w: Complex64) -> Self {
        Self { value: Complex64::from_polar(1.0, w.im), log_scale: w.re }
    }

    /// Rebase so that |value| is 1 (or the value is exactly zero).
    pub fn normalized(self) -> Self {
        let m = self.value.norm();
        if m == 0.0 || !m.is_finite() {
            return Self { value: self.value, log_scale: if m == 0.0 { 0.0 } else { self.log_scale } };
        }
        Self { value: self.value / m, log_scale: self.log_scale + m.ln() }
    }

    pub fn is_zero(&self) -> bool {
        self.value == Complex64::new(0.0, 0.0)
    }

    /// Plain complex value; overflows to infinity when the scale is too large.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return self.value;
        }
        self.value * self.log_scale.exp()
    }

    /// ln |x|, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.value.norm().ln() + self.log_scale
        }
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn arg(&self) -> f64 {
        self.value.arg()
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.log_scale >= other.log_scale { (self, other) } else { (other, self) };
        let v = hi.value + lo.value * (lo.log_scale - hi.log_scale).exp();
        Self::new(v, hi.log_scale)
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(Self { value: -other.value, ..other })
    }

    pub fn scale(self, c: Complex64) -> Self {
        Self::new(self.value * c, self.log_scale)
    }

    pub fn div(self, other: Self) -> Self {
        Self::new(self.value / other.value, self.log_scale - other.log_scale)
    }

    pub fn recip(self) -> Self {
        Self::new(self.value.inv(), -self.log_scale)
    }

    /// Complex ratio self/other, finite whenever the ratio itself is.
    pub fn ratio(self, other: Self) -> Complex64 {
        self.div(other).to_complex()
    }
}

impl Mul for ThetaValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(self.value * rhs.value, self.log_scale + rhs.log_scale)
    }
}

impl MulAssign for ThetaValue {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for ThetaValue {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::ZERO, Self::add)
    }
}

impl std::iter::Product for ThetaValue {
    fn product<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::ONE, |a, b| a * b)
    }
}

/// Reduced argument together with the factor that relates the two evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduction {
    /// Argument inside the fundamental strip, real part in [-π/2, π/2).
    pub reduced: Complex64,
    /// Unit-modulus phase of the quasi-periodicity factor.
    pub prefactor: Complex64,
    /// Real exponent of the quasi-periodicity factor.
    pub log_scale: f64,
    /// Number of πτ translations removed.
    pub shifts: i64,
}

/// Θ₃(u) = prefactor · exp(log_scale) · Θ₃(reduced).
///
/// Uses Θ₃(u + π) = Θ₃(u) and Θ₃(u + kπτ) = exp(-iπτk² - 2iku) Θ₃(u).
pub fn reduce_argument(u: Complex64, params: &ThetaParams) -> Reduction {
    let tau = params.tau;
    let strip = PI * tau.im;
    let k = if u.im.abs() > 0.5 * strip { (u.im / strip).round() as i64 } else { 0 };
    let mut v = u - PI * tau * k as f64;
    let j = (v.re / PI + 0.5).floor();
    v -= PI * j;
    let kf = k as f64;
    let w = -I * PI * tau * kf * kf - 2.0 * I * kf * v;
    Reduction {
        reduced: v,
        prefactor: Complex64::from_polar(1.0, w.im),
        log_scale: w.re,
        shifts: k,
    }
}

/// Truncated sums Σ exp(iπτn² + 2inu) and Σ 2in exp(...) at an argument
/// already inside the strip.
fn raw_series(u: Complex64, params: &ThetaParams) -> (Complex64, Complex64) {
    let tau = params.tau;
    let mut value = Complex64::new(1.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for n in 1..=params.terms {
        let nf = n as f64;
        let base = I * PI * tau * nf * nf;
        let plus = (base + 2.0 * I * nf * u).exp();
        let minus = (base - 2.0 * I * nf * u).exp();
        value += plus + minus;
        deriv += 2.0 * I * nf * (plus - minus);
    }
    (value, deriv)
}

/// Θ₃(u, τ) in scaled form.
pub fn theta3(u: Complex64, params: &ThetaParams) -> ThetaValue {
    let r = reduce_argument(u, params);
    let (s, _) = raw_series(r.reduced, params);
    ThetaValue::new(r.prefactor * s, r.log_scale)
}

/// dΘ₃/du in scaled form.
pub fn theta3_deriv(u: Complex64, params: &ThetaParams) -> ThetaValue {
    theta3_with_deriv(u, params).1
}

/// Both Θ₃ and dΘ₃/du, sharing one pass over the series.
pub fn theta3_with_deriv(u: Complex64, params: &ThetaParams) -> (ThetaValue, ThetaValue) {
    let r = reduce_argument(u, params);
    let (s, ds) = raw_series(r.reduced, params);
    // d/du of exp(-iπτk² - 2iku) Θ₃(u - kπτ) picks up -2ik Θ₃.
    let k = r.shifts as f64;
    let value = ThetaValue::new(r.prefactor * s, r.log_scale);
    let deriv = ThetaValue::new(r.prefactor * (ds - 2.0 * I * k * s), r.log_scale);
    (value, deriv)
}

/// The canonical zero of Θ₃(·, i): u = π(1+i)/2.
pub fn canonical_zero() -> Complex64 {
    Complex64::new(0.5 * PI, 0.5 * PI)
}

/// Θ₃′[π(1+i)/2; i], the slope of every factor of the product form at its zero.
pub fn canonical_zero_slope() -> Complex64 {
    let params = ThetaParams::imaginary(1.0).expect("tau = i is valid");
    theta3_deriv(canonical_zero(), &params).to_complex()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_i() -> ThetaParams {
        ThetaParams::imaginary(1.0).unwrap()
    }

    /// Direct partial sum with a fixed, generous number of terms.
    fn brute(u: Complex64, tau: Complex64, n: i64) -> Complex64 {
        (-n..=n)
            .map(|k| {
                let kf = k as f64;
                (I * PI * tau * kf * kf + 2.0 * I * kf * u).exp()
            })
            .sum()
    }

    #[test]
    fn value_at_origin() {
        // 1 + 2e^{-π} + 2e^{-4π} + 2e^{-9π} + ... summed to convergence.
        let expected: f64 = 1.0 + (1..20).map(|n| 2.0 * (-PI * (n * n) as f64).exp()).sum::<f64>();
        assert!((expected - 1.086_434_811_213_308).abs() < 1e-14);
        let v = theta3(Complex64::new(0.0, 0.0), &params_i()).to_complex();
        assert!((v - expected).norm() < 1e-14, "{v}");
    }

    #[test]
    fn period_pi_in_real_direction() {
        let p = params_i();
        let a = theta3(Complex64::new(0.0, 0.0), &p).to_complex();
        let b = theta3(Complex64::new(PI, 0.0), &p).to_complex();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn vanishes_at_canonical_zero() {
        let p = params_i();
        let v = theta3(canonical_zero(), &p).to_complex();
        assert!(v.norm() < 1e-12, "{v}");
        // Partial sums with growing truncation approach zero too.
        for n in [4, 8, 16] {
            assert!(brute(canonical_zero(), I, n).norm() < 1e-12);
        }
    }

    #[test]
    fn slope_at_canonical_zero() {
        let s = canonical_zero_slope();
        assert!(s.re.abs() < 1e-12);
        assert!((s.im - 1.9888).abs() < 5e-5, "{s}");
        assert!(theta3_deriv(Complex64::new(0.0, 0.0), &params_i()).to_complex().norm() < 1e-15);
    }

    #[test]
    fn real_argument_needs_no_rescaling() {
        let p = ThetaParams::imaginary(1.0 / 3.0).unwrap();
        let r = reduce_argument(Complex64::new(4.0, 0.0), &p);
        assert_eq!(r.prefactor, Complex64::new(1.0, 0.0));
        assert_eq!(r.log_scale, 0.0);
        assert!((r.reduced.re - (4.0 - PI)).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_matches_direct_series() {
        for b in [1.0, 0.25, 0.2] {
            let p = ThetaParams::imaginary(b).unwrap();
            for &u in &[Complex64::new(0.3, 1.1), Complex64::new(-2.0, -1.7), Complex64::new(1.0, 2.0)] {
                let direct = brute(u, p.tau(), 80);
                let scaled = theta3(u, &p).to_complex();
                assert!((direct - scaled).norm() < 1e-12 * direct.norm().max(1.0), "b={b} u={u}");
            }
        }
    }

    #[test]
    fn zero_survives_quasi_period() {
        let p = params_i();
        let u = canonical_zero() + Complex64::new(0.0, PI);
        let direct = brute(u, I, 40);
        assert!(direct.norm() < 1e-12);
        let at_zero = theta3(u, &p);
        let nearby = theta3(u + Complex64::new(0.3, 0.0), &p);
        assert!(at_zero.div(nearby).abs() < 1e-12);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(ThetaParams::new(Complex64::new(0.0, -1.0), 1e-14).is_err());
        assert!(ThetaParams::new(Complex64::new(1.0, 0.0), 1e-14).is_err());
        assert!(ThetaParams::new(I, 0.0).is_err());
    }

    #[test]
    fn truncation_order_follows_decay() {
        let p = ThetaParams::imaginary(0.2).unwrap();
        let expected = ((1e14f64).ln() / (PI * 0.2)).sqrt().ceil() as i64 + 2;
        assert_eq!(p.terms(), expected);
    }

    #[test]
    fn scaled_values_do_not_overflow() {
        let p = ThetaParams::imaginary(0.1).unwrap();
        let v = theta3(Complex64::new(0.4, 60.0), &p);
        assert!(v.value.is_finite() && v.log_scale.is_finite());
        assert!(v.log_scale > 700.0);
        let prod: ThetaValue = (0..20).map(|_| v).product();
        assert!(prod.log_scale.is_finite());
    }
}
