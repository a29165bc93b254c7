//! Composite Gauss-Legendre quadrature with geometric panels for algebraic endpoint
//! behaviour and power-law tails.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes by Newton iteration on `P_n`, started from the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nn = T::of(n);
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (T::PI() * (T::of(i) + T::lit(0.75)) / (nn + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            let half = T::lit(0.5);
            nodes[i] = half * (T::one() - x);
            nodes[n - 1 - i] = half * (T::one() + x);
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(T) -> T>(&self, a: T, b: T, f: F) -> T {
        let h = b - a;
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(a + h * *x);
        }
        acc * h
    }
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kk = T::of(k);
        let p2 = ((T::lit(2.0) * kk - T::one()) * x * p1 - (kk - T::one()) * p0) / kk;
        p0 = p1;
        p1 = p2;
    }
    let d = T::of(n) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Value of an integral together with a conservative absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: T,
}

/// Integrates `f` over `[0, b]` for integrands behaving like `r^p`, `p > -1`, at 0.
///
/// Panels `[b 2^{-j-1}, b 2^{-j}]` are added until the last few contribute less
/// than `tol` relative to the running total.
pub fn integrate_to_zero<T: Real, F: Fn(T) -> T>(
    rule: &GaussLegendre<T>,
    coarse: &GaussLegendre<T>,
    b: T,
    tol: T,
    f: &F,
) -> Integral<T> {
    let half = T::lit(0.5);
    let mut hi = b;
    let mut total = T::zero();
    let mut err = T::zero();
    let mut quiet = 0;
    for _ in 0..4000 {
        let lo = hi * half;
        let fine = rule.integrate(lo, hi, f);
        let rough = coarse.integrate(lo, hi, f);
        total += fine;
        err += (fine - rough).abs();
        if fine.abs() <= tol * total.abs() * T::lit(1e-2) {
            quiet += 1;
            if quiet >= 4 {
                // geometric decay: the remainder is bounded by the last panel
                err += fine.abs();
                break;
            }
        } else {
            quiet = 0;
        }
        hi = lo;
        if hi <= T::min_positive_value() {
            break;
        }
    }
    Integral { value: total, abs_error: err }
}

/// Integrates `f` over `[a, b]` split into `panels` geometric panels of ratio `b/a`
/// to the power `1/panels`. Requires `0 < a < b`.
pub fn integrate_geometric<T: Real, F: Fn(T) -> T>(rule: &GaussLegendre<T>, a: T, b: T, panels: usize, f: &F) -> T {
    let ratio = (b / a).ln() / T::of(panels);
    let mut acc = T::zero();
    let mut lo = a;
    for k in 1..=panels {
        let hi = if k == panels { b } else { a * (ratio * T::of(k)).exp() };
        acc += rule.integrate(lo, hi, f);
        lo = hi;
    }
    acc
}

/// `int_0^inf f(r) dr` for integrands with `f ~ r^p` (`p > -1`) at 0 and
/// `f ~ C r^{-k}` at infinity with `k = tail_exponent > 1`.
///
/// The half line is split at 1. Beyond 1 dyadic panels are added until the analytic
/// power-law tail `C R^{1-k}/(k-1)`, with `C` read off at the current cutoff `R`,
/// falls below the target; that tail is added and counted in the error estimate.
pub fn integrate_half_line<T: Real, F: Fn(T) -> T>(f: &F, tail_exponent: T, tol: T) -> Result<Integral<T>> {
    if !(tol > T::zero()) {
        return domain("tolerance must be positive");
    }
    if !(tail_exponent > T::one()) {
        return domain("tail exponent must exceed 1 for a finite integral");
    }
    let rule = GaussLegendre::new(20);
    let coarse = GaussLegendre::new(12);
    let head = integrate_to_zero(&rule, &coarse, T::one(), tol, f);
    let mut total = head.value;
    let mut err = head.abs_error;
    let mut lo = T::one();
    let two = T::lit(2.0);
    let k1 = tail_exponent - T::one();
    for _ in 0..2000 {
        let hi = lo * two;
        let fine = rule.integrate(lo, hi, f);
        let rough = coarse.integrate(lo, hi, f);
        total += fine;
        err += (fine - rough).abs();
        lo = hi;
        let c = f(lo) * lo.powf(tail_exponent);
        let tail = c * lo.powf(-k1) / k1;
        if !tail.is_finite() {
            return Err(Error::UnderResolved("tail estimate overflowed".into()));
        }
        if tail.abs() <= tol * total.abs() * T::lit(1e-2) {
            return Ok(Integral { value: total + tail, abs_error: err + tail.abs() });
        }
    }
    Err(Error::UnderResolved("power-law tail did not reach the target".into()))
}

/// `int_0^R f(r) dr` with the same head treatment as [`integrate_half_line`] and
/// dyadic panels on `[1, R]`.
pub fn integrate_truncated<T: Real, F: Fn(T) -> T>(f: &F, radius: T, tol: T) -> Integral<T> {
    let rule = GaussLegendre::new(20);
    let coarse = GaussLegendre::new(12);
    let head_end = if radius < T::one() { radius } else { T::one() };
    let head = integrate_to_zero(&rule, &coarse, head_end, tol, f);
    let mut total = head.value;
    let mut err = head.abs_error;
    if radius > T::one() {
        let panels = ((radius.ln() / T::LN_2()).ceil().to_usize().unwrap_or(1)).max(1);
        let a = integrate_geometric(&rule, T::one(), radius, panels, f);
        let b = integrate_geometric(&coarse, T::one(), radius, panels, f);
        total += a;
        err += (a - b).abs();
    }
    Integral { value: total, abs_error: err }
}

#[cfg(test)]
mod tests {
    use super::*;

    // int_0^inf r^a (1 + r^s)^{-b} dr = B((a+1)/s, b - (a+1)/s) / s
    fn beta_oracle(a: f64, s: f64, b: f64) -> f64 {
        use crate::constants::log_gamma;
        let x = (a + 1.0) / s;
        let y = b - x;
        (log_gamma(x).unwrap() + log_gamma(y).unwrap() - log_gamma(x + y).unwrap()).exp() / s
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let g = GaussLegendre::<f64>::new(10);
        let sum: f64 = g.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        let v = g.integrate(0.0, 2.0, |x| x.powi(19));
        assert!((v - 2f64.powi(20) / 20.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_rule_f32() {
        let g = GaussLegendre::<f32>::new(8);
        let v = g.integrate(0.0, 1.0, |x| x * x);
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn half_line_matches_beta_integrals() {
        for &(a, s, b) in &[(2.0, 1.0, 3.5), (0.5, 1.5, 4.0), (3.0, 2.0, 5.0), (-0.5, 0.7, 3.0)] {
            let f = |r: f64| r.powf(a) * (1.0 + r.powf(s)).powf(-b);
            let k = s * b - a;
            let got = integrate_half_line(&f, k, 1e-12).unwrap();
            let exact = beta_oracle(a, s, b);
            assert!(((got.value - exact) / exact).abs() < 1e-10, "{a} {s} {b}");
            assert!(got.abs_error >= 0.0);
        }
    }

    #[test]
    fn half_line_rejects_bad_input() {
        let f = |r: f64| (1.0 + r).powi(-3);
        assert!(integrate_half_line(&f, 3.0, 0.0).is_err());
        assert!(integrate_half_line(&f, 1.0, 1e-8).is_err());
    }

    #[test]
    fn truncated_integral_of_inverse() {
        // int_0^R r/(1+r^2) dr = ln(1+R^2)/2
        let f = |r: f64| r / (1.0 + r * r);
        let got = integrate_truncated(&f, 1e4, 1e-12);
        assert!((got.value - (1.0f64 + 1e8).ln() / 2.0).abs() < 1e-10);
    }
}
