//! The euclidean Hardy-Sobolev extremal `w(r) = (1 + r^{2-sigma})^{(2-N)/(2-sigma)}`
//! and its moment integrals.

use crate::constants::{critical_exponent, hardy_sobolev_constant, sphere_area, Dimension, SigmaExponent};
use crate::error::{domain, Result};
use crate::quadrature::{integrate_half_line, integrate_truncated, Integral};
use crate::scalar::Real;

/// Radius at which divergent moments are truncated.
pub const TRUNCATION_RADIUS: f64 = 1e6;

fn check_open_sigma<T: Real>(sigma: SigmaExponent<T>) -> Result<T> {
    let s = sigma.get();
    if s >= T::lit(2.0) {
        return domain("the bubble needs sigma < 2");
    }
    Ok(s)
}

/// `w(r)`. Strictly decreasing, `w(0) = 1`.
pub fn bubble_value<T: Real>(r: T, n: Dimension, sigma: SigmaExponent<T>) -> Result<T> {
    let s = check_open_sigma(sigma)?;
    if !(r >= T::zero()) {
        return domain("radius must be nonnegative");
    }
    let gap = T::lit(2.0) - s;
    let expo = (T::lit(2.0) - n.as_real::<T>()) / gap;
    Ok((expo * r.powf(gap).ln_1p()).exp())
}

/// `w'(r) = (2-N) r^{1-sigma} (1 + r^{2-sigma})^{(2-N)/(2-sigma) - 1}`.
pub fn bubble_grad<T: Real>(r: T, n: Dimension, sigma: SigmaExponent<T>) -> Result<T> {
    let s = check_open_sigma(sigma)?;
    if !(r >= T::zero()) {
        return domain("radius must be nonnegative");
    }
    let two = T::lit(2.0);
    let nn: T = n.as_real();
    if r == T::zero() {
        // r^{1-sigma} is 0 for sigma < 1, 1 at sigma = 1, unbounded beyond
        return Ok(if s < T::one() {
            T::zero()
        } else if s == T::one() {
            two - nn
        } else {
            T::neg_infinity()
        });
    }
    let gap = two - s;
    let expo = (two - nn) / gap - T::one();
    Ok((two - nn) * r.powf(T::one() - s) * (expo * r.powf(gap).ln_1p()).exp())
}

/// A moment integral. `finite == false` marks a logarithmic divergence, in which case
/// `value` is the integral over the ball of radius `truncation_radius` and
/// `log_slope` the derivative of that value with respect to `log R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment<T> {
    pub value: T,
    pub abs_error: T,
    pub finite: bool,
    pub truncation_radius: Option<T>,
    pub log_slope: Option<T>,
}

impl<T: Real> Moment<T> {
    fn finite(i: Integral<T>, scale: T) -> Self {
        Moment {
            value: i.value * scale,
            abs_error: i.abs_error * scale,
            finite: true,
            truncation_radius: None,
            log_slope: None,
        }
    }

    fn scaled(self, c: T) -> Self {
        Moment {
            value: self.value * c,
            abs_error: self.abs_error * c,
            log_slope: self.log_slope.map(|s| s * c),
            ..self
        }
    }
}

/// The five bubble moments, each including the `|S^{N-1}|` angular factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleMoments<T> {
    pub dim: Dimension,
    pub sigma: T,
    /// `int |grad w|^2`
    pub dirichlet: Moment<T>,
    /// `int w^2`, divergent for `N = 4`
    pub mass2: Moment<T>,
    /// `int |x|^{-sigma} w^{2*}`
    pub hs_mass: Moment<T>,
    /// `int |x|^2 |grad w|^2`, divergent for `N = 4`
    pub r2_dirichlet: Moment<T>,
    /// `int |x|^{2-sigma} w^{2*}`
    pub r2_hs: Moment<T>,
}

impl<T: Real> BubbleMoments<T> {
    /// Moments of `k w` with `k` chosen so that `hs_mass = 1`.
    pub fn normalized(&self) -> Self {
        let q = critical_exponent(SigmaExponent::new(self.sigma).unwrap(), self.dim);
        let k = self.hs_mass.value.powf(-q.recip());
        let k2 = k * k;
        let kq = k.powf(q);
        BubbleMoments {
            dirichlet: self.dirichlet.scaled(k2),
            mass2: self.mass2.scaled(k2),
            hs_mass: self.hs_mass.scaled(kq),
            r2_dirichlet: self.r2_dirichlet.scaled(k2),
            r2_hs: self.r2_hs.scaled(kq),
            ..*self
        }
    }

    /// `dirichlet / hs_mass^{2/2*}`.
    pub fn quotient(&self) -> T {
        let q = critical_exponent(SigmaExponent::new(self.sigma).unwrap(), self.dim);
        self.dirichlet.value / self.hs_mass.value.powf(T::lit(2.0) / q)
    }
}

/// Radial profile given by value and derivative closures, used for moment quadrature.
struct RadialIntegrands<'a, T> {
    n: T,
    sigma: T,
    q: T,
    u: &'a dyn Fn(T) -> T,
    du: &'a dyn Fn(T) -> T,
}

impl<'a, T: Real> RadialIntegrands<'a, T> {
    fn dirichlet(&self, r: T) -> T {
        let d = (self.du)(r);
        d * d * r.powf(self.n - T::one())
    }
    fn mass2(&self, r: T) -> T {
        let u = (self.u)(r);
        u * u * r.powf(self.n - T::one())
    }
    fn hs(&self, r: T) -> T {
        (self.u)(r).abs().powf(self.q) * r.powf(self.n - T::one() - self.sigma)
    }
    fn r2_dirichlet(&self, r: T) -> T {
        r * r * self.dirichlet(r)
    }
    fn r2_hs(&self, r: T) -> T {
        r * r * self.hs(r)
    }
}

fn moment_or_truncated<T: Real, F: Fn(T) -> T>(f: &F, tail: T, omega: T, tol: T) -> Result<Moment<T>> {
    if tail > T::one() {
        return Ok(Moment::finite(integrate_half_line(f, tail, tol)?, omega));
    }
    let big = T::lit(TRUNCATION_RADIUS);
    let lo = integrate_truncated(f, big / T::lit(10.0), tol);
    let hi = integrate_truncated(f, big, tol);
    let slope = (hi.value - lo.value) / T::LN_10();
    Ok(Moment {
        value: hi.value * omega,
        abs_error: hi.abs_error * omega,
        finite: false,
        truncation_radius: Some(big),
        log_slope: Some(slope * omega),
    })
}

/// Moments of the bubble by composite Gauss quadrature with controlled power-law tails.
pub fn bubble_moments<T: Real>(n: Dimension, sigma: SigmaExponent<T>, tol: T) -> Result<BubbleMoments<T>> {
    let s = check_open_sigma(sigma)?;
    if !(tol > T::zero()) {
        return domain("tolerance must be positive");
    }
    if n.get() < 4 {
        return domain("moments need N >= 4");
    }
    let nn: T = n.as_real();
    let omega: T = sphere_area(n.get() - 1)?;
    let u = |r: T| bubble_value(r, n, sigma).unwrap();
    let du = |r: T| bubble_grad(r, n, sigma).unwrap();
    let ints = RadialIntegrands { n: nn, sigma: s, q: critical_exponent(sigma, n), u: &u, du: &du };
    let one = T::one();
    // |w'|^2 r^{N-1} ~ r^{1-N}, w^2 r^{N-1} ~ r^{3-N}, r^{-sigma} w^q r^{N-1} ~ r^{-1-N+sigma}
    let tail_d = nn - one;
    let tail_m = nn - T::lit(3.0);
    let tail_h = nn + one - s;
    Ok(BubbleMoments {
        dim: n,
        sigma: s,
        dirichlet: moment_or_truncated(&|r| ints.dirichlet(r), tail_d, omega, tol)?,
        mass2: moment_or_truncated(&|r| ints.mass2(r), tail_m, omega, tol)?,
        hs_mass: moment_or_truncated(&|r| ints.hs(r), tail_h, omega, tol)?,
        r2_dirichlet: moment_or_truncated(&|r| ints.r2_dirichlet(r), tail_d - T::lit(2.0), omega, tol)?,
        r2_hs: moment_or_truncated(&|r| ints.r2_hs(r), tail_h - T::lit(2.0), omega, tol)?,
    })
}

/// Quotient `int u'^2 r^{N-1} / (int r^{-sigma} |u|^q r^{N-1})^{2/q}` of a radial profile
/// decaying like the bubble.
pub fn radial_profile_quotient<T: Real>(
    n: Dimension,
    sigma: SigmaExponent<T>,
    u: &dyn Fn(T) -> T,
    du: &dyn Fn(T) -> T,
    tol: T,
) -> Result<T> {
    let s = check_open_sigma(sigma)?;
    let nn: T = n.as_real();
    let omega: T = sphere_area(n.get() - 1)?;
    let q = critical_exponent(sigma, n);
    let ints = RadialIntegrands { n: nn, sigma: s, q, u, du };
    let d = integrate_half_line(&|r| ints.dirichlet(r), nn - T::one(), tol)?.value * omega;
    let h = integrate_half_line(&|r| ints.hs(r), nn + T::one() - s, tol)?.value * omega;
    Ok(d / h.powf(T::lit(2.0) / q))
}

/// Quotient of the bubble; the brute-force oracle for the Lieb constant.
pub fn bubble_quotient<T: Real>(n: Dimension, sigma: SigmaExponent<T>) -> Result<T> {
    let u = |r: T| bubble_value(r, n, sigma).unwrap();
    let du = |r: T| bubble_grad(r, n, sigma).unwrap();
    radial_profile_quotient(n, sigma, &u, &du, T::lit(1e-12).max(T::epsilon() * T::lit(64.0)))
}

/// Relative residual of `int |x|^2|grad w|^2 = N int w^2 + S int |x|^{2-sigma} w^{2*}`
/// for the bubble normalised to `int |x|^{-sigma} w^{2*} = 1`, the normalisation under
/// which `w` solves `-Delta w = S |x|^{-sigma} w^{2*-1}`.
pub fn pohozaev_residual<T: Real>(n: Dimension, sigma: SigmaExponent<T>) -> Result<T> {
    if n.get() < 5 {
        return domain("the identity has divergent terms for N < 5");
    }
    let m = bubble_moments(n, sigma, T::lit(1e-12).max(T::epsilon() * T::lit(64.0)))?.normalized();
    let s = hardy_sobolev_constant(n, sigma)?;
    let lhs = m.r2_dirichlet.value;
    let rhs = n.as_real::<T>() * m.mass2.value + s * m.r2_hs.value;
    Ok(((lhs - rhs) / lhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }
    fn sig(s: f64) -> SigmaExponent<f64> {
        SigmaExponent::new(s).unwrap()
    }

    #[test]
    fn value_examples() {
        assert_eq!(bubble_value(0.0, dim(5), sig(1.0)).unwrap(), 1.0);
        assert!((bubble_value(1.0, dim(4), sig(0.0)).unwrap() - 0.5).abs() < 1e-15);
        let r = 1e4f64;
        let ratio = bubble_value(r, dim(5), sig(1.0)).unwrap() / r.powi(-3);
        assert!((ratio - 1.0).abs() < 1e-3);
        assert!(bubble_value(0.5, dim(5), sig(2.0)).is_err());
    }

    #[test]
    fn grad_examples() {
        assert_eq!(bubble_grad(0.0, dim(5), sig(0.5)).unwrap(), 0.0);
        assert!((bubble_grad(1.0, dim(4), sig(0.0)).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn grad_matches_central_difference() {
        for &(n, s) in &[(3, 0.0), (4, 0.5), (5, 1.0), (6, 1.5)] {
            for &r in &[0.1, 0.7, 1.0, 3.0, 20.0] {
                let h = 1e-6 * r;
                let fd = (bubble_value(r + h, dim(n), sig(s)).unwrap() - bubble_value(r - h, dim(n), sig(s)).unwrap())
                    / (2.0 * h);
                let g = bubble_grad(r, dim(n), sig(s)).unwrap();
                assert!(((fd - g) / g).abs() < 1e-6, "n {n} s {s} r {r}");
            }
        }
    }

    #[test]
    fn divergent_moments_flagged_for_n4() {
        let m = bubble_moments(dim(4), sig(1.0), 1e-8).unwrap();
        assert!(!m.mass2.finite && !m.r2_dirichlet.finite);
        assert!(m.dirichlet.finite && m.hs_mass.finite && m.r2_hs.finite);
        let omega = 2.0 * std::f64::consts::PI.powi(2);
        // w^2 r^3 ~ 1/r and |w'|^2 r^5 ~ 4/r at infinity
        assert!((m.mass2.log_slope.unwrap() / omega - 1.0).abs() < 1e-3);
        assert!((m.r2_dirichlet.log_slope.unwrap() / omega - 4.0).abs() < 1e-3);
    }

    #[test]
    fn all_moments_finite_for_n5() {
        let m = bubble_moments(dim(5), sig(1.0), 1e-8).unwrap();
        for mm in [m.dirichlet, m.mass2, m.hs_mass, m.r2_dirichlet, m.r2_hs] {
            assert!(mm.finite && mm.value > 0.0);
        }
        assert!(bubble_moments(dim(5), sig(1.0), 0.0).is_err());
    }

    #[test]
    fn pohozaev_examples() {
        assert!(pohozaev_residual(dim(5), sig(1.0)).unwrap() <= 1e-8);
        assert!(pohozaev_residual(dim(6), sig(0.5)).unwrap() <= 1e-8);
        assert!(pohozaev_residual(dim(5), sig(1e-3)).unwrap() <= 1e-6);
        assert!(pohozaev_residual(dim(4), sig(1.0)).is_err());
    }

    #[test]
    fn quotient_matches_lieb_n3() {
        let q = bubble_quotient(dim(3), sig(1.0)).unwrap();
        let s = hardy_sobolev_constant(dim(3), sig(1.0)).unwrap();
        assert!(((q - s) / s).abs() < 1e-6);
    }

    #[test]
    fn quotient_is_homogeneous() {
        let n = dim(5);
        let s = sig(0.5);
        let base = bubble_quotient(n, s).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let u = |r: f64| c * bubble_value(r, n, s).unwrap();
            let du = |r: f64| c * bubble_grad(r, n, s).unwrap();
            let v = radial_profile_quotient(n, s, &u, &du, 1e-12).unwrap();
            assert!(((v - base) / base).abs() < 1e-12, "c = {c}");
        }
    }
}
