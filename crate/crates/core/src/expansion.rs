//! Quotients of the concentrating test functions `u_n = eta w_n`, `w_n(r) =
//! n^{(N-2)/2} w(n r)`, and their large-`n` expansion `Q(n) = c0 - c1 / n^2 + ...`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bubble::{bubble_grad, bubble_moments, bubble_value};
use crate::constants::{critical_exponent, hardy_sobolev_constant, sphere_area, Dimension, SigmaExponent};
use crate::error::{domain, Error, Result};
use crate::manifold::{scalar_curvature_at_pole, ModelManifold};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionEntry<T> {
    pub n: T,
    /// `int |u_n'|^2 - lambda int u_n^2`
    pub energy: T,
    /// `(int rho^{-sigma} |u_n|^{2*})^{2/2*}`
    pub denominator: T,
    pub quotient: T,
    /// Relative change of the quotient when every panel count is doubled.
    pub self_check: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSeries<T> {
    pub dim: Dimension,
    pub sigma: T,
    pub lambda: T,
    pub cutoff: T,
    pub entries: Vec<ExpansionEntry<T>>,
}

/// Largest accepted `self_check`.
pub const SELF_CHECK_TOL: f64 = 1e-9;

fn bump_half<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

// eta(r) = h(2 - r/c) with h = f(x) / (f(x) + f(1-x)); returns (eta, eta')
fn cutoff_and_slope<T: Real>(r: T, c: T) -> (T, T) {
    let x = T::lit(2.0) - r / c;
    let (a, b) = (bump_half(x), bump_half(T::one() - x));
    if b == T::zero() {
        return (T::one(), T::zero());
    }
    if a == T::zero() {
        return (T::zero(), T::zero());
    }
    let da = a / (x * x);
    let db = b / ((T::one() - x) * (T::one() - x));
    let s = a + b;
    let dh = (da * b + a * db) / (s * s);
    (a / s, -dh / c)
}

struct Integrals<T> {
    dirichlet: T,
    mass: T,
    hs: T,
}

fn panels<T: Real>(n: T, cutoff: T, scale: usize) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let inner = (n.recip()).min(cutoff);
    // geometric toward the pole
    let depth = 60 * scale;
    let ratio = T::lit(0.5).powf(T::one() / T::of(scale));
    let mut hi = inner;
    for _ in 0..depth {
        let lo = hi * ratio;
        out.push((lo, hi));
        hi = lo;
    }
    out.push((T::zero(), hi));
    out.reverse();
    // geometric from the bubble scale to the cutoff, eight panels per e-fold
    if cutoff > inner {
        let k = ((cutoff / inner).ln() * T::lit(8.0)).ceil().to_usize().unwrap_or(1).max(1) * scale;
        let step = (cutoff / inner).ln() / T::of(k);
        let mut lo = inner;
        for i in 1..=k {
            let hi = if i == k { cutoff } else { inner * (step * T::of(i)).exp() };
            out.push((lo, hi));
            lo = hi;
        }
    }
    let k = 16 * scale;
    for i in 0..k {
        let lo = cutoff + cutoff * T::of(i) / T::of(k);
        let hi = cutoff + cutoff * T::of(i + 1) / T::of(k);
        out.push((lo, hi));
    }
    out
}

fn integrals<T: Real>(
    m: &ModelManifold<T>,
    sigma: SigmaExponent<T>,
    n: T,
    cutoff: T,
    scale: usize,
    rule: &GaussLegendre<T>,
) -> Result<Integrals<T>> {
    let dim = m.dim;
    let nn: T = dim.as_real();
    let q = critical_exponent(sigma, dim);
    let amp = n.powf((nn - T::lit(2.0)) / T::lit(2.0));
    let e = dim.get() as i32 - 1;
    let (mut d, mut ms, mut h) = (T::zero(), T::zero(), T::zero());
    for (a, b) in panels(n, cutoff, scale) {
        let len = b - a;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = a + len * *x;
            let (eta, deta) = cutoff_and_slope(r, cutoff);
            if eta == T::zero() && deta == T::zero() {
                continue;
            }
            let wv = bubble_value(n * r, dim, sigma)?;
            let wd = bubble_grad(n * r, dim, sigma)?;
            let u = amp * eta * wv;
            let du = amp * (deta * wv + eta * n * wd);
            let vol = m.warp(r).powi(e) * len * *w;
            d += du * du * vol;
            ms += u * u * vol;
            h += u.abs().powf(q) * r.powf(-sigma.get()) * vol;
        }
    }
    let omega: T = sphere_area(dim.get() - 1)?;
    Ok(Integrals { dirichlet: d * omega, mass: ms * omega, hs: h * omega })
}

fn entry<T: Real>(
    m: &ModelManifold<T>,
    sigma: SigmaExponent<T>,
    lambda: T,
    n: T,
    cutoff: T,
) -> Result<ExpansionEntry<T>> {
    let rule = GaussLegendre::new(20);
    let q = critical_exponent(sigma, m.dim);
    let quotient_of = |i: &Integrals<T>| {
        let den = i.hs.powf(T::lit(2.0) / q);
        (i.dirichlet - lambda * i.mass, den, (i.dirichlet - lambda * i.mass) / den)
    };
    let base = integrals(m, sigma, n, cutoff, 1, &rule)?;
    let fine = integrals(m, sigma, n, cutoff, 2, &rule)?;
    let (energy, denominator, quotient) = quotient_of(&fine);
    let (_, _, coarse) = quotient_of(&base);
    let self_check = ((quotient - coarse) / quotient).abs();
    if !(self_check <= T::lit(SELF_CHECK_TOL)) {
        return Err(Error::UnderResolved(format!(
            "quadrature self-check {self_check} at n = {n} exceeds {SELF_CHECK_TOL:e}; refine the panels"
        )));
    }
    Ok(ExpansionEntry { n, energy, denominator, quotient, self_check })
}

/// `Q(n)` for each `n` by dedicated radial quadrature: geometric panels toward the
/// pole starting at the bubble scale `1/n`, then out to the cutoff `c` and across the
/// transition `[c, 2c]`.
pub fn quotient_series<T: Real>(
    m: &ModelManifold<T>,
    lambda: T,
    sigma: T,
    n_list: &[T],
    cutoff: T,
) -> Result<ExpansionSeries<T>> {
    if !(sigma >= T::zero() && sigma < T::lit(2.0)) {
        return domain(format!("sigma must lie in [0, 2), got {sigma}"));
    }
    let sig = SigmaExponent::new(sigma)?;
    if n_list.is_empty() || n_list[0] < T::lit(2.0) || n_list.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("n_list must be increasing with n >= 2");
    }
    if !(cutoff > T::zero()) || T::lit(2.0) * cutoff > m.r_max * (T::one() + T::epsilon() * T::lit(8.0)) {
        return domain(format!("cutoff {cutoff} does not fit in radius {}", m.r_max));
    }
    let entries = n_list.par_iter().map(|n| entry(m, sig, lambda, *n, cutoff)).collect::<Result<Vec<_>>>()?;
    Ok(ExpansionSeries { dim: m.dim, sigma, lambda, cutoff, entries })
}

/// `(S_g + 6 lambda) / (6N) * int |x|^2 |grad w|^2 / D_inf` with `D_inf = (int
/// |x|^{-sigma} w^{2*})^{2/2*}` for the unnormalised bubble. For `N = 4` the moment
/// diverges and the coefficient of `log n / n^2` is returned, using the log slope of the
/// truncated moment.
pub fn theory_coefficient<T: Real>(m: &ModelManifold<T>, lambda: T, sigma: T) -> Result<T> {
    if m.dim.get() < 4 {
        return domain("the expansion needs N >= 4");
    }
    if lambda > T::zero() {
        return domain("the expansion is stated for lambda <= 0");
    }
    let sig = SigmaExponent::new(sigma)?;
    let mom = bubble_moments(m.dim, sig, T::lit(1e-11))?;
    let q = critical_exponent(sig, m.dim);
    let d_inf = mom.hs_mass.value.powf(T::lit(2.0) / q);
    let factor = (scalar_curvature_at_pole(m) + T::lit(6.0) * lambda) / (T::lit(6.0) * m.dim.as_real::<T>());
    let r2d = if mom.r2_dirichlet.finite { mom.r2_dirichlet.value } else { mom.r2_dirichlet.log_slope.unwrap() };
    Ok(factor * r2d / d_inf)
}

/// The `1/n^2` coefficient obtained by expanding numerator and denominator separately:
/// `S ([S_g/(6N) R2D + lambda M2] / D - (2/2*) S_g/(6N) R2H / H)` with the bubble moments
/// `D, M2, H, R2D, R2H`. The `log n / n^2` coefficient for `N = 4` from the log slopes.
pub fn expanded_coefficient<T: Real>(m: &ModelManifold<T>, lambda: T, sigma: T) -> Result<T> {
    if m.dim.get() < 4 {
        return domain("the expansion needs N >= 4");
    }
    let sig = SigmaExponent::new(sigma)?;
    let mom = bubble_moments(m.dim, sig, T::lit(1e-11))?;
    let q = critical_exponent(sig, m.dim);
    let s = hardy_sobolev_constant(m.dim, sig)?;
    let nn: T = m.dim.as_real();
    let curv = scalar_curvature_at_pole(m) / (T::lit(6.0) * nn);
    let pick =
        |mm: &crate::bubble::Moment<T>| if mm.finite { (mm.value, false) } else { (mm.log_slope.unwrap(), true) };
    let (r2d, log_d) = pick(&mom.r2_dirichlet);
    let (m2, log_m) = pick(&mom.mass2);
    // for N = 4 only the divergent moments feed the log coefficient
    let r2h = if log_d { T::zero() } else { mom.r2_hs.value };
    debug_assert_eq!(log_d, log_m);
    Ok(s * ((curv * r2d + lambda * m2) / mom.dirichlet.value - T::lit(2.0) / q * curv * r2h / mom.hs_mass.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `c0 - c1 / n^2`
    InverseSquare,
    /// `c0 - c1 log n / n^2 - c2 / n^2`
    LogCorrected,
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitModel::InverseSquare => "inverse-square",
            FitModel::LogCorrected => "log-corrected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionFit<T> {
    pub model: FitModel,
    pub c0: T,
    pub c1: T,
    pub c2: T,
    pub rms: T,
}

/// Least-squares fit of `Q(n)`: inverse-square model for `N >= 5`, log-corrected for
/// `N = 4`.
pub fn fit_expansion<T: Real>(series: &ExpansionSeries<T>, dim: Dimension) -> Result<ExpansionFit<T>> {
    let pts: Vec<(T, T)> = series.entries.iter().map(|e| (e.n, e.quotient)).collect();
    fit_points(&pts, dim)
}

pub fn fit_points<T: Real>(pts: &[(T, T)], dim: Dimension) -> Result<ExpansionFit<T>> {
    if dim.get() < 4 {
        return domain("the expansion fit needs N >= 4");
    }
    if pts.len() < 4 {
        return domain("the fit needs at least four entries");
    }
    let model = if dim.get() == 4 { FitModel::LogCorrected } else { FitModel::InverseSquare };
    let basis = |n: T| -> Vec<T> {
        let inv = (n * n).recip();
        match model {
            FitModel::InverseSquare => vec![T::one(), -inv],
            FitModel::LogCorrected => vec![T::one(), -n.ln() * inv, -inv],
        }
    };
    let rows: Vec<Vec<T>> = pts.iter().map(|(n, _)| basis(*n)).collect();
    let y: Vec<T> = pts.iter().map(|p| p.1).collect();
    let coef = least_squares(&rows, &y)?;
    let rms = (rows
        .iter()
        .zip(&y)
        .map(|(r, v)| {
            let fit: T = r.iter().zip(&coef).map(|(a, b)| *a * *b).sum();
            (fit - *v) * (fit - *v)
        })
        .sum::<T>()
        / T::of(y.len()))
    .sqrt();
    Ok(ExpansionFit { model, c0: coef[0], c1: coef[1], c2: coef.get(2).copied().unwrap_or(T::zero()), rms })
}

// Householder QR with column scaling; rejects numerically rank-deficient designs.
fn least_squares<T: Real>(rows: &[Vec<T>], y: &[T]) -> Result<Vec<T>> {
    let m = rows.len();
    let p = rows[0].len();
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut b = y.to_vec();
    let scale: Vec<T> = (0..p).map(|j| (0..m).map(|i| a[i][j] * a[i][j]).sum::<T>().sqrt()).collect();
    if scale.iter().any(|s| !(*s > T::zero())) {
        return Err(Error::Range("design matrix has a zero column".into()));
    }
    for row in a.iter_mut() {
        for j in 0..p {
            row[j] /= scale[j];
        }
    }
    for k in 0..p {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<T>().sqrt();
        if norm < T::lit(1e-10) {
            return Err(Error::Range("design matrix is rank deficient; spread the n values".into()));
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: T = v.iter().map(|x| *x * *x).sum();
        for j in k..p {
            let s: T = (k..m).map(|i| v[i - k] * a[i][j]).sum::<T>() * T::lit(2.0) / vv;
            for i in k..m {
                a[i][j] -= s * v[i - k];
            }
        }
        let s: T = (k..m).map(|i| v[i - k] * b[i]).sum::<T>() * T::lit(2.0) / vv;
        for i in k..m {
            b[i] -= s * v[i - k];
        }
    }
    let mut x = vec![T::zero(); p];
    for k in (0..p).rev() {
        let mut acc = b[k];
        for j in k + 1..p {
            acc -= a[k][j] * x[j];
        }
        x[k] = acc / a[k][k];
    }
    Ok(x.iter().zip(&scale).map(|(v, s)| *v / *s).collect())
}

/// Monte-Carlo estimates of angular moments of `|grad w|^2` over the ball `|x| < r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSymmetry<T> {
    /// `int x_1 x_2 |grad w|^2`
    pub off_diagonal: T,
    pub off_diagonal_se: T,
    /// `int x_1^2 |grad w|^2`
    pub diagonal: T,
    /// `int |x|^2 |grad w|^2 / N`
    pub radial_share: T,
    /// Standard error of `diagonal - radial_share`, estimated from the same samples.
    pub difference_se: T,
    pub samples: usize,
}

/// Uniform samples in the ball (Gaussian direction, radius `r0 U^{1/N}`) from a seeded
/// ChaCha generator.
pub fn moment_symmetry(dim: Dimension, sigma: f64, r0: f64, samples: usize, seed: u64) -> Result<MomentSymmetry<f64>> {
    if samples < 2 {
        return domain("need at least two samples");
    }
    if !(r0 > 0.0) {
        return domain("r0 must be positive");
    }
    let sig = SigmaExponent::new(sigma)?;
    let n = dim.get() as usize;
    let vol = sphere_area::<f64>(dim.get() - 1)? * r0.powi(n as i32) / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s_off, mut s_off2, mut s_diag, mut s_rad, mut s_diff, mut s_diff2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut x = vec![0.0; n];
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = r0 * rng.gen::<f64>().powf(1.0 / n as f64);
        for v in x.iter_mut() {
            *v *= r / len;
        }
        let g = bubble_grad(r, dim, sig)?;
        let g2 = g * g * vol;
        let off = x[0] * x[1] * g2;
        let diag = x[0] * x[0] * g2;
        let rad = r * r * g2 / n as f64;
        s_off += off;
        s_off2 += off * off;
        s_diag += diag;
        s_rad += rad;
        s_diff += diag - rad;
        s_diff2 += (diag - rad) * (diag - rad);
    }
    let k = samples as f64;
    let se = |s: f64, s2: f64| ((s2 / k - (s / k).powi(2)).max(0.0) / (k - 1.0)).sqrt();
    Ok(MomentSymmetry {
        off_diagonal: s_off / k,
        off_diagonal_se: se(s_off, s_off2),
        diagonal: s_diag / k,
        radial_share: s_rad / k,
        difference_se: se(s_diff, s_diff2),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_series() {
        let d5 = Dimension::new(5).unwrap();
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|n| (*n, 7.0 - 3.0 / (n * n))).collect();
        let f = fit_points(&pts, d5).unwrap();
        assert!((f.c0 - 7.0).abs() < 1e-10 && (f.c1 - 3.0).abs() < 1e-10, "{f:?}");
        let d4 = Dimension::new(4).unwrap();
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|n: &f64| (*n, 5.0 - 2.0 * n.ln() / (n * n) - 0.5 / (n * n)))
            .collect();
        let f = fit_points(&pts, d4).unwrap();
        assert!((f.c0 - 5.0).abs() < 1e-10 && (f.c1 - 2.0).abs() < 1e-9 && (f.c2 - 0.5).abs() < 1e-9, "{f:?}");
    }

    #[test]
    fn fit_rejects_degenerate_design() {
        let d5 = Dimension::new(5).unwrap();
        let pts = vec![(4.0, 1.0), (4.0, 1.0), (4.0, 1.0), (4.0, 1.0)];
        assert!(fit_points(&pts, d5).is_err());
        assert!(fit_points(&pts[..3], d5).is_err());
    }

    #[test]
    fn cutoff_slope_matches_difference() {
        for r in [1.1, 1.3, 1.5, 1.8] {
            let h = 1e-6;
            let fd = (cutoff_and_slope(r + h, 1.0).0 - cutoff_and_slope(r - h, 1.0).0) / (2.0 * h);
            assert!((fd - cutoff_and_slope(r, 1.0f64).1).abs() < 1e-7);
        }
    }
}
