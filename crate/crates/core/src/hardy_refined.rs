//! Log-perturbed virtual ground states `v_a(r) = r^{(2-N)/2} (-log r)^a`, their operator
//! residuals, and the improved local Hardy inequality with the `rho^{-2} (log rho)^{-2}`
//! remainder.

use crate::constants::{hardy_constant, Dimension};
use crate::eigensolver::{smallest_pencil_eigen, EigenOptions};
use crate::error::{domain, Result};
use crate::forms::{assemble_forms, assemble_weighted, build_grid, BoundaryCondition};
use crate::manifold::{make_manifold, ManifoldKind, ModelManifold};
use crate::scalar::Real;

/// `r^{(2-N)/2} (-log r)^a` for `0 < r < 1`.
pub fn log_bubble_value<T: Real>(r: T, a: T, n: Dimension) -> Result<T> {
    if !(r > T::zero() && r < T::one()) {
        return domain(format!("log bubble needs 0 < r < 1, got {r}"));
    }
    let b = (n.as_real::<T>() - T::lit(2.0)) / T::lit(2.0);
    Ok(r.powf(-b) * (-r.ln()).powf(a))
}

/// Log-uniform nodes on `[r0 e^{-span}, r0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUniformGrid<T> {
    pub r0: T,
    pub span: T,
    pub cells: usize,
}

impl<T: Real> LogUniformGrid<T> {
    pub fn new(r0: T, span: T, cells: usize) -> Result<Self> {
        if !(r0 > T::zero() && r0 < T::one()) {
            return domain(format!("r0 must lie in (0, 1), got {r0}"));
        }
        if !(span > T::zero()) || cells < 4 {
            return domain("grid needs a positive span and at least four cells");
        }
        Ok(LogUniformGrid { r0, span, cells })
    }

    pub fn refine(&self) -> Self {
        LogUniformGrid { cells: self.cells * 2, ..*self }
    }

    pub fn step(&self) -> T {
        self.span / T::of(self.cells)
    }

    fn log_node(&self, i: usize) -> T {
        self.r0.ln() - self.span + self.step() * T::of(i)
    }
}

/// Sign of the leading term `-a(a-1) rho^{-2} (log rho)^{-2} v_a` of `L v_a`.
pub fn dominant_term_sign<T: Real>(a: T) -> T {
    let c = -a * (a - T::one());
    if c > T::zero() {
        T::one()
    } else if c < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Weighted residual of `L v_a = -a(a-1) rho^{-2}(log rho)^{-2} v_a - lambda rho^{-2} v_a`
/// with `L = -Delta_g - ((N-2)/2)^2 rho^{-2} - lambda rho^{-2}` and a second-order
/// difference Laplacian in `t = log r`. The residual at each interior node is multiplied
/// by `r^{(N-2)/2} (-log r)^{-a}`; the maximum is returned.
pub fn operator_residual<T: Real>(m: &ModelManifold<T>, a: T, lambda: T, grid: &LogUniformGrid<T>) -> Result<T> {
    if grid.r0 > m.r_max {
        return domain("grid extends beyond the manifold");
    }
    let n = m.dim;
    let b2: T = hardy_constant(n);
    let nm1 = n.as_real::<T>() - T::one();
    let h = grid.step();
    let v = |t: T| log_bubble_value(t.exp(), a, n);
    let mut worst = T::zero();
    for i in 1..grid.cells {
        let t = grid.log_node(i);
        let r = t.exp();
        let (vm, v0, vp) = (v(t - h)?, v(t)?, v(t + h)?);
        let vt = (vp - vm) / (T::lit(2.0) * h);
        let vtt = (vp - T::lit(2.0) * v0 + vm) / (h * h);
        // v_rr = e^{-2t}(v_tt - v_t), v_r = e^{-t} v_t
        let lap = (vtt - vt) / (r * r) + nm1 * m.log_warp_derivative(r) * vt / r;
        let inv_r2 = (r * r).recip();
        let lv = -lap - b2 * inv_r2 * v0 - lambda * inv_r2 * v0;
        let rhs = -a * (a - T::one()) * inv_r2 / (t * t) * v0 - lambda * inv_r2 * v0;
        // r^{(N-2)/2} (-log r)^{-a} = 1 / v_a
        worst = worst.max(((lv - rhs) / v0).abs());
    }
    Ok(worst)
}

/// [`operator_residual`] on the flat ball, where the error term vanishes identically.
pub fn flat_operator_residual<T: Real>(a: T, lambda: T, n: Dimension, grid: &LogUniformGrid<T>) -> Result<T> {
    if grid.r0 > T::lit(0.5) {
        return domain("the flat residual is taken on (0, r0] with r0 <= 1/2");
    }
    let m = make_manifold(ManifoldKind::EuclideanBall, T::one(), n, grid.r0)?;
    operator_residual(&m, a, lambda, grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovedHardy<T> {
    /// Least eigenvalue of `(K - ((N-2)/2)^2 W_2, W_log)`.
    pub eigenvalue: T,
    /// `eigenvalue >= 1 - 1e-2`, the discrete form of the inequality with constant 1.
    pub meets_inequality: bool,
    pub cells: usize,
}

/// Least generalized eigenvalue of `(K - ((N-2)/2)^2 W_2, W_log)` on the flat ball of
/// radius `r0` with Dirichlet data, `W_log` the `rho^{-2}(log rho)^{-2}`-weighted mass.
pub fn improved_hardy_eigen<T: Real>(n: Dimension, r0: T, cells: usize, gamma: T) -> Result<ImprovedHardy<T>> {
    if !(r0 > T::zero() && r0 < T::one()) {
        return domain(format!("r0 must lie in (0, 1), got {r0}"));
    }
    let m = make_manifold(ManifoldKind::EuclideanBall, T::one(), n, r0)?;
    let grid = build_grid(r0, cells, gamma, BoundaryCondition::Dirichlet)?;
    let forms = assemble_forms(&grid, &m, T::lit(2.0))?;
    let e = n.get() as i32;
    let w_log = assemble_weighted(&grid, &m, &|r: T| {
        let l = r.ln();
        r.powi(e - 3) / (l * l)
    })?;
    let a = forms.k.combine(T::one(), &forms.w2, -hardy_constant::<T>(n));
    let eig = smallest_pencil_eigen(&a, &w_log, &EigenOptions::default(), None)?;
    Ok(ImprovedHardy { eigenvalue: eig.mu, meets_inequality: eig.mu >= T::one() - T::lit(1e-2), cells })
}

/// Hardy-weighted norm `int_{r0 e^{-S}}^{r0} v_a^2 rho^{-2} dv` over growing log ranges
/// `S = s0, 2 s0, 4 s0, ...`. In `s = -log r` the integrand is `|S^{N-1}| s^{2a}`, so the
/// increments shrink by `2^{2a+1}` per doubling: convergent exactly when `a < -1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGrowth<T> {
    pub a: T,
    pub values: Vec<T>,
    /// Ratio of the last two increments.
    pub increment_ratio: T,
    pub converges: bool,
}

pub fn log_bubble_norm_growth<T: Real>(a: T, n: Dimension, r0: T, doublings: usize) -> Result<NormGrowth<T>> {
    if !(r0 > T::zero() && r0 < T::one()) {
        return domain(format!("r0 must lie in (0, 1), got {r0}"));
    }
    if doublings < 3 {
        return domain("need at least three doublings");
    }
    let omega: T = crate::constants::sphere_area(n.get() - 1)?;
    let rule = crate::quadrature::GaussLegendre::new(20);
    let ne = n.get() as i32;
    let s_start = T::one();
    let mut values = Vec::with_capacity(doublings + 1);
    let mut acc = T::zero();
    let mut lo_t = r0.ln();
    let mut span = s_start;
    for _ in 0..=doublings {
        let hi_t = lo_t;
        lo_t = r0.ln() - span;
        // the integrand is smooth in t
        let panels = 64;
        let h = (hi_t - lo_t) / T::of(panels);
        for k in 0..panels {
            let (a0, b0) = (lo_t + h * T::of(k), lo_t + h * T::of(k + 1));
            acc += rule.integrate(a0, b0, |t: T| {
                let r = t.exp();
                let v = log_bubble_value(r, a, n).unwrap_or(T::nan());
                // v^2 r^{-2} r^{N-1} dr with dr = r dt
                v * v * r.powi(ne - 2)
            });
        }
        values.push(acc * omega);
        span *= T::lit(2.0);
    }
    let k = values.len();
    let d1 = values[k - 2] - values[k - 3];
    let d2 = values[k - 1] - values[k - 2];
    let ratio = d2 / d1;
    Ok(NormGrowth { a, values, increment_ratio: ratio, converges: ratio < T::one() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn log_bubble_examples() {
        let e = std::f64::consts::E;
        assert!((log_bubble_value(1.0 / e, 1.0, dim(3)).unwrap() - e.sqrt()).abs() < 1e-14);
        assert!((log_bubble_value(0.3, 0.0, dim(5)).unwrap() - 0.3f64.powf(-1.5)).abs() < 1e-13);
        let v = log_bubble_value(0.25f64, 2.0, dim(4)).unwrap();
        assert!((v - 4.0 * 4f64.ln().powi(2)).abs() < 1e-13);
        assert!((v - 7.687).abs() < 1e-3);
        assert!(log_bubble_value(1.0f64, 1.0, dim(3)).is_err());
        assert!(log_bubble_value(0.0f64, 1.0, dim(3)).is_err());
    }

    #[test]
    fn virtual_ground_state_residual_is_second_order() {
        let g = LogUniformGrid::new(0.1, 8.0, 512).unwrap();
        let r1 = flat_operator_residual(0.0, 0.0, dim(3), &g).unwrap();
        let r2: f64 = flat_operator_residual(0.0, 0.0, dim(3), &g.refine()).unwrap();
        assert!(r1 > 0.0);
        assert!(((r1 / r2).log2() - 2.0).abs() < 0.05, "{r1} {r2}");
    }

    #[test]
    fn norm_growth_examples() {
        assert!(log_bubble_norm_growth(-1.0, dim(3), 0.5, 6).unwrap().converges);
        assert!(!log_bubble_norm_growth(-0.25, dim(3), 0.5, 6).unwrap().converges);
    }
}
