//! Radial grids and the discrete forms of the quotient
//! `(int |grad u|^2 - lambda int u^2) / (int rho^{-sigma} |u|^{2*})^{2/2*}`
//! restricted to radial profiles.
//!
//! Two discretisations are provided. [`RadialGrid`] carries continuous piecewise
//! linear elements in `r` on a graded grid. [`LogGrid`] is used for the Hardy pencil
//! (`sigma = 2`): it works in `t = log r`, with elements of the form
//! `r^{-(N-2)/2} * (linear in t)` on a long coarse inner range and plain linear
//! elements in `t` on the outer range, so both the singular profile `r^{-(N-2)/2}` and
//! the constants are captured.

use crate::constants::{critical_exponent, sphere_area, Dimension, SigmaExponent};
use crate::error::{domain, Result};
use crate::linalg::SymTridiagonal;
use crate::manifold::ModelManifold;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// Condition imposed at `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    /// Natural condition `u' = 0`; at the antipode of a full sphere this is smoothness.
    Reflected,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "reflected" | "neumann" | "natural" => Ok(BoundaryCondition::Reflected),
            other => domain(format!("unknown boundary condition {other:?}")),
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Reflected => "reflected",
        })
    }
}

/// Nodes `r_i = r_max (i/M)^gamma`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    pub nodes: Vec<T>,
    pub gamma: T,
    pub bc: BoundaryCondition,
}

pub fn build_grid<T: Real>(r_max: T, m: usize, gamma: T, bc: BoundaryCondition) -> Result<RadialGrid<T>> {
    if m < 8 {
        return domain(format!("grid needs at least 8 cells, got {m}"));
    }
    if !(gamma >= T::one() && gamma <= T::lit(4.0)) {
        return domain(format!("grading exponent must lie in [1, 4], got {gamma}"));
    }
    if !(r_max > T::zero()) || !r_max.is_finite() {
        return domain("grid radius must be positive");
    }
    let mm = T::of(m);
    let mut nodes: Vec<T> = (0..=m).map(|i| r_max * (T::of(i) / mm).powf(gamma)).collect();
    nodes[m] = r_max;
    Ok(RadialGrid { nodes, gamma, bc })
}

impl<T: Real> RadialGrid<T> {
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> T {
        *self.nodes.last().unwrap()
    }

    /// The grid with `2M` cells; its node set contains this one.
    pub fn refine(&self) -> Self {
        build_grid(self.r_max(), 2 * self.cells(), self.gamma, self.bc).expect("refining a valid grid")
    }
}

/// Layout of a [`LogGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGridParams<T> {
    /// Innermost node `t_0 = log r_0`.
    pub t_min: T,
    /// Length in `t` of the outer, finely resolved range ending at `log r_max`.
    pub outer_span: T,
    pub h_fine: T,
    pub h_coarse: T,
}

impl<T: Real> Default for LogGridParams<T> {
    fn default() -> Self {
        LogGridParams { t_min: T::lit(-1.0e4), outer_span: T::lit(40.0), h_fine: T::lit(0.005), h_coarse: T::lit(5.0) }
    }
}

/// Nodes in `t = log r`. Cells left of `switch` use the scaled elements,
/// nodes from `switch` on carry plain nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid<T> {
    pub t: Vec<T>,
    pub switch: usize,
    pub bc: BoundaryCondition,
}

pub fn build_log_grid<T: Real>(r_max: T, params: LogGridParams<T>, bc: BoundaryCondition) -> Result<LogGrid<T>> {
    let t_max = r_max.ln();
    let t_c = t_max - params.outer_span;
    if !(params.h_fine > T::zero() && params.h_coarse > T::zero() && params.outer_span > T::zero()) {
        return domain("log grid spacings must be positive");
    }
    if !(params.t_min < t_c) {
        return domain("log grid inner end must lie below the outer range");
    }
    let n_coarse = ((t_c - params.t_min) / params.h_coarse).ceil().to_usize().unwrap().max(1);
    let n_fine = (params.outer_span / params.h_fine).ceil().to_usize().unwrap().max(8);
    let mut t = Vec::with_capacity(n_coarse + n_fine + 1);
    for i in 0..n_coarse {
        t.push(params.t_min + (t_c - params.t_min) * T::of(i) / T::of(n_coarse));
    }
    for i in 0..=n_fine {
        t.push(t_c + params.outer_span * T::of(i) / T::of(n_fine));
    }
    let last = t.len() - 1;
    t[last] = t_max;
    Ok(LogGrid { t, switch: n_coarse, bc })
}

impl<T: Real> LogGrid<T> {
    /// Inserts every midpoint; the old nodes are kept.
    pub fn refine(&self) -> Self {
        let mut t = Vec::with_capacity(2 * self.t.len());
        for w in self.t.windows(2) {
            t.push(w[0]);
            t.push((w[0] + w[1]) / T::lit(2.0));
        }
        t.push(*self.t.last().unwrap());
        LogGrid { t, switch: 2 * self.switch, bc: self.bc }
    }

    pub fn r_max(&self) -> T {
        self.t.last().unwrap().exp()
    }
}

/// How the unknowns of a [`QuadraticForms`] map to function values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discretization<T> {
    /// Unknowns are nodal values of a piecewise linear function of `r`.
    Graded,
    /// Unknowns below `switch` are `r^a u` at the node, `a = (N-2)/2`; the rest are
    /// nodal values.
    LogScaled { a: T, switch: usize },
}

/// Nodal (or scaled-nodal) coefficients of a radial function.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub values: Vec<T>,
}

impl<T: Real> Profile<T> {
    pub fn new(values: Vec<T>) -> Self {
        Profile { values }
    }

    pub fn scaled(&self, c: T) -> Self {
        Profile { values: self.values.iter().map(|v| *v * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HsPoint<T> {
    left: usize,
    tau: T,
    weight: T,
    log_r: T,
}

/// `H(u) = int rho^{-sigma} |u|^q dv` for piecewise linear `u`, `q = 2*(sigma)`, by a
/// fixed table of quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub struct HsFunctional<T> {
    pub q: T,
    n_free: usize,
    points: Vec<HsPoint<T>>,
}

impl<T: Real> HsFunctional<T> {
    fn at(&self, u: &[T], p: &HsPoint<T>) -> T {
        let l = u[p.left];
        let r = if p.left + 1 < self.n_free { u[p.left + 1] } else { T::zero() };
        l + (r - l) * p.tau
    }

    pub fn value(&self, u: &[T]) -> T {
        self.points.iter().map(|p| p.weight * self.at(u, p).abs().powf(self.q)).sum()
    }

    /// Part of `H(u)` carried by `log r <= log_cut`.
    pub fn value_below(&self, u: &[T], log_cut: T) -> T {
        self.points.iter().filter(|p| p.log_r <= log_cut).map(|p| p.weight * self.at(u, p).abs().powf(self.q)).sum()
    }

    /// `H(u + step) - H(u)` without the cancellation of subtracting two values of `H`.
    pub fn change(&self, u: &[T], step: &[T]) -> T {
        let mut acc = T::zero();
        for p in &self.points {
            let v = self.at(u, p);
            let dv = self.at(step, p);
            if dv == T::zero() {
                continue;
            }
            let term = if v == T::zero() {
                dv.abs().powf(self.q)
            } else {
                let ratio = T::one() + dv / v;
                if ratio > T::zero() {
                    v.abs().powf(self.q) * (self.q * (dv / v).ln_1p()).exp_m1()
                } else {
                    (v + dv).abs().powf(self.q) - v.abs().powf(self.q)
                }
            };
            acc += p.weight * term;
        }
        acc
    }

    /// First variation of `H` at `u`.
    pub fn gradient(&self, u: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.n_free];
        let qm2 = self.q - T::lit(2.0);
        for p in &self.points {
            let v = self.at(u, p);
            let dv = if v == T::zero() { T::zero() } else { self.q * v.abs().powf(qm2) * v * p.weight };
            g[p.left] += dv * (T::one() - p.tau);
            if p.left + 1 < self.n_free {
                g[p.left + 1] += dv * p.tau;
            }
        }
        g
    }
}

/// Discrete forms of the quotient. All three include the `|S^{N-1}|` angular factor.
#[derive(Debug, Clone)]
pub struct QuadraticForms<T> {
    /// `int |u'|^2 psi^{N-1} dr`
    pub k: SymTridiagonal<T>,
    /// `int u^2 psi^{N-1} dr`
    pub mass: SymTridiagonal<T>,
    /// `int r^{-2} u^2 psi^{N-1} dr`, consistent (tridiagonal) element form
    pub w2: SymTridiagonal<T>,
    /// `int r^{-sigma} |u|^{2*} psi^{N-1} dr`, present for `sigma < 2`
    pub hs: Option<HsFunctional<T>>,
    pub dim: Dimension,
    pub sigma: T,
    pub r_max: T,
    pub bc: BoundaryCondition,
    pub discretization: Discretization<T>,
    /// `log r` of the node carrying each unknown (`-inf` at the pole).
    pub log_radius: Vec<T>,
}

impl<T: Real> QuadraticForms<T> {
    pub fn n_free(&self) -> usize {
        self.k.len()
    }

    /// Function values at the nodes carrying the unknowns.
    pub fn nodal_values(&self, u: &[T]) -> Vec<T> {
        match self.discretization {
            Discretization::Graded => u.to_vec(),
            Discretization::LogScaled { a, switch } => u
                .iter()
                .zip(&self.log_radius)
                .enumerate()
                .map(|(i, (v, t))| if i < switch { *v * (-a * *t).exp() } else { *v })
                .collect(),
        }
    }

    /// Coefficients of the constant function 1.
    pub fn constant_profile(&self) -> Profile<T> {
        let values = match self.discretization {
            Discretization::Graded => vec![T::one(); self.n_free()],
            Discretization::LogScaled { a, switch } => self
                .log_radius
                .iter()
                .enumerate()
                .map(|(i, t)| if i < switch { (a * *t).exp() } else { T::one() })
                .collect(),
        };
        Profile { values }
    }

    /// Number of leading unknowns whose node lies within `frac * r_max` of the pole.
    pub fn inner_count(&self, frac: T) -> usize {
        let cut = (frac * self.r_max).ln();
        self.log_radius.iter().take_while(|t| **t <= cut).count()
    }

    /// Fraction of the weighted norm carried by the innermost 1% of the radius:
    /// the `W_2` norm for `sigma = 2`, the `H` functional otherwise.
    pub fn concentration(&self, u: &[T]) -> T {
        let frac = T::lit(0.01);
        match &self.hs {
            Some(h) => {
                let total = h.value(u);
                let cut = (frac * self.r_max).ln();
                h.value_below(u, cut) / total
            }
            None => {
                let k = self.inner_count(frac);
                self.w2.quad_leading(u, k) / self.w2.quad(u)
            }
        }
    }
}

const CELL_POINTS: usize = 16;
const FIRST_CELL_PANELS: usize = 40;

// (r, dr-weight) quadrature table for one cell; the cell touching the pole is split
// into geometric panels so that the algebraic behaviour at r = 0 is resolved.
fn cell_rule<T: Real>(rule: &GaussLegendre<T>, a: T, b: T) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let mut push = |lo: T, hi: T| {
        let h = hi - lo;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((lo + h * *x, h * *w));
        }
    };
    if a == T::zero() {
        let half = T::lit(0.5);
        let mut hi = b;
        for _ in 0..FIRST_CELL_PANELS {
            let lo = hi * half;
            push(lo, hi);
            hi = lo;
        }
        push(T::zero(), hi);
    } else {
        push(a, b);
    }
    out
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if !(sigma > T::zero() && sigma <= T::lit(2.0)) {
        return domain(format!("sigma must lie in (0, 2], got {sigma}"));
    }
    Ok(())
}

fn free_count(nodes: usize, bc: BoundaryCondition) -> usize {
    match bc {
        BoundaryCondition::Dirichlet => nodes - 1,
        BoundaryCondition::Reflected => nodes,
    }
}

/// Element forms on a graded grid.
pub fn assemble_forms<T: Real>(grid: &RadialGrid<T>, m: &ModelManifold<T>, sigma: T) -> Result<QuadraticForms<T>> {
    check_sigma(sigma)?;
    if grid.r_max() > m.r_max * (T::one() + T::epsilon() * T::lit(8.0)) {
        return domain("grid extends beyond the manifold");
    }
    let n = m.dim.get() as i32;
    let omega: T = sphere_area(m.dim.get() - 1)?;
    let rule = GaussLegendre::new(CELL_POINTS);
    let n_free = free_count(grid.nodes.len(), grid.bc);
    let two = T::lit(2.0);
    let with_hs = sigma < two;
    let q = if with_hs { critical_exponent(SigmaExponent::new(sigma)?, m.dim) } else { two };
    let mut k = SymTridiagonal::zeros(n_free);
    let mut mass = SymTridiagonal::zeros(n_free);
    let mut w2 = SymTridiagonal::zeros(n_free);
    let mut points = Vec::new();
    for (i, cell) in grid.nodes.windows(2).enumerate() {
        let (a, b) = (cell[0], cell[1]);
        let h = b - a;
        let (mut kk, mut m00, mut m01, mut m11, mut w00, mut w01, mut w11) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (r, wdr) in cell_rule(&rule, a, b) {
            let tau = (r - a) / h;
            let g = m.warp_ratio(r).powi(n - 1);
            // r^{N-1} and r^{N-3} written out so that r = 0 never divides
            let vol = omega * g * r.powi(n - 1) * wdr;
            let hardy = omega * g * r.powi(n - 3) * wdr;
            let s = T::one() - tau;
            kk += vol;
            m00 += vol * s * s;
            m01 += vol * s * tau;
            m11 += vol * tau * tau;
            w00 += hardy * s * s;
            w01 += hardy * s * tau;
            w11 += hardy * tau * tau;
            if with_hs {
                let weight = omega * g * r.powf(T::of(n as usize - 1) - sigma) * wdr;
                points.push(HsPoint { left: i, tau, weight, log_r: r.ln() });
            }
        }
        let kc = kk / (h * h);
        k.add_block(i, kc, -kc, kc);
        mass.add_block(i, m00, m01, m11);
        w2.add_block(i, w00, w01, w11);
    }
    let log_radius = grid.nodes[..n_free].iter().map(|r| r.ln()).collect();
    Ok(QuadraticForms {
        k,
        mass,
        w2,
        hs: with_hs.then_some(HsFunctional { q, n_free, points }),
        dim: m.dim,
        sigma,
        r_max: grid.r_max(),
        bc: grid.bc,
        discretization: Discretization::Graded,
        log_radius,
    })
}

/// `int weight(r) u v dr` for hat functions on a graded grid, with the angular factor.
pub fn assemble_weighted<T: Real>(
    grid: &RadialGrid<T>,
    m: &ModelManifold<T>,
    weight: &dyn Fn(T) -> T,
) -> Result<SymTridiagonal<T>> {
    let omega: T = sphere_area(m.dim.get() - 1)?;
    let rule = GaussLegendre::new(CELL_POINTS);
    let mut out = SymTridiagonal::zeros(free_count(grid.nodes.len(), grid.bc));
    for (i, cell) in grid.nodes.windows(2).enumerate() {
        let (a, b) = (cell[0], cell[1]);
        let h = b - a;
        let (mut w00, mut w01, mut w11) = (T::zero(), T::zero(), T::zero());
        for (r, wdr) in cell_rule(&rule, a, b) {
            let tau = (r - a) / h;
            let s = T::one() - tau;
            let w = omega * weight(r) * wdr;
            w00 += w * s * s;
            w01 += w * s * tau;
            w11 += w * tau * tau;
        }
        out.add_block(i, w00, w01, w11);
    }
    if !out.is_finite() {
        return domain("weighted form is not finite on this grid");
    }
    Ok(out)
}

/// Forms of the Hardy pencil (`sigma = 2`) on a [`LogGrid`].
///
/// Below the innermost node the function is continued by its value there, which adds
/// `v_0^2 / (2a)` to the `W_2` form and nothing to the gradient form.
pub fn assemble_log_forms<T: Real>(grid: &LogGrid<T>, m: &ModelManifold<T>) -> Result<QuadraticForms<T>> {
    if grid.r_max() > m.r_max * (T::one() + T::lit(1e-12)) {
        return domain("grid extends beyond the manifold");
    }
    let nn: T = m.dim.as_real();
    let n = m.dim.get() as i32;
    let a = (nn - T::lit(2.0)) / T::lit(2.0);
    let omega: T = sphere_area(m.dim.get() - 1)?;
    let rule = GaussLegendre::<T>::new(10);
    let n_free = free_count(grid.t.len(), grid.bc);
    let mut k = SymTridiagonal::zeros(n_free);
    let mut mass = SymTridiagonal::zeros(n_free);
    let mut w2 = SymTridiagonal::zeros(n_free);
    let sw = grid.switch;
    for (i, cell) in grid.t.windows(2).enumerate() {
        let (ta, tb) = (cell[0], cell[1]);
        let h = tb - ta;
        let scaled = i < sw;
        // right shape function of the interface cell carries r^{a} of its plain node
        let c_right = if scaled && i + 1 >= sw { (a * tb).exp() } else { T::one() };
        let mut acc = [T::zero(); 9];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = ta + h * *x;
            let r = t.exp();
            let g = m.warp_ratio(r).powi(n - 1) * omega * *w * h;
            let (p0, p1) = (T::one() - *x, *x);
            let (d0, d1) = (-h.recip(), h.recip());
            let (f0, f1, g0, g1, wk, ww, wm) = if scaled {
                let f1 = c_right * p1;
                (p0, f1, d0 - a * p0, c_right * d1 - a * f1, g, g, g * r * r)
            } else {
                let e = ((nn - T::lit(2.0)) * t).exp();
                (p0, p1, d0, d1, g * e, g * e, g * e * r * r)
            };
            acc[0] += g0 * g0 * wk;
            acc[1] += g0 * g1 * wk;
            acc[2] += g1 * g1 * wk;
            acc[3] += f0 * f0 * wm;
            acc[4] += f0 * f1 * wm;
            acc[5] += f1 * f1 * wm;
            acc[6] += f0 * f0 * ww;
            acc[7] += f0 * f1 * ww;
            acc[8] += f1 * f1 * ww;
        }
        k.add_block(i, acc[0], acc[1], acc[2]);
        mass.add_block(i, acc[3], acc[4], acc[5]);
        w2.add_block(i, acc[6], acc[7], acc[8]);
    }
    let t0 = grid.t[0];
    let g0 = m.warp_ratio(t0.exp()).powi(n - 1) * omega;
    if sw > 0 {
        w2.diag[0] += g0 / (T::lit(2.0) * a);
        mass.diag[0] += g0 * (T::lit(2.0) * t0).exp() / nn;
    } else {
        w2.diag[0] += g0 * ((nn - T::lit(2.0)) * t0).exp() / (nn - T::lit(2.0));
        mass.diag[0] += g0 * (nn * t0).exp() / nn;
    }
    Ok(QuadraticForms {
        k,
        mass,
        w2,
        hs: None,
        dim: m.dim,
        sigma: T::lit(2.0),
        r_max: grid.r_max(),
        bc: grid.bc,
        discretization: Discretization::LogScaled { a, switch: sw },
        log_radius: grid.t[..n_free].to_vec(),
    })
}

/// Rayleigh quotient of a profile. Every nonzero profile gives an upper bound for the
/// discrete minimum on the same forms.
pub fn evaluate_quotient<T: Real>(forms: &QuadraticForms<T>, u: &Profile<T>, lambda: T) -> Result<T> {
    if u.values.len() != forms.n_free() {
        return domain(format!("profile has {} values, forms have {}", u.values.len(), forms.n_free()));
    }
    if u.is_zero() {
        return domain("zero profile");
    }
    let num = forms.k.quad(&u.values) - lambda * forms.mass.quad(&u.values);
    let den = match &forms.hs {
        Some(h) => h.value(&u.values).powf(T::lit(2.0) / h.q),
        None => forms.w2.quad(&u.values),
    };
    if !(den > T::zero()) {
        return domain("denominator vanishes");
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_manifold, ManifoldKind};
    use std::f64::consts::PI;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(1.0f64, 8, 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(g.nodes.len(), 9);
        assert!((g.nodes[3] - 0.375).abs() < 1e-15);
        let g2 = build_grid(1.0f64, 8, 2.0, BoundaryCondition::Dirichlet).unwrap();
        assert!((g2.nodes[1] - 1.0 / 64.0).abs() < 1e-16);
        let fine = g2.refine();
        for (i, r) in g2.nodes.iter().enumerate() {
            assert_eq!(fine.nodes[2 * i], *r);
        }
        assert!(build_grid(1.0, 7, 2.0, BoundaryCondition::Dirichlet).is_err());
        assert!(build_grid(1.0, 8, 0.5, BoundaryCondition::Dirichlet).is_err());
        assert!(build_grid(1.0, 8, 4.5, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn constant_profile_integrals() {
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0, dim(3), 2.0).unwrap();
        let g = build_grid(2.0, 32, 2.0, BoundaryCondition::Reflected).unwrap();
        let f = assemble_forms(&g, &m, 2.0).unwrap();
        let one = vec![1.0; f.n_free()];
        // int_0^2 r^{N-3} dr * 4 pi
        assert!((f.w2.quad(&one) - 2.0 * 4.0 * PI).abs() < 1e-10);
        let scale: f64 = f.k.diag.iter().sum();
        assert!(f.k.quad(&one).abs() < 1e-14 * scale);
        let s = make_manifold(ManifoldKind::Sphere, 1.0, dim(3), PI).unwrap();
        let gs = build_grid(PI, 64, 2.0, BoundaryCondition::Reflected).unwrap();
        let fs = assemble_forms(&gs, &s, 1.0).unwrap();
        let one = vec![1.0; fs.n_free()];
        assert!((fs.mass.quad(&one) - 2.0 * PI * PI).abs() < 1e-8);
        let q = evaluate_quotient(&fs, &Profile::new(one), 0.0).unwrap();
        assert!(q.abs() < 1e-10, "{q}");
    }

    #[test]
    fn forms_are_symmetric_and_finite() {
        let s = make_manifold(ManifoldKind::Sphere, 1.0, dim(4), PI).unwrap();
        let g = build_grid(PI, 64, 2.0, BoundaryCondition::Reflected).unwrap();
        let f = assemble_forms(&g, &s, 2.0).unwrap();
        assert!(f.k.is_finite() && f.mass.is_finite() && f.w2.is_finite());
        assert!(f.w2.diag.iter().all(|d| *d > 0.0));
        assert!(assemble_forms(&g, &s, 0.0).is_err());
        assert!(assemble_forms(&g, &s, 2.5).is_err());
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0, dim(3), 1.0).unwrap();
        let g = build_grid(1.0f64, 64, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let f = assemble_forms(&g, &m, 1.0).unwrap();
        let u = Profile::new(g.nodes[..f.n_free()].iter().map(|r| 1.0 - r * r).collect());
        let base = evaluate_quotient(&f, &u, -1.0).unwrap();
        for c in [1e-3, 1e3] {
            let v = evaluate_quotient(&f, &u.scaled(c), -1.0).unwrap();
            assert!(((v - base) / base).abs() < 1e-12);
        }
        assert!(evaluate_quotient(&f, &u.scaled(0.0), 0.0).is_err());
    }

    #[test]
    fn log_grid_nesting_and_constants() {
        let s = make_manifold(ManifoldKind::Sphere, 1.0, dim(3), PI).unwrap();
        let p = LogGridParams { t_min: -200.0, outer_span: 40.0, h_fine: 0.1, h_coarse: 5.0 };
        let g = build_log_grid(PI, p, BoundaryCondition::Reflected).unwrap();
        let fine = g.refine();
        for (i, t) in g.t.iter().enumerate() {
            assert_eq!(fine.t[2 * i], *t);
        }
        let f = assemble_log_forms(&g, &s).unwrap();
        let c = f.constant_profile();
        assert!(f.k.quad(&c.values).abs() < 1e-12);
        let vol = f.mass.quad(&c.values);
        assert!((vol - 2.0 * PI * PI).abs() < 1e-6);
    }
}
