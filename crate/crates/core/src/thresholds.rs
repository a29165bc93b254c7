//! The map `lambda -> mu_{lambda,2}`, brackets for the threshold `lambda*`, and the
//! strict-inequality check for `0 < sigma < 2`.

use rayon::prelude::*;

use crate::constants::{hardy_constant, hardy_sobolev_constant, SigmaExponent};
use crate::eigensolver::smallest_generalized_eigen;
use crate::error::{domain, Error, Result};
use crate::forms::{
    assemble_forms, assemble_log_forms, build_grid, build_log_grid, BoundaryCondition, LogGridParams, QuadraticForms,
};
use crate::manifold::{curvature_criterion, CriterionCheck, ModelManifold};
use crate::minimizer::{default_inits, minimize_quotient, MinimizerParams};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// Discretization used for the Hardy pencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HardyGrid<T> {
    Log(LogGridParams<T>),
    Graded { cells: usize, gamma: T },
}

impl<T: Real> Default for HardyGrid<T> {
    fn default() -> Self {
        HardyGrid::Log(LogGridParams::default())
    }
}

/// Reflected condition on a closed sphere, Dirichlet otherwise.
pub fn natural_bc<T: Real>(m: &ModelManifold<T>) -> BoundaryCondition {
    if m.is_closed() {
        BoundaryCondition::Reflected
    } else {
        BoundaryCondition::Dirichlet
    }
}

/// Forms of the `sigma = 2` pencil on the whole model, refined `level` times.
pub fn hardy_forms<T: Real>(m: &ModelManifold<T>, grid: &HardyGrid<T>, level: u32) -> Result<QuadraticForms<T>> {
    let bc = natural_bc(m);
    match grid {
        HardyGrid::Log(p) => {
            let mut g = build_log_grid(m.r_max, *p, bc)?;
            for _ in 0..level {
                g = g.refine();
            }
            assemble_log_forms(&g, m)
        }
        HardyGrid::Graded { cells, gamma } => {
            let mut g = build_grid(m.r_max, *cells, *gamma, bc)?;
            for _ in 0..level {
                g = g.refine();
            }
            assemble_forms(&g, m, T::lit(2.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSample<T> {
    pub lambda: T,
    pub mu: T,
    pub concentration: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuCurve<T> {
    /// Sorted by increasing `lambda`.
    pub samples: Vec<MuSample<T>>,
}

impl<T: Real> MuCurve<T> {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].mu < w[0].mu)
    }

    pub fn max_mu(&self) -> T {
        self.samples.iter().map(|s| s.mu).fold(T::neg_infinity(), T::max)
    }
}

/// Discrete `mu_{lambda,2}` and its concentration diagnostic.
pub fn mu_of_lambda<T: Real>(forms: &QuadraticForms<T>, lambda: T) -> Result<(T, T)> {
    let e = smallest_generalized_eigen(forms, lambda)?;
    Ok((e.mu, e.concentration))
}

/// `mu_of_lambda` over a set of `lambda` values, evaluated in parallel.
pub fn mu_curve<T: Real>(forms: &QuadraticForms<T>, lambdas: &[T]) -> Result<MuCurve<T>> {
    let mut ls = lambdas.to_vec();
    if ls.iter().any(|l| !l.is_finite()) {
        return domain("lambda values must be finite");
    }
    ls.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    ls.dedup();
    let samples = ls
        .par_iter()
        .map(|l| mu_of_lambda(forms, *l).map(|(mu, c)| MuSample { lambda: *l, mu, concentration: c }))
        .collect::<Result<Vec<_>>>()?;
    Ok(MuCurve { samples })
}

/// `lambda*` is not a point estimate: `hi` is where the discrete `mu` was seen below
/// the Hardy cap, `lo` where it was not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStarBracket<T> {
    pub lo: T,
    pub hi: T,
    pub detection_delta: T,
    /// Refinement level of the grid the predicate was evaluated on.
    pub grid_tag: u32,
    pub mu_lo: T,
    pub mu_hi: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    /// Points of the initial sweep.
    pub steps: usize,
    pub tol_lambda: T,
    /// `None` measures it from one refinement.
    pub detection_delta: Option<T>,
}

impl<T: Real> Default for LambdaSearch<T> {
    fn default() -> Self {
        LambdaSearch {
            lambda_min: T::lit(-10.0),
            lambda_max: T::lit(10.0),
            steps: 21,
            tol_lambda: T::lit(1e-3),
            detection_delta: None,
        }
    }
}

/// Smallest detection threshold used when the refinement gap is below solver accuracy.
pub const MIN_DETECTION_DELTA: f64 = 1e-8;

/// Bisection on `mu_h(lambda) < ((N-2)/2)^2 - delta`.
pub fn lambda_star_bracket<T: Real>(
    m: &ModelManifold<T>,
    grid: &HardyGrid<T>,
    level: u32,
    search: &LambdaSearch<T>,
) -> Result<LambdaStarBracket<T>> {
    if !(search.tol_lambda > T::zero()) {
        return domain("tol_lambda must be positive");
    }
    if !(search.lambda_min < search.lambda_max) || search.steps < 2 {
        return domain("sweep range must be nonempty with at least two points");
    }
    let forms = hardy_forms(m, grid, level)?;
    let cap: T = hardy_constant(m.dim);
    let floor = T::lit(MIN_DETECTION_DELTA);
    let span = search.lambda_max - search.lambda_min;
    let sweep: Vec<T> =
        (0..search.steps).map(|i| search.lambda_min + span * T::of(i) / T::of(search.steps - 1)).collect();
    let curve = mu_curve(&forms, &sweep)?;
    let first_delta = search.detection_delta.unwrap_or(floor);
    let below = |mu: T, delta: T| mu < cap - delta;
    let idx = curve.samples.iter().position(|s| below(s.mu, first_delta));
    let idx = match idx {
        Some(0) => {
            return Err(Error::Range(format!(
                "mu is already below the Hardy cap at lambda = {}; widen the sweep downward",
                search.lambda_min
            )))
        }
        None => {
            return Err(Error::Range(format!(
                "mu never drops below the Hardy cap up to lambda = {}; widen the sweep upward",
                search.lambda_max
            )))
        }
        Some(i) => i,
    };
    let (mut lo, mut hi) = (curve.samples[idx - 1].lambda, curve.samples[idx].lambda);
    let (mut mu_lo, mut mu_hi) = (curve.samples[idx - 1].mu, curve.samples[idx].mu);
    let delta = match search.detection_delta {
        Some(d) => d,
        None => {
            let mid = (lo + hi) / T::lit(2.0);
            let fine = hardy_forms(m, grid, level + 1)?;
            let (a, _) = mu_of_lambda(&forms, mid)?;
            let (b, _) = mu_of_lambda(&fine, mid)?;
            ((a - b).abs() / T::lit(2.0)).max(floor)
        }
    };
    if !below(mu_hi, delta) || below(mu_lo, delta) {
        // the measured threshold moved the crossing; locate it again on the sweep
        let i = curve.samples.iter().position(|s| below(s.mu, delta));
        match i {
            Some(i) if i > 0 => {
                lo = curve.samples[i - 1].lambda;
                hi = curve.samples[i].lambda;
                mu_lo = curve.samples[i - 1].mu;
                mu_hi = curve.samples[i].mu;
            }
            _ => return Err(Error::Range("no cap crossing inside the sweep; widen it".into())),
        }
    }
    while hi - lo > search.tol_lambda {
        let mid = (lo + hi) / T::lit(2.0);
        let (mu, _) = mu_of_lambda(&forms, mid)?;
        if below(mu, delta) {
            hi = mid;
            mu_hi = mu;
        } else {
            lo = mid;
            mu_lo = mu;
        }
    }
    Ok(LambdaStarBracket { lo, hi, detection_delta: delta, grid_tag: level, mu_lo, mu_hi })
}

/// `-((N-2)/2)^2 Vol / int rho^{-2} dv`: the constant function shows `mu(lambda)` is
/// below the cap for every larger `lambda`, so `lambda*` cannot exceed this.
pub fn constant_test_bound<T: Real>(m: &ModelManifold<T>) -> Result<T> {
    let n = m.dim.get() as i32;
    let rule = GaussLegendre::new(20);
    let panels = 32;
    let h = m.r_max / T::of(panels);
    let (mut vol, mut hardy_weight) = (T::zero(), T::zero());
    for i in 0..panels {
        let (a, b) = (h * T::of(i), h * T::of(i + 1));
        vol += rule.integrate(a, b, |r| m.warp(r).powi(n - 1));
        hardy_weight += rule.integrate(a, b, |r| m.warp_ratio(r).powi(n - 1) * r.powi(n - 3));
    }
    Ok(-hardy_constant::<T>(m.dim) * vol / hardy_weight)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConfirmsTheorem,
    Inconclusive,
    /// Strict inequality observed where the curvature criterion does not hold.
    StrictOutsideCriterion,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConfirmsTheorem => "CONFIRMS_THEOREM",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::StrictOutsideCriterion => "STRICT_OUTSIDE_CRITERION",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictGrid<T> {
    /// Cells of the coarse grid; the fine grid has twice as many.
    pub cells: usize,
    pub gamma: T,
}

impl<T: Real> Default for StrictGrid<T> {
    fn default() -> Self {
        StrictGrid { cells: 128, gamma: T::lit(2.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictReport<T> {
    /// Fine-grid minimizer value.
    pub mu_upper: T,
    pub mu_coarse: T,
    pub sharp_constant: T,
    /// `sharp_constant - mu_upper`.
    pub margin: T,
    /// `|mu_coarse - mu_upper|`: Richardson with an assumed first-order rate, which
    /// over-states the error of a second-order scheme.
    pub error_estimate: T,
    pub criterion: CriterionCheck,
    /// The theorem is stated for `N >= 4` and `lambda < 0`.
    pub in_theorem_scope: bool,
    pub converged: bool,
    pub verdict: Verdict,
}

/// Multiplier between margin and estimated discretization error required for a verdict.
pub const MARGIN_FACTOR: f64 = 5.0;

pub fn strict_inequality_report<T: Real>(
    m: &ModelManifold<T>,
    lambda: T,
    sigma: T,
    grid: StrictGrid<T>,
) -> Result<StrictReport<T>> {
    if !(sigma > T::zero() && sigma < T::lit(2.0)) {
        return domain(format!("sigma must lie in (0, 2), got {sigma}"));
    }
    let s = hardy_sobolev_constant(m.dim, SigmaExponent::new(sigma)?)?;
    let bc = natural_bc(m);
    let coarse = build_grid(m.r_max, grid.cells, grid.gamma, bc)?;
    let fine = coarse.refine();
    let params = MinimizerParams::default();
    let solve = |g| -> Result<_> {
        let f = assemble_forms(g, m, sigma)?;
        minimize_quotient(&f, lambda, &default_inits(&f)?, &params)
    };
    let (rc, rf) = rayon::join(|| solve(&coarse), || solve(&fine));
    let (rc, rf) = (rc?, rf?);
    let error_estimate = (rc.mu_upper - rf.mu_upper).abs();
    let margin = s - rf.mu_upper;
    let criterion = curvature_criterion(m, lambda);
    let in_theorem_scope = m.dim.get() >= 4 && criterion.in_regime;
    let resolved = margin > T::lit(MARGIN_FACTOR) * error_estimate;
    let verdict = match (resolved, criterion.holds && in_theorem_scope) {
        (true, true) => Verdict::ConfirmsTheorem,
        (true, false) => Verdict::StrictOutsideCriterion,
        (false, _) => Verdict::Inconclusive,
    };
    Ok(StrictReport {
        mu_upper: rf.mu_upper,
        mu_coarse: rc.mu_upper,
        sharp_constant: s,
        margin,
        error_estimate,
        criterion,
        in_theorem_scope,
        converged: rc.converged && rf.converged,
        verdict,
    })
}
