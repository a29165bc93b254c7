//! Least eigenvalue of the pencil `(K - lambda Mass, W_2)`: inertia bisection for the
//! value, inverse iteration for the vector.

use crate::error::{domain, Error, Result};
use crate::forms::{Profile, QuadraticForms};
use crate::linalg::{dot, norm, SymTridiagonal};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions<T> {
    /// Width of the final bisection bracket.
    pub abs_tol: T,
    /// Target relative pencil residual of the eigenvector.
    pub residual_tol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        EigenOptions {
            abs_tol: T::lit(1e-10).max(eps * T::lit(64.0)),
            residual_tol: T::lit(1e-9).max(eps * T::lit(256.0)),
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    InverseIteration,
    /// Two-vector shifted subspace iteration, used when inverse iteration stalls.
    SubspaceIteration,
}

/// Eigenpair of a bare pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilEigen<T> {
    pub mu: T,
    /// `W`-normalised, oriented to have a nonnegative sum.
    pub vector: Vec<T>,
    pub bracket: (T, T),
    pub iterations: usize,
    pub residual: T,
    pub method: EigenMethod,
    /// Residual reached by inverse iteration before falling back, if it did.
    pub inverse_residual: Option<T>,
}

/// Eigenpair of the discrete Hardy pencil with its concentration diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    pub mu: T,
    /// `W_2`-normalised: `u^T W_2 u = 1`.
    pub profile: Profile<T>,
    pub iterations: usize,
    pub residual: T,
    pub concentration: T,
    pub method: EigenMethod,
}

/// Number of generalized eigenvalues of `(a, w)` strictly below `shift`, from the
/// inertia of `a - shift w`. An exactly singular factorisation is retried with the
/// shift nudged down by a few ulps of its scale.
pub fn inertia_count<T: Real>(a: &SymTridiagonal<T>, w: &SymTridiagonal<T>, shift: T) -> usize {
    let mut s = shift;
    let mut nudge = (shift.abs().max(T::one())) * T::epsilon() * T::lit(4.0);
    for _ in 0..60 {
        if let Some(c) = a.combine(T::one(), w, -s).negative_count() {
            return c;
        }
        s -= nudge;
        nudge *= T::lit(2.0);
    }
    panic!("inertia count broke down repeatedly near shift {shift}");
}

fn rayleigh<T: Real>(a: &SymTridiagonal<T>, w: &SymTridiagonal<T>, x: &[T]) -> T {
    a.quad(x) / w.quad(x)
}

fn spectral_bound<T: Real>(m: &SymTridiagonal<T>) -> T {
    let (lo, hi) = m.gershgorin();
    lo.abs().max(hi.abs())
}

// ||a x - mu w x|| relative to (||a|| + |mu| ||w||) ||x||, with Gershgorin norms.
fn residual_of<T: Real>(a: &SymTridiagonal<T>, w: &SymTridiagonal<T>, x: &[T], mu: T) -> T {
    let ax = a.matvec(x);
    let wx = w.matvec(x);
    let r: Vec<T> = ax.iter().zip(&wx).map(|(p, q)| *p - mu * *q).collect();
    norm(&r) / ((spectral_bound(a) + mu.abs() * spectral_bound(w)) * norm(x))
}

fn w_normalize<T: Real>(w: &SymTridiagonal<T>, x: &mut [T]) {
    let s = w.quad(x).sqrt();
    let sum: T = x.iter().copied().sum();
    let sign = if sum < T::zero() { -T::one() } else { T::one() };
    for v in x.iter_mut() {
        *v = *v * sign / s;
    }
}

/// Least eigenvalue of `a x = mu w x` with `w` symmetric positive definite.
pub fn smallest_pencil_eigen<T: Real>(
    a: &SymTridiagonal<T>,
    w: &SymTridiagonal<T>,
    opts: &EigenOptions<T>,
    warm: Option<&[T]>,
) -> Result<PencilEigen<T>> {
    let n = a.len();
    if n == 0 || w.len() != n {
        return domain("pencil matrices must be nonempty and of equal size");
    }
    if !a.is_finite() || !w.is_finite() {
        return domain("pencil has non-finite entries");
    }
    let start: Vec<T> = match warm {
        Some(v) if v.len() == n && v.iter().any(|x| *x != T::zero()) => v.to_vec(),
        _ => vec![T::one(); n],
    };
    // bracket [lo, hi] with count(lo) = 0 <= 1 <= count(hi)
    let rq = rayleigh(a, w, &start);
    let mut step = rq.abs().max(T::one()) * T::lit(1e-8);
    let mut hi = rq + step;
    while inertia_count(a, w, hi) == 0 {
        step *= T::lit(4.0);
        hi = rq + step;
    }
    let mut width = T::one().max(rq.abs());
    let mut lo = hi - width;
    while inertia_count(a, w, lo) > 0 {
        width *= T::lit(4.0);
        lo = hi - width;
        if !lo.is_finite() {
            return Err(Error::NotConverged("no lower bracket for the pencil".into()));
        }
    }
    let mut bisections = 0;
    while hi - lo > opts.abs_tol && bisections < 400 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if inertia_count(a, w, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        bisections += 1;
    }
    let gap = (hi - lo).max(opts.abs_tol);
    let shift = lo - gap;
    let op = a.combine(T::one(), w, -shift);

    // inverse iteration
    let mut x = start.clone();
    w_normalize(w, &mut x);
    let mut mu = rayleigh(a, w, &x);
    let mut res = residual_of(a, w, &x, mu);
    let mut iters = 0;
    while res > opts.residual_tol && iters < opts.max_iterations {
        let rhs = w.matvec(&x);
        let Some(mut y) = op.solve(&rhs) else { break };
        w_normalize(w, &mut y);
        x = y;
        mu = rayleigh(a, w, &x);
        res = residual_of(a, w, &x, mu);
        iters += 1;
    }
    if res <= opts.residual_tol && within_bracket(a, w, &x, mu, lo, hi) {
        return Ok(PencilEigen {
            mu: mu.max(lo).min(hi),
            vector: x,
            bracket: (lo, hi),
            iterations: iters + bisections,
            residual: res,
            method: EigenMethod::InverseIteration,
            inverse_residual: None,
        });
    }
    let inverse_residual = Some(res);
    let (mu2, x2, it2, res2) = subspace_iteration(a, w, &op, &x, opts)?;
    if !within_bracket(a, w, &x2, mu2, lo, hi) {
        return Err(Error::NotConverged(format!(
            "eigenvector quotient {mu2} disagrees with the inertia bracket [{lo}, {hi}]"
        )));
    }
    Ok(PencilEigen {
        mu: mu2.max(lo).min(hi),
        vector: x2,
        bracket: (lo, hi),
        iterations: iters + bisections + it2,
        residual: res2,
        method: EigenMethod::SubspaceIteration,
        inverse_residual,
    })
}

// The Rayleigh quotient agrees with the inertia bracket up to its own rounding error.
fn within_bracket<T: Real>(a: &SymTridiagonal<T>, w: &SymTridiagonal<T>, x: &[T], mu: T, lo: T, hi: T) -> bool {
    let n = T::of(x.len()).sqrt();
    let noise = T::epsilon() * n * T::lit(4.0) * (a.quad_abs(x) + mu.abs() * w.quad_abs(x)) / w.quad(x);
    let slack = (hi - lo) * T::lit(4.0) + noise;
    mu >= lo - slack && mu <= hi + slack
}

// Shifted subspace iteration on two vectors with a 2x2 Rayleigh-Ritz step.
fn subspace_iteration<T: Real>(
    a: &SymTridiagonal<T>,
    w: &SymTridiagonal<T>,
    op: &SymTridiagonal<T>,
    seed: &[T],
    opts: &EigenOptions<T>,
) -> Result<(T, Vec<T>, usize, T)> {
    let n = a.len();
    let mut x1 = seed.to_vec();
    let mut x2: Vec<T> = (0..n).map(|i| if i % 2 == 0 { T::one() } else { -T::one() }).collect();
    let mut best = (T::infinity(), x1.clone(), T::infinity());
    for it in 0..opts.max_iterations * 4 {
        let mut y1 = op.solve(&w.matvec(&x1)).ok_or_else(|| Error::NotConverged("singular shift".into()))?;
        let mut y2 = op.solve(&w.matvec(&x2)).ok_or_else(|| Error::NotConverged("singular shift".into()))?;
        w_normalize(w, &mut y1);
        let c = dot(&y1, &w.matvec(&y2));
        for (b, p) in y2.iter_mut().zip(&y1) {
            *b -= c * *p;
        }
        w_normalize(w, &mut y2);
        // Ritz pair of the projected 2x2 problem (W-orthonormal basis)
        let a11 = a.quad(&y1);
        let a22 = a.quad(&y2);
        let a12 = dot(&y1, &a.matvec(&y2));
        let mean = (a11 + a22) / T::lit(2.0);
        let half = (a11 - a22) / T::lit(2.0);
        let rad = (half * half + a12 * a12).sqrt();
        let theta = mean - rad;
        // eigenvector of [[a11, a12], [a12, a22]] for theta
        let (c1, c2) =
            if (a11 - theta).abs() > (a22 - theta).abs() { (-a12, a11 - theta) } else { (a22 - theta, -a12) };
        let (c1, c2) = if c1 == T::zero() && c2 == T::zero() { (T::one(), T::zero()) } else { (c1, c2) };
        let mut v: Vec<T> = y1.iter().zip(&y2).map(|(p, q)| c1 * *p + c2 * *q).collect();
        let mut other: Vec<T> = y1.iter().zip(&y2).map(|(p, q)| -c2 * *p + c1 * *q).collect();
        w_normalize(w, &mut v);
        w_normalize(w, &mut other);
        let mu = rayleigh(a, w, &v);
        let res = residual_of(a, w, &v, mu);
        if res < best.2 {
            best = (mu, v.clone(), res);
        }
        if res <= opts.residual_tol {
            return Ok((mu, v, it + 1, res));
        }
        x1 = v;
        x2 = other;
    }
    Ok((best.0, best.1, opts.max_iterations * 4, best.2))
}

/// Discrete `mu_{lambda,2}` and its ground state on forms assembled with `sigma = 2`.
pub fn smallest_generalized_eigen<T: Real>(forms: &QuadraticForms<T>, lambda: T) -> Result<EigenResult<T>> {
    smallest_generalized_eigen_with(forms, lambda, &EigenOptions::default(), None)
}

pub fn smallest_generalized_eigen_with<T: Real>(
    forms: &QuadraticForms<T>,
    lambda: T,
    opts: &EigenOptions<T>,
    warm: Option<&[T]>,
) -> Result<EigenResult<T>> {
    if forms.sigma != T::lit(2.0) {
        return domain("the linear pencil needs forms assembled with sigma = 2");
    }
    let a = forms.k.combine(T::one(), &forms.mass, -lambda);
    let e = smallest_pencil_eigen(&a, &forms.w2, opts, warm)?;
    let concentration = forms.concentration(&e.vector);
    Ok(EigenResult {
        mu: e.mu,
        profile: Profile::new(e.vector),
        iterations: e.iterations,
        residual: e.residual,
        concentration,
        method: e.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Dimension;
    use crate::forms::{assemble_forms, build_grid, evaluate_quotient, BoundaryCondition};
    use crate::manifold::{make_manifold, ManifoldKind};
    use std::f64::consts::PI;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn inertia_examples() {
        let a = SymTridiagonal { diag: vec![2.0, 3.0, 4.0], off: vec![0.5, -0.5] };
        let w = SymTridiagonal { diag: vec![1.0; 3], off: vec![0.0; 2] };
        let (lo, hi) = a.gershgorin();
        assert_eq!(inertia_count(&a, &w, lo - 1.0), 0);
        assert_eq!(inertia_count(&a, &w, hi + 1.0), 3);
        assert_eq!(inertia_count(&w, &w, 1.0 - 1e-9), 0);
        assert_eq!(inertia_count(&w, &w, 1.0 + 1e-9), 3);
        // exactly singular: nudged below and counted as 0
        assert_eq!(inertia_count(&w, &w, 1.0), 0);
    }

    #[test]
    fn laplacian_sanity_against_mass() {
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0f64, dim(3), 1.0).unwrap();
        let g = build_grid(1.0, 512, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let f = assemble_forms(&g, &m, 2.0).unwrap();
        let e = smallest_pencil_eigen(&f.k, &f.mass, &EigenOptions::default(), None).unwrap();
        assert!((e.mu - PI * PI).abs() < 1e-3, "{}", e.mu);
        assert!(e.mu >= PI * PI - 1e-9);
    }

    #[test]
    fn constant_ground_state_on_sphere() {
        let m = make_manifold(ManifoldKind::Sphere, 1.0f64, dim(3), PI).unwrap();
        let g = build_grid(PI, 128, 2.0, BoundaryCondition::Reflected).unwrap();
        let f = assemble_forms(&g, &m, 2.0).unwrap();
        let e = smallest_generalized_eigen(&f, 0.0).unwrap();
        assert!(e.mu.abs() < 1e-10);
        let first = e.profile.values[0];
        assert!(e.profile.values.iter().all(|v| (v - first).abs() < 1e-8 * first.abs()));
        assert!((f.w2.quad(&e.profile.values) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_reproduces_eigenvalue() {
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0f64, dim(3), 1.0).unwrap();
        let g = build_grid(1.0, 256, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let f = assemble_forms(&g, &m, 2.0).unwrap();
        let e = smallest_generalized_eigen(&f, 0.0).unwrap();
        assert!(e.residual <= 1e-9);
        let q = evaluate_quotient(&f, &e.profile, 0.0).unwrap();
        assert!((q - e.mu).abs() < 1e-10);
        assert_eq!(inertia_count(&f.k, &f.w2, e.mu - 1e-8), 0);
        assert!(inertia_count(&f.k, &f.w2, e.mu + 1e-8) >= 1);
    }

    #[test]
    fn rejects_nonlinear_forms() {
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0f64, dim(3), 1.0).unwrap();
        let g = build_grid(1.0, 16, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let f = assemble_forms(&g, &m, 1.0).unwrap();
        assert!(smallest_generalized_eigen(&f, 0.0).is_err());
    }
}
