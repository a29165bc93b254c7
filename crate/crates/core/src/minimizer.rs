//! Minimization of the Hardy-Sobolev quotient (`0 < sigma < 2`) over radial profiles.
//!
//! Preconditioned gradient descent of the scale-invariant quotient with Armijo
//! backtracking; after every accepted step the iterate is rescaled back onto
//! `H(u) = 1`, where the quotient and the energy `u^T K u - lambda u^T Mass u` agree.

use rayon::prelude::*;

use crate::bubble::bubble_value;
use crate::constants::SigmaExponent;
use crate::error::{domain, Result};
use crate::forms::{evaluate_quotient, Discretization, HsFunctional, Profile, QuadraticForms};
use crate::linalg::{dot, SymTridiagonal};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitTag<T> {
    Constant,
    Bubble(T),
    Custom(usize),
}

impl<T: Real> std::fmt::Display for InitTag<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitTag::Constant => f.write_str("constant"),
            InitTag::Bubble(n) => write!(f, "bubble({n})"),
            InitTag::Custom(i) => write!(f, "custom({i})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Init<T> {
    pub tag: InitTag<T>,
    pub profile: Profile<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerParams<T> {
    pub max_iterations: usize,
    /// Stop once `sqrt(g^T P^{-1} g / u^T P u)` falls below this.
    pub grad_tol: T,
    pub armijo_c: T,
    pub backtrack: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for MinimizerParams<T> {
    fn default() -> Self {
        MinimizerParams {
            max_iterations: 4000,
            grad_tol: T::lit(1e-8),
            armijo_c: T::lit(1e-4),
            backtrack: T::lit(0.5),
            max_backtracks: 60,
        }
    }
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome<T> {
    pub tag: InitTag<T>,
    pub initial_quotient: T,
    pub mu: T,
    pub iterations: usize,
    pub grad_norm: T,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizationResult<T> {
    /// Quotient of `profile`; an upper bound for the discrete minimum.
    pub mu_upper: T,
    /// Normalised to `H(u) = 1`.
    pub profile: Profile<T>,
    pub iterations: usize,
    pub grad_norm: T,
    pub converged: bool,
    pub init_tag: InitTag<T>,
    pub concentration: T,
    /// Energies after each accepted step of the winning start, starting with the
    /// normalised initial profile.
    pub energy_history: Vec<T>,
    /// Largest `|H(u) - 1|` seen after a projection in the winning start.
    pub constraint_drift: T,
    pub starts: Vec<InitOutcome<T>>,
}

// f(x) = exp(-1/x) for x > 0
fn bump_half<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth step equal to 1 on `[0, cutoff]` and 0 beyond `2 cutoff`.
pub fn smooth_cutoff<T: Real>(r: T, cutoff: T) -> T {
    let x = T::lit(2.0) - r / cutoff;
    let a = bump_half(x);
    let b = bump_half(T::one() - x);
    a / (a + b)
}

fn node_radii<T: Real>(forms: &QuadraticForms<T>) -> Vec<T> {
    forms.log_radius.iter().map(|t| t.exp()).collect()
}

// Nodal values to unknowns.
fn to_coefficients<T: Real>(forms: &QuadraticForms<T>, mut values: Vec<T>) -> Vec<T> {
    if let Discretization::LogScaled { a, switch } = forms.discretization {
        for (v, t) in values.iter_mut().zip(&forms.log_radius).take(switch) {
            *v *= (a * *t).exp();
        }
    }
    values
}

/// Interpolant of `eta(r) n^{(N-2)/2} w(n r)` with the cutoff `eta` equal to 1 on
/// `[0, cutoff]` and 0 beyond `2 cutoff`.
pub fn bubble_init<T: Real>(forms: &QuadraticForms<T>, n: T, cutoff: T) -> Result<Profile<T>> {
    if !(n >= T::one()) || !n.is_finite() {
        return domain(format!("bubble scale must be at least 1, got {n}"));
    }
    if !(cutoff > T::zero()) || T::lit(2.0) * cutoff > forms.r_max * (T::one() + T::epsilon() * T::lit(8.0)) {
        return domain(format!("cutoff {cutoff} does not fit in radius {}", forms.r_max));
    }
    let sigma = SigmaExponent::new(forms.sigma)?;
    let amp = n.powf((forms.dim.as_real::<T>() - T::lit(2.0)) / T::lit(2.0));
    let values = node_radii(forms)
        .into_iter()
        .map(|r| Ok(smooth_cutoff(r, cutoff) * amp * bubble_value(n * r, forms.dim, sigma)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile::new(to_coefficients(forms, values)))
}

/// Constant profile plus bubbles `n = 2, 8, 32` cut off at half the radius.
pub fn default_inits<T: Real>(forms: &QuadraticForms<T>) -> Result<Vec<Init<T>>> {
    let mut out = vec![Init { tag: InitTag::Constant, profile: forms.constant_profile() }];
    let cutoff = forms.r_max / T::lit(2.0);
    for n in [2.0, 8.0, 32.0] {
        let n = T::lit(n);
        out.push(Init { tag: InitTag::Bubble(n), profile: bubble_init(forms, n, cutoff)? });
    }
    Ok(out)
}

struct Problem<'a, T> {
    a: SymTridiagonal<T>,
    p: SymTridiagonal<T>,
    h: &'a HsFunctional<T>,
    forms: &'a QuadraticForms<T>,
    lambda: T,
}

impl<T: Real> Problem<'_, T> {
    // Q(u + step) - Q(u) at a point with H(u) = 1 and energy `e`, assembled from
    // increments so that decreases near the rounding level of Q stay visible.
    fn quotient_change(&self, u: &[T], step: &[T], e: T) -> T {
        let astep = self.a.matvec(step);
        let de = T::lit(2.0) * dot(u, &astep) + dot(step, &astep);
        let dh = self.h.change(u, step);
        let ex = T::lit(2.0) / self.h.q;
        let growth = (ex * dh.ln_1p()).exp_m1();
        (de - e * growth) / (T::one() + growth)
    }

    fn project(&self, u: &mut [T]) -> T {
        let s = self.h.value(u).powf(-self.h.q.recip());
        for v in u.iter_mut() {
            *v *= s;
        }
        (self.h.value(u) - T::one()).abs()
    }

    // gradient of the quotient at a point with H(u) = 1
    fn gradient(&self, u: &[T], energy: T) -> Vec<T> {
        let au = self.a.matvec(u);
        let dh = self.h.gradient(u);
        let c = T::lit(2.0) * energy / self.h.q;
        au.iter().zip(&dh).map(|(x, y)| T::lit(2.0) * *x - c * *y).collect()
    }

    fn run(&self, init: &Init<T>, params: &MinimizerParams<T>) -> Result<Run<T>> {
        if init.profile.values.len() != self.forms.n_free() {
            return domain("init profile does not match the forms");
        }
        if init.profile.is_zero() || init.profile.values.iter().any(|v| !v.is_finite()) {
            return domain(format!("init {} is zero or not finite", init.tag));
        }
        let initial_quotient = evaluate_quotient(self.forms, &init.profile, self.lambda)?;
        let mut u = init.profile.values.clone();
        let mut drift = self.project(&mut u);
        let mut energy = self.a.quad(&u);
        let mut history = vec![energy];
        let mut grad_norm = T::infinity();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < params.max_iterations {
            let g = self.gradient(&u, energy);
            let d = match self.p.solve(&g) {
                Some(d) => d,
                None => return domain("preconditioner is singular"),
            };
            let gpg = dot(&g, &d).max(T::zero());
            grad_norm = (gpg / self.p.quad(&u)).sqrt();
            if grad_norm <= params.grad_tol {
                converged = true;
                break;
            }
            let mut tau = T::one();
            let mut accepted = None;
            for _ in 0..params.max_backtracks {
                let step: Vec<T> = d.iter().map(|y| -tau * *y).collect();
                let dq = self.quotient_change(&u, &step, energy);
                if dq.is_finite() && dq <= -params.armijo_c * tau * gpg {
                    accepted = Some(u.iter().zip(&step).map(|(x, y)| *x + *y).collect::<Vec<T>>());
                    break;
                }
                tau *= params.backtrack;
            }
            let Some(mut next) = accepted else {
                // no descent left at working precision
                break;
            };
            drift = drift.max(self.project(&mut next));
            let e = self.a.quad(&next);
            // the step decreased Q exactly; a recomputed energy above the old one can
            // only be evaluation rounding, anything more means the model broke down
            let slack = T::epsilon() * T::lit(16.0) * (self.a.quad_abs(&next) + energy.abs());
            if e > energy + slack {
                break;
            }
            u = next;
            energy = e;
            history.push(energy);
            iterations += 1;
        }
        if u.iter().any(|v| *v < T::zero()) {
            let mut abs: Vec<T> = u.iter().map(|v| v.abs()).collect();
            drift = drift.max(self.project(&mut abs));
            let e = self.a.quad(&abs);
            if e <= energy {
                u = abs;
                energy = e;
                history.push(energy);
            }
        }
        let profile = Profile::new(u);
        let mu = evaluate_quotient(self.forms, &profile, self.lambda)?;
        Ok(Run {
            outcome: InitOutcome { tag: init.tag, initial_quotient, mu, iterations, grad_norm, converged },
            profile,
            history,
            drift,
        })
    }
}

struct Run<T> {
    outcome: InitOutcome<T>,
    profile: Profile<T>,
    history: Vec<T>,
    drift: T,
}

/// Minimizes `(u^T K u - lambda u^T Mass u) / H(u)^{2/2*}` from every init and keeps the
/// lowest value. Starts run in parallel; the result does not depend on scheduling.
pub fn minimize_quotient<T: Real>(
    forms: &QuadraticForms<T>,
    lambda: T,
    inits: &[Init<T>],
    params: &MinimizerParams<T>,
) -> Result<MinimizationResult<T>> {
    let Some(h) = forms.hs.as_ref() else {
        return domain("minimizer needs 0 < sigma < 2; use the eigensolver at sigma = 2");
    };
    if inits.is_empty() {
        return domain("at least one init is required");
    }
    if !lambda.is_finite() {
        return domain("lambda must be finite");
    }
    let problem = Problem {
        a: forms.k.combine(T::one(), &forms.mass, -lambda),
        p: forms.k.combine(T::lit(2.0), &forms.mass, T::lit(2.0)),
        h,
        forms,
        lambda,
    };
    let runs = inits.par_iter().map(|init| problem.run(init, params)).collect::<Result<Vec<_>>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.outcome.mu.partial_cmp(&b.outcome.mu).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(j))
        })
        .map(|(i, _)| i)
        .expect("nonempty");
    let starts = runs.iter().map(|r| r.outcome.clone()).collect();
    let win = runs.into_iter().nth(best).expect("index in range");
    Ok(MinimizationResult {
        mu_upper: win.outcome.mu,
        concentration: forms.concentration(&win.profile.values),
        profile: win.profile,
        iterations: win.outcome.iterations,
        grad_norm: win.outcome.grad_norm,
        converged: win.outcome.converged,
        init_tag: win.outcome.tag,
        energy_history: win.history,
        constraint_drift: win.drift,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Dimension;
    use crate::forms::{assemble_forms, build_grid, BoundaryCondition};
    use crate::manifold::{make_manifold, ManifoldKind};

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_cutoff(0.0, 1.0), 1.0);
        assert_eq!(smooth_cutoff(1.0, 1.0), 1.0);
        assert_eq!(smooth_cutoff(2.0, 1.0), 0.0);
        assert_eq!(smooth_cutoff(3.0, 1.0), 0.0);
        assert!((smooth_cutoff(1.5f64, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bubble_init_values() {
        let d = Dimension::new(3).unwrap();
        let m = make_manifold(ManifoldKind::EuclideanBall, 1.0, d, 1.0).unwrap();
        let g = build_grid(1.0, 64, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let f = assemble_forms(&g, &m, 1.0).unwrap();
        let u = bubble_init(&f, 1.0, 0.5).unwrap();
        assert_eq!(u.values[0], 1.0);
        for (v, r) in u.values.iter().zip(&g.nodes) {
            if *r >= 1.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(bubble_init(&f, 1.0, 0.6).is_err());
        assert!(bubble_init(&f, 0.5, 0.5).is_err());
    }

    #[test]
    fn constant_is_optimal_at_zero_lambda() {
        let d = Dimension::new(4).unwrap();
        let m = make_manifold(ManifoldKind::Sphere, 1.0, d, std::f64::consts::PI).unwrap();
        let g = build_grid(std::f64::consts::PI, 128, 2.0, BoundaryCondition::Reflected).unwrap();
        let f = assemble_forms(&g, &m, 1.0).unwrap();
        let inits = vec![Init { tag: InitTag::Constant, profile: f.constant_profile() }];
        let res = minimize_quotient(&f, 0.0, &inits, &MinimizerParams::default()).unwrap();
        assert!(res.mu_upper.abs() < 1e-10, "{}", res.mu_upper);
        assert!(res.mu_upper >= -1e-12);
    }
}
