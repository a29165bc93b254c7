//! Rotationally symmetric space forms described by their warp function.

use crate::constants::Dimension;
use crate::error::{domain, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    EuclideanBall,
    Sphere,
    /// Geodesic ball in hyperbolic space, a negative-curvature probe with Dirichlet data.
    HyperbolicCap,
}

impl std::str::FromStr for ManifoldKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "euclidean-ball" | "ball" => Ok(ManifoldKind::EuclideanBall),
            "sphere" => Ok(ManifoldKind::Sphere),
            "hyperbolic" | "hyperbolic-cap" => Ok(ManifoldKind::HyperbolicCap),
            other => domain(format!("unknown manifold kind {other:?}")),
        }
    }
}

impl std::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ManifoldKind::EuclideanBall => "euclidean-ball",
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::HyperbolicCap => "hyperbolic-cap",
        })
    }
}

/// Metric `dr^2 + psi(r)^2 dtheta^2` on the geodesic ball of radius `r_max` about the pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelManifold<T> {
    pub kind: ManifoldKind,
    pub scale: T,
    pub dim: Dimension,
    pub r_max: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureData<T> {
    pub scalar_at_pole: T,
    pub ricci_radial_coeff: T,
}

pub fn make_manifold<T: Real>(kind: ManifoldKind, a: T, n: Dimension, r_max: T) -> Result<ModelManifold<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return domain(format!("curvature radius must be positive, got {a}"));
    }
    if !(r_max > T::zero()) || !r_max.is_finite() {
        return domain(format!("domain radius must be positive, got {r_max}"));
    }
    if kind == ManifoldKind::Sphere && r_max > T::PI() * a * (T::one() + T::epsilon() * T::lit(4.0)) {
        return domain(format!("sphere radius {r_max} exceeds the antipodal distance"));
    }
    Ok(ModelManifold { kind, scale: a, dim: n, r_max })
}

// sin(x)/x and sinh(x)/x, series near 0
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

fn sinhc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() + x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sinh() / x
    }
}

impl<T: Real> ModelManifold<T> {
    /// Full sphere from pole to antipode.
    pub fn is_closed(&self) -> bool {
        self.kind == ManifoldKind::Sphere && self.r_max >= T::PI() * self.scale * (T::one() - T::lit(1e-12))
    }

    /// `psi(r)`.
    pub fn warp(&self, r: T) -> T {
        r * self.warp_ratio(r)
    }

    /// `psi(r) / r`, equal to 1 at the pole.
    pub fn warp_ratio(&self, r: T) -> T {
        let x = r / self.scale;
        match self.kind {
            ManifoldKind::EuclideanBall => T::one(),
            ManifoldKind::Sphere => sinc(x),
            ManifoldKind::HyperbolicCap => sinhc(x),
        }
    }

    /// `psi'(r) / psi(r)`; `(N-1)` times this is the mean curvature of the geodesic sphere.
    pub fn log_warp_derivative(&self, r: T) -> T {
        let x = r / self.scale;
        match self.kind {
            ManifoldKind::EuclideanBall => r.recip(),
            ManifoldKind::Sphere => x.cos() / x.sin() / self.scale,
            ManifoldKind::HyperbolicCap => x.cosh() / x.sinh() / self.scale,
        }
    }

    fn check_radius(&self, r: T) -> Result<()> {
        if !(r >= T::zero()) || r > self.r_max * (T::one() + T::epsilon() * T::lit(4.0)) {
            return domain(format!("radius {r} outside [0, {}]", self.r_max));
        }
        Ok(())
    }

    /// Radial volume density `psi(r)^{N-1}`; the measure of a radial integrand is
    /// `|S^{N-1}| psi^{N-1} dr`.
    pub fn volume_density(&self, r: T) -> Result<T> {
        self.check_radius(r)?;
        Ok(self.warp(r).abs().powi(self.dim.get() as i32 - 1))
    }

    /// Density of the volume in normal coordinates, `(psi(r)/r)^{N-1}`.
    pub fn normal_density(&self, r: T) -> Result<T> {
        self.check_radius(r)?;
        Ok(self.warp_ratio(r).abs().powi(self.dim.get() as i32 - 1))
    }

    pub fn curvature(&self) -> CurvatureData<T> {
        let nn: T = self.dim.as_real();
        let k = (nn - T::one()) / (self.scale * self.scale);
        let ricci = match self.kind {
            ManifoldKind::EuclideanBall => T::zero(),
            ManifoldKind::Sphere => k,
            ManifoldKind::HyperbolicCap => -k,
        };
        CurvatureData { scalar_at_pole: nn * ricci, ricci_radial_coeff: ricci }
    }
}

pub fn scalar_curvature_at_pole<T: Real>(m: &ModelManifold<T>) -> T {
    m.curvature().scalar_at_pole
}

/// Least-squares fit of `1 - sqrt|g|(r) = c r^2 + d r^4` on `(0, 0.1]`, returning
/// `|c - S_g / (6N)|`.
pub fn density_expansion_residual<T: Real>(m: &ModelManifold<T>) -> T {
    let (c, _) = fit_density_coefficients(m);
    let target = scalar_curvature_at_pole(m) / (T::lit(6.0) * m.dim.as_real::<T>());
    (c - target).abs()
}

/// Fitted `(c, d)` of the normal-coordinate density expansion.
pub fn fit_density_coefficients<T: Real>(m: &ModelManifold<T>) -> (T, T) {
    let top = T::lit(0.1).min(m.r_max);
    let samples = 64;
    let (mut s22, mut s24, mut s44, mut b2, mut b4) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for i in 1..=samples {
        let r = top * T::of(i) / T::of(samples);
        let y = T::one() - m.normal_density(r).unwrap();
        let p2 = r * r;
        let p4 = p2 * p2;
        s22 += p2 * p2;
        s24 += p2 * p4;
        s44 += p4 * p4;
        b2 += p2 * y;
        b4 += p4 * y;
    }
    let det = s22 * s44 - s24 * s24;
    let c = (b2 * s44 - b4 * s24) / det;
    let d = (s22 * b4 - s24 * b2) / det;
    (c, d)
}

/// Outcome of the comparison `S_g(p0) > -6 lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriterionCheck {
    pub holds: bool,
    /// The strict-inequality theorem concerns `lambda < 0` only.
    pub in_regime: bool,
}

pub fn curvature_criterion<T: Real>(m: &ModelManifold<T>, lambda: T) -> CriterionCheck {
    CriterionCheck { holds: scalar_curvature_at_pole(m) > -T::lit(6.0) * lambda, in_regime: lambda < T::zero() }
}
