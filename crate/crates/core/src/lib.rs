//! Numerical laboratory for Hardy and Hardy-Sobolev quotients on rotationally
//! symmetric model manifolds.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bubble;
pub mod constants;
pub mod eigensolver;
pub mod error;
pub mod expansion;
pub mod forms;
pub mod hardy_refined;
pub mod linalg;
pub mod manifold;
pub mod minimizer;
pub mod quadrature;
pub mod scalar;
pub mod thresholds;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic types.
pub mod f64_types {
    pub type ModelManifold = crate::manifold::ModelManifold<f64>;
    pub type QuadraticForms = crate::forms::QuadraticForms<f64>;
    pub type RadialGrid = crate::forms::RadialGrid<f64>;
    pub type LogGrid = crate::forms::LogGrid<f64>;
    pub type Profile = crate::forms::Profile<f64>;
    pub type BubbleMoments = crate::bubble::BubbleMoments<f64>;
    pub type EigenResult = crate::eigensolver::EigenResult<f64>;
    pub type MinimizationResult = crate::minimizer::MinimizationResult<f64>;
    pub type MuCurve = crate::thresholds::MuCurve<f64>;
    pub type LambdaStarBracket = crate::thresholds::LambdaStarBracket<f64>;
    pub type StrictReport = crate::thresholds::StrictReport<f64>;
    pub type ExpansionSeries = crate::expansion::ExpansionSeries<f64>;
    pub type ExpansionFit = crate::expansion::ExpansionFit<f64>;
}

/// Single-precision aliases for the generic types.
pub mod f32_types {
    pub type ModelManifold = crate::manifold::ModelManifold<f32>;
    pub type QuadraticForms = crate::forms::QuadraticForms<f32>;
    pub type Profile = crate::forms::Profile<f32>;
    pub type EigenResult = crate::eigensolver::EigenResult<f32>;
}
