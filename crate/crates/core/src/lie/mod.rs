//! Infinitesimal generators with polynomial coefficients.
//!
//! Brackets and prolongations are computed on exact polynomial
//! representations; only admission checks against an ODE are numeric.

mod field;
mod jet;
mod poly;
mod surface;

pub use field::{
    decompose, solvable_2d_order, span_coefficients, PolyVectorField, SolvablePair,
};
pub use jet::{extended_infinitesimal, Jet};
pub use poly::BivariatePoly;
pub use surface::{
    symmetry_residual, HomogeneousFirstOrder, OdeSurface, SecondOrderExample, ON_SURFACE_TOL,
};

use crate::expr::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("vector fields are linearly dependent")]
    DependentFields,
    #[error("bracket lies outside the span of the pair")]
    NotClosed,
    #[error("jet carries {have} derivatives, {needed} required")]
    JetTooShort { needed: usize, have: usize },
    #[error("jet {index} is off the ODE surface (|F| = {residual:e})")]
    OffSurface { index: usize, residual: f64 },
    #[error("singular point: {0}")]
    Singular(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `x d/dx + y d/dy`, the scaling generator of `y' = F(y/x)`.
pub fn scaling_generator() -> PolyVectorField {
    PolyVectorField::new(BivariatePoly::x(), BivariatePoly::y())
}

/// The three generators admitted by the built-in second order ODE:
/// `x^2 d/dx + y^2 d/dy`, `x d/dx + y d/dy`, `d/dx + d/dy`.
pub fn second_order_generators() -> [PolyVectorField; 3] {
    [
        PolyVectorField::new(
            BivariatePoly::monomial(1.0, 2, 0),
            BivariatePoly::monomial(1.0, 0, 2),
        ),
        scaling_generator(),
        PolyVectorField::new(BivariatePoly::constant(1.0), BivariatePoly::constant(1.0)),
    ]
}
