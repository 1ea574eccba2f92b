use alloc::vec;
use alloc::vec::Vec;


use super::field::PolyVectorField;
use super::jet::{prolongation, Jet};
use super::LieError;
use crate::expr::Expression;

/// Tolerance on `|F|` for a supplied jet to count as on the surface.
pub const ON_SURFACE_TOL: f64 = 1e-9;

/// An ODE `F(x, y, y_1, ..., y_m) = 0` solved for its top derivative, with
/// analytic first partials.
pub trait OdeSurface {
    fn order(&self) -> usize;

    /// `y_m` as a function of `(x, y, y_1, ..., y_{m-1})`.
    fn top_derivative(&self, x: f64, y: f64, lower: &[f64]) -> Result<f64, LieError>;

    fn value(&self, jet: &Jet) -> Result<f64, LieError>;

    /// `[F_x, F_y, F_{y_1}, ..., F_{y_m}]`.
    fn gradient(&self, jet: &Jet) -> Result<Vec<f64>, LieError>;
}

/// `y' = F(y/x)` written as `y_1 - F(y/x) = 0`.
#[derive(Debug, Clone)]
pub struct HomogeneousFirstOrder {
    pub f: Expression,
}

impl HomogeneousFirstOrder {
    pub fn new(f: Expression) -> Self {
        Self { f }
    }

    fn ratio(x: f64) -> Result<(), LieError> {
        if x == 0.0 {
            Err(LieError::Singular("x = 0 in y/x"))
        } else {
            Ok(())
        }
    }
}

impl OdeSurface for HomogeneousFirstOrder {
    fn order(&self) -> usize {
        1
    }

    fn top_derivative(&self, x: f64, y: f64, _lower: &[f64]) -> Result<f64, LieError> {
        Self::ratio(x)?;
        Ok(self.f.eval(y / x)?)
    }

    fn value(&self, jet: &Jet) -> Result<f64, LieError> {
        Ok(jet.derivs[0] - self.top_derivative(jet.x, jet.y, &[])?)
    }

    fn gradient(&self, jet: &Jet) -> Result<Vec<f64>, LieError> {
        Self::ratio(jet.x)?;
        let (x, y) = (jet.x, jet.y);
        let (_, slope) = self.f.eval_with_derivative(y / x)?;
        Ok(vec![slope * y / (x * x), -slope / x, 1.0])
    }
}

/// `(x - y) y'' + 2 y' (y' + 1) + (y')^(3/2) = 0`, normalised to
/// `y_2 + (2 y_1 (y_1 + 1) + y_1^(3/2)) / (x - y) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SecondOrderExample;

impl SecondOrderExample {
    fn numerator(y1: f64) -> Result<f64, LieError> {
        if y1 < 0.0 {
            return Err(LieError::Singular("y' < 0 under the 3/2 power"));
        }
        Ok(2.0 * y1 * (y1 + 1.0) + y1 * libm::sqrt(y1))
    }

    fn gap(x: f64, y: f64) -> Result<f64, LieError> {
        let d = x - y;
        if d == 0.0 {
            Err(LieError::Singular("x = y"))
        } else {
            Ok(d)
        }
    }
}

impl OdeSurface for SecondOrderExample {
    fn order(&self) -> usize {
        2
    }

    fn top_derivative(&self, x: f64, y: f64, lower: &[f64]) -> Result<f64, LieError> {
        Ok(-Self::numerator(lower[0])? / Self::gap(x, y)?)
    }

    fn value(&self, jet: &Jet) -> Result<f64, LieError> {
        Ok(jet.derivs[1] + Self::numerator(jet.derivs[0])? / Self::gap(jet.x, jet.y)?)
    }

    fn gradient(&self, jet: &Jet) -> Result<Vec<f64>, LieError> {
        let y1 = jet.derivs[0];
        let n = Self::numerator(y1)?;
        let d = Self::gap(jet.x, jet.y)?;
        if y1 == 0.0 {
            return Err(LieError::Singular("y' = 0 in the derivative of y'^(3/2)"));
        }
        let dn = 4.0 * y1 + 2.0 + 1.5 * libm::sqrt(y1);
        Ok(vec![-n / (d * d), n / (d * d), dn / d, 1.0])
    }
}

/// Maximum of `|X^(m) F|` over the jets, each placed on the surface first.
///
/// Jets of order `m - 1` are completed with the top derivative from the ODE;
/// jets of order `m` must already satisfy `|F| <= 1e-9`.
pub fn symmetry_residual<S: OdeSurface + ?Sized>(
    ode: &S,
    field: &PolyVectorField,
    jets: &[Jet],
) -> Result<f64, LieError> {
    let m = ode.order();
    let etas = prolongation(field, m);
    let mut worst = 0.0_f64;
    for (index, jet) in jets.iter().enumerate() {
        let full = if jet.order() + 1 == m {
            let mut derivs = jet.derivs.clone();
            derivs.push(ode.top_derivative(jet.x, jet.y, &jet.derivs)?);
            Jet::new(jet.x, jet.y, derivs)
        } else if jet.order() >= m {
            let truncated = Jet::new(jet.x, jet.y, jet.derivs[..m].to_vec());
            let f = ode.value(&truncated)?;
            if f.abs() > ON_SURFACE_TOL {
                return Err(LieError::OffSurface { index, residual: f });
            }
            truncated
        } else {
            return Err(LieError::JetTooShort {
                needed: m - 1,
                have: jet.order(),
            });
        };
        let grad = ode.gradient(&full)?;
        let (xi, eta) = field.eval(full.x, full.y);
        let mut value = xi * grad[0] + eta * grad[1];
        for (k, eta_k) in etas.iter().enumerate() {
            value += eta_k.eval(&full) * grad[k + 2];
        }
        worst = worst.max(value.abs());
    }
    Ok(worst)
}
