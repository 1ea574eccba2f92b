//! Canonical coordinates and reduced right-hand sides for the two
//! supported ODE families.
//!
//! Both charts are written so that the solution curve lives in an envelope
//! `s_lo(r) + width * zeta(r)` with `zeta` in `[0, 1]`, and the
//! monotonicity requirement becomes `zeta' >= 0`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expression};
use crate::lie::{scaling_generator, second_order_generators, PolyVectorField};

/// Absolute tolerance on denominators of reduced right-hand sides.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("outside chart domain: {0}")]
    Domain(&'static str),
    #[error("invalid chart range: {0}")]
    Range(&'static str),
    #[error("invalid initial data: {0}")]
    InitialData(&'static str),
    #[error("reduction is singular at r = {r} (invariant solution curve)")]
    SingularReduction { r: f64 },
    #[error("no real slope at r = {r}: K = {k} < 2")]
    NoRealSolution { r: f64, k: f64 },
    #[error("reduced slope blows up at r = {r}")]
    BlowUp { r: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("design point {index} (r = {r}): {inner}")]
    Design {
        index: usize,
        r: f64,
        inner: Box<ChartError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// `r = y/x`, `s = log y`.
    Ratio,
    /// `r = 1/y - 1/x`, `s = -1/y`.
    Reciprocal,
}

/// A canonical chart together with the envelope encoding `x in [x0, xT]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalChart {
    kind: ChartKind,
    x0: f64,
    x_t: f64,
}

impl CanonicalChart {
    /// Chart for `y' = F(y/x)` on `x in [x0, xT]`, `0 < x0 < xT`.
    pub fn first_order(x0: f64, x_t: f64) -> Result<Self, ChartError> {
        if !(x0 > 0.0 && x_t > x0 && x_t.is_finite()) {
            return Err(ChartError::Range("need 0 < x0 < xT"));
        }
        Ok(Self {
            kind: ChartKind::Ratio,
            x0,
            x_t,
        })
    }

    /// Chart for the built-in second order example; `[x0, xT]` must not
    /// contain 0.
    pub fn second_order(x0: f64, x_t: f64) -> Result<Self, ChartError> {
        if !(x_t > x0 && x0.is_finite() && x_t.is_finite()) || (x0 <= 0.0 && x_t >= 0.0) {
            return Err(ChartError::Range("need x0 < xT with 0 outside [x0, xT]"));
        }
        Ok(Self {
            kind: ChartKind::Reciprocal,
            x0,
            x_t,
        })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_t(&self) -> f64 {
        self.x_t
    }

    /// The generator this chart straightens out (`X r = 0`, `X s = 1`).
    pub fn generator(&self) -> PolyVectorField {
        match self.kind {
            ChartKind::Ratio => scaling_generator(),
            ChartKind::Reciprocal => second_order_generators()[0].clone(),
        }
    }

    pub fn forward(&self, x: f64, y: f64) -> Result<(f64, f64), ChartError> {
        match self.kind {
            ChartKind::Ratio => {
                if y <= 0.0 {
                    return Err(ChartError::Domain("y must be positive"));
                }
                let r = y / x;
                if !(r > 0.0) || !r.is_finite() {
                    return Err(ChartError::Domain("r = y/x must be positive"));
                }
                Ok((r, libm::log(y)))
            }
            ChartKind::Reciprocal => {
                if x == 0.0 || y == 0.0 {
                    return Err(ChartError::Domain("x and y must be nonzero"));
                }
                Ok((1.0 / y - 1.0 / x, -1.0 / y))
            }
        }
    }

    pub fn inverse(&self, r: f64, s: f64) -> Result<(f64, f64), ChartError> {
        match self.kind {
            ChartKind::Ratio => {
                if !(r > 0.0) {
                    return Err(ChartError::Domain("r must be positive"));
                }
                let y = libm::exp(s);
                Ok((y / r, y))
            }
            ChartKind::Reciprocal => {
                if s == 0.0 {
                    return Err(ChartError::Domain("s = 0"));
                }
                if s + r == 0.0 {
                    return Err(ChartError::Domain("s + r = 0"));
                }
                Ok((-1.0 / (s + r), -1.0 / s))
            }
        }
    }

    /// `[[r_x, r_y], [s_x, s_y]]`.
    pub fn jacobian(&self, x: f64, y: f64) -> Result<[[f64; 2]; 2], ChartError> {
        self.forward(x, y)?;
        Ok(match self.kind {
            ChartKind::Ratio => [[-y / (x * x), 1.0 / x], [0.0, 1.0 / y]],
            ChartKind::Reciprocal => [[1.0 / (x * x), -1.0 / (y * y)], [0.0, 1.0 / (y * y)]],
        })
    }

    /// Lower envelope: the image of `x = x0`.
    pub fn s_lo(&self, r: f64) -> f64 {
        match self.kind {
            ChartKind::Ratio => libm::log(r) + libm::log(self.x0),
            ChartKind::Reciprocal => -1.0 / self.x0 - r,
        }
    }

    /// Upper envelope: the image of `x = xT`.
    pub fn s_hi(&self, r: f64) -> f64 {
        self.s_lo(r) + self.width()
    }

    /// `s_hi - s_lo`, constant in `r` for both charts.
    pub fn width(&self) -> f64 {
        match self.kind {
            ChartKind::Ratio => libm::log(self.x_t / self.x0),
            ChartKind::Reciprocal => 1.0 / self.x0 - 1.0 / self.x_t,
        }
    }

    /// `d s_lo / dr`. A curve with `ds/dr` above this has `x` increasing
    /// along it.
    pub fn s_lo_slope(&self, r: f64) -> f64 {
        match self.kind {
            ChartKind::Ratio => 1.0 / r,
            ChartKind::Reciprocal => -1.0,
        }
    }

    /// Required sign of `dx/dr`.
    pub fn monotone_sign(&self) -> f64 {
        1.0
    }
}

/// Sign in front of `y_1^{3/2}` in the reduced second order equation,
/// fixed by the sign of `x/y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Integration constant of the first reduction of the second order
/// example, in the form `|v| = e^{-C} (2p + branch + 2/p)` with
/// `v = 1/y - 1/x`, `p = sqrt(y_1 x^2 / y^2)`.
///
/// `sigma` is the sign of `v` at the initial point; `log |v|` is used so
/// negative `v` is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderConstant {
    pub c: f64,
    pub branch: Branch,
    pub sigma: f64,
}

impl SecondOrderConstant {
    pub fn exp_neg_c(&self) -> f64 {
        libm::exp(-self.c)
    }

    /// Residual of `log|v| - log(2p + branch + 2/p) + C` at a jet.
    pub fn residual(&self, x: f64, y: f64, y1: f64) -> f64 {
        let v = 1.0 / y - 1.0 / x;
        let p = libm::sqrt(y1 * x * x / (y * y));
        libm::log(libm::fabs(v)) - libm::log(2.0 * p + self.branch.sign() + 2.0 / p) + self.c
    }
}

pub fn integration_constant_second_order(
    x0: f64,
    y0: f64,
    y0_prime: f64,
) -> Result<SecondOrderConstant, ChartError> {
    if x0 == 0.0 || y0 == 0.0 {
        return Err(ChartError::InitialData("x0 and y0 must be nonzero"));
    }
    let w0 = y0_prime * x0 * x0 / (y0 * y0);
    if !(w0 > 0.0) {
        return Err(ChartError::InitialData("w0 = y0' (x0/y0)^2 must be positive"));
    }
    let v0 = 1.0 / y0 - 1.0 / x0;
    if v0 == 0.0 {
        return Err(ChartError::InitialData("v0 = 1/y0 - 1/x0 is zero"));
    }
    let branch = if x0 / y0 >= 0.0 {
        Branch::Plus
    } else {
        Branch::Minus
    };
    let p0 = libm::sqrt(w0);
    let rhs = 2.0 * p0 + branch.sign() + 2.0 / p0;
    let c = libm::log(rhs) - libm::log(libm::fabs(v0));
    Ok(SecondOrderConstant {
        c,
        branch,
        sigma: if v0 > 0.0 { 1.0 } else { -1.0 },
    })
}

/// The reduced right-hand side `G` of `ds/dr = G(r)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedIntegrand {
    FirstOrder(Expression),
    SecondOrder(SecondOrderConstant),
}

pub fn reduced_rhs_first_order(f: Expression) -> ReducedIntegrand {
    ReducedIntegrand::FirstOrder(f)
}

pub fn reduced_rhs_second_order(constant: SecondOrderConstant) -> ReducedIntegrand {
    ReducedIntegrand::SecondOrder(constant)
}

/// Root `u > 0` of `sqrt(u/(1+u)) + sqrt((1+u)/u) = k`.
pub fn slope_from_k(r: f64, k: f64) -> Result<f64, ChartError> {
    if !(k >= 2.0) {
        return Err(ChartError::NoRealSolution { r, k });
    }
    if k - 2.0 < SINGULAR_TOL {
        return Err(ChartError::BlowUp { r });
    }
    let p = (k - libm::sqrt(k * k - 4.0)) / 2.0;
    let q = 1.0 - p * p;
    if q < SINGULAR_TOL {
        return Err(ChartError::BlowUp { r });
    }
    Ok(p * p / q)
}

impl ReducedIntegrand {
    pub fn eval(&self, r: f64) -> Result<f64, ChartError> {
        match self {
            ReducedIntegrand::FirstOrder(f) => {
                let fr = f.eval(r)?;
                let denom = -r * r + r * fr;
                if !(libm::fabs(denom) >= SINGULAR_TOL) {
                    return Err(ChartError::SingularReduction { r });
                }
                Ok(fr / denom)
            }
            ReducedIntegrand::SecondOrder(c) => {
                let e = c.exp_neg_c();
                let k = (c.sigma * r - c.branch.sign() * e) / (2.0 * e);
                slope_from_k(r, k)
            }
        }
    }

    /// Values of `G` at each design point; errors carry the offending index.
    pub fn information(&self, design: &[f64]) -> Result<Vec<f64>, ChartError> {
        design
            .iter()
            .enumerate()
            .map(|(index, &r)| {
                self.eval(r).map_err(|e| ChartError::Design {
                    index,
                    r,
                    inner: Box::new(e),
                })
            })
            .collect()
    }
}

pub fn information_first_order(f: &Expression, design: &[f64]) -> Result<Vec<f64>, ChartError> {
    ReducedIntegrand::FirstOrder(f.clone()).information(design)
}

pub fn information_second_order(
    constant: SecondOrderConstant,
    design: &[f64],
) -> Result<Vec<f64>, ChartError> {
    ReducedIntegrand::SecondOrder(constant).information(design)
}

/// One of the two supported problems with its initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeFamily {
    /// `y' = F(y/x)`, `y(x0) = y0`.
    FirstOrderHomogeneous {
        f: Expression,
        x0: f64,
        x_t: f64,
        y0: f64,
    },
    /// `y'' + (2 y'(y'+1) + y'^{3/2}) / (x - y) = 0`, `y(x0) = y0`,
    /// `y'(x0) = y0_prime`.
    SecondOrderExample {
        x0: f64,
        x_t: f64,
        y0: f64,
        y0_prime: f64,
    },
}

impl OdeFamily {
    pub fn chart(&self) -> Result<CanonicalChart, ChartError> {
        match *self {
            OdeFamily::FirstOrderHomogeneous { x0, x_t, .. } => {
                CanonicalChart::first_order(x0, x_t)
            }
            OdeFamily::SecondOrderExample { x0, x_t, .. } => CanonicalChart::second_order(x0, x_t),
        }
    }

    pub fn generators(&self) -> Vec<PolyVectorField> {
        match self {
            OdeFamily::FirstOrderHomogeneous { .. } => alloc::vec![scaling_generator()],
            OdeFamily::SecondOrderExample { .. } => second_order_generators().to_vec(),
        }
    }

    pub fn x0(&self) -> f64 {
        match *self {
            OdeFamily::FirstOrderHomogeneous { x0, .. } | OdeFamily::SecondOrderExample { x0, .. } => {
                x0
            }
        }
    }

    pub fn x_t(&self) -> f64 {
        match *self {
            OdeFamily::FirstOrderHomogeneous { x_t, .. }
            | OdeFamily::SecondOrderExample { x_t, .. } => x_t,
        }
    }

    /// Canonical coordinate of the initial point.
    pub fn r0(&self) -> Result<f64, ChartError> {
        match *self {
            OdeFamily::FirstOrderHomogeneous { x0, y0, .. }
            | OdeFamily::SecondOrderExample { x0, y0, .. } => Ok(self.chart()?.forward(x0, y0)?.0),
        }
    }

    pub fn integrand(&self) -> Result<ReducedIntegrand, ChartError> {
        match self {
            OdeFamily::FirstOrderHomogeneous { f, .. } => Ok(reduced_rhs_first_order(f.clone())),
            OdeFamily::SecondOrderExample {
                x0, y0, y0_prime, ..
            } => Ok(reduced_rhs_second_order(
                integration_constant_second_order(*x0, *y0, *y0_prime)?,
            )),
        }
    }

    /// Converts `G(r)` into the slope `zeta'(r)` of the normalised curve.
    pub fn zeta_slope(&self, r: f64, g: f64) -> Result<f64, ChartError> {
        let chart = self.chart()?;
        Ok((g - chart.s_lo_slope(r)) / chart.width())
    }
}
