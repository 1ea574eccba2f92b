use alloc::collections::BTreeMap;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};


/// Real polynomial in `x` and `y`, keyed by `(deg_x, deg_y)`.
///
/// Zero coefficients are never stored, so structural equality is
/// polynomial equality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BivariatePoly {
    coeffs: BTreeMap<(u32, u32), f64>,
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    pub fn monomial(c: f64, deg_x: u32, deg_y: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(deg_x, deg_y, c);
        p
    }

    /// Builds from `(coefficient, deg_x, deg_y)` triples; repeated keys add.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, u32, u32)>,
    {
        let mut p = Self::zero();
        for (c, dx, dy) in terms {
            p.add_term(dx, dy, c);
        }
        p
    }

    fn add_term(&mut self, deg_x: u32, deg_y: u32, c: f64) {
        let key = (deg_x, deg_y);
        let sum = self.coeffs.get(&key).copied().unwrap_or(0.0) + c;
        if sum == 0.0 {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, deg_x: u32, deg_y: u32) -> f64 {
        self.coeffs.get(&(deg_x, deg_y)).copied().unwrap_or(0.0)
    }

    /// Nonzero terms as `((deg_x, deg_y), coefficient)` in key order.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.terms().map(|((dx, dy), c)| (c * s, dx, dy)))
    }

    pub fn d_dx(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|((dx, _), _)| *dx > 0)
                .map(|((dx, dy), c)| (c * dx as f64, dx - 1, dy)),
        )
    }

    pub fn d_dy(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|((_, dy), _)| *dy > 0)
                .map(|((dx, dy), c)| (c * dy as f64, dx, dy - 1)),
        )
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms()
            .map(|((dx, dy), c)| c * crate::math::powi(x, dx) * crate::math::powi(y, dy))
            .sum()
    }
}

impl Add for &BivariatePoly {
    type Output = BivariatePoly;

    fn add(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for ((dx, dy), c) in rhs.terms() {
            out.add_term(dx, dy, c);
        }
        out
    }
}

impl Sub for &BivariatePoly {
    type Output = BivariatePoly;

    fn sub(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for ((dx, dy), c) in rhs.terms() {
            out.add_term(dx, dy, -c);
        }
        out
    }
}

impl Mul for &BivariatePoly {
    type Output = BivariatePoly;

    fn mul(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = BivariatePoly::zero();
        for ((ax, ay), a) in self.terms() {
            for ((bx, by), b) in rhs.terms() {
                out.add_term(ax + bx, ay + by, a * b);
            }
        }
        out
    }
}

impl Neg for &BivariatePoly {
    type Output = BivariatePoly;

    fn neg(self) -> BivariatePoly {
        self.scale(-1.0)
    }
}

impl fmt::Display for BivariatePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        // Highest total degree first reads most naturally.
        let mut terms: alloc::vec::Vec<_> = self.terms().collect();
        terms.sort_by(|a, b| {
            let da = a.0 .0 + a.0 .1;
            let db = b.0 .0 + b.0 .1;
            db.cmp(&da).then(b.0.cmp(&a.0))
        });
        for (i, ((dx, dy), c)) in terms.into_iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c < 0.0 { " - " } else { " + " })?;
            }
            let has_vars = dx > 0 || dy > 0;
            if mag != 1.0 || !has_vars {
                write!(f, "{mag}")?;
                if has_vars {
                    f.write_str("*")?;
                }
            }
            write_power(f, "x", dx)?;
            if dx > 0 && dy > 0 {
                f.write_str("*")?;
            }
            write_power(f, "y", dy)?;
        }
        Ok(())
    }
}

fn write_power(f: &mut fmt::Formatter<'_>, var: &str, deg: u32) -> fmt::Result {
    match deg {
        0 => Ok(()),
        1 => f.write_str(var),
        d => write!(f, "{var}^{d}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = &BivariatePoly::x() - &BivariatePoly::x();
        assert!(p.is_zero());
        assert_eq!(p, BivariatePoly::zero());
        assert_eq!(BivariatePoly::monomial(0.0, 3, 1), BivariatePoly::zero());
    }

    #[test]
    fn product_and_derivatives() {
        // (x + y)^2 = x^2 + 2xy + y^2
        let s = &BivariatePoly::x() + &BivariatePoly::y();
        let sq = &s * &s;
        assert_eq!(sq.coeff(2, 0), 1.0);
        assert_eq!(sq.coeff(1, 1), 2.0);
        assert_eq!(sq.coeff(0, 2), 1.0);
        assert_eq!(sq.d_dx(), s.scale(2.0));
        assert_eq!(sq.d_dy(), s.scale(2.0));
        assert_eq!(sq.eval(1.5, -0.5), 1.0);
    }

    #[test]
    fn display() {
        let p = BivariatePoly::from_terms([(1.0, 2, 0), (-3.0, 1, 1), (2.5, 0, 0)]);
        assert_eq!(format!("{p}"), "x^2 - 3*x*y + 2.5");
        assert_eq!(format!("{}", BivariatePoly::zero()), "0");
        assert_eq!(format!("{}", BivariatePoly::monomial(-1.0, 0, 1)), "-y");
    }
}
