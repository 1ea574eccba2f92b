//! Hat-function prior over the normalised curve `zeta` on `[r_lo, r_hi]`.
//!
//! Indices are zero-based: knot `j` is `t_j = r_lo + j h`, `j < N`.

use alloc::vec::Vec;

use crate::charts::{CanonicalChart, ChartError};

/// Tolerance used when checking that a reconstructed coefficient vector
/// lies in the closed order cone.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PriorError {
    #[error("basis needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot range [{lo}, {hi}] is empty")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("coefficient vector has length {got}, basis has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficients violate 0 <= z_1 <= ... <= z_N <= 1 at index {index}")]
    Infeasible { index: usize },
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Equally spaced hat functions `phi_j(r) = max(0, 1 - |r - t_j| / h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatBasis {
    lo: f64,
    h: f64,
    n: usize,
}

impl HatBasis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, PriorError> {
        if n < 2 {
            return Err(PriorError::TooFewKnots(n));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(PriorError::EmptyRange { lo, hi });
        }
        Ok(Self {
            lo,
            h: (hi - lo) / (n - 1) as f64,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn knot(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.h
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.knot(j)).collect()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.knot(self.n - 1)
    }

    pub fn phi(&self, j: usize, r: f64) -> f64 {
        let d = libm::fabs(r - self.knot(j)) / self.h;
        if d < 1.0 {
            1.0 - d
        } else {
            0.0
        }
    }

    /// Right derivative of `phi_j`. Inside `[lo, hi]` the interval is picked
    /// once from `r`, so neighbouring hats always agree; at `hi` this is the
    /// slope of the last interval.
    pub fn phi_prime(&self, j: usize, r: f64) -> f64 {
        if let Some(i) = self.interval(r) {
            return if j == i {
                -1.0 / self.h
            } else if j == i + 1 {
                1.0 / self.h
            } else {
                0.0
            };
        }
        let t = self.knot(j);
        if r >= t - self.h && r < t {
            1.0 / self.h
        } else if r >= t && r < t + self.h {
            -1.0 / self.h
        } else {
            0.0
        }
    }

    /// Index `i` of the interval `[t_i, t_{i+1})` holding `r`, with `hi`
    /// assigned to the last one.
    fn interval(&self, r: f64) -> Option<usize> {
        if !(r >= self.lo && r <= self.hi()) {
            return None;
        }
        let u = libm::floor((r - self.lo) / self.h);
        Some((u.max(0.0) as usize).min(self.n - 2))
    }

    /// Indices of hats that can be nonzero (or have nonzero right
    /// derivative) at `r`.
    fn support(&self, r: f64) -> core::ops::Range<usize> {
        let u = libm::floor((r - self.lo) / self.h);
        if !(u > -3.0) {
            return 0..0;
        }
        if u > self.n as f64 + 2.0 {
            return self.n..self.n;
        }
        let i = u as i64;
        let start = (i - 1).max(0) as usize;
        let end = ((i + 3).max(0) as usize).min(self.n);
        start.min(end)..end
    }

    fn check_len(&self, z: &[f64]) -> Result<(), PriorError> {
        if z.len() != self.n {
            return Err(PriorError::LengthMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn zeta(&self, z: &[f64], r: f64) -> Result<f64, PriorError> {
        self.check_len(z)?;
        Ok(self.support(r).map(|j| z[j] * self.phi(j, r)).sum())
    }

    pub fn zeta_prime(&self, z: &[f64], r: f64) -> Result<f64, PriorError> {
        self.check_len(z)?;
        Ok(self.support(r).map(|j| z[j] * self.phi_prime(j, r)).sum())
    }
}

/// Membership in `Z = {0 < z_1 <= z_2 <= ... <= z_N <= 1}`.
pub fn is_feasible(z: &[f64]) -> bool {
    match (z.first(), z.last()) {
        (Some(&first), Some(&last)) => {
            first > 0.0 && last <= 1.0 && z.windows(2).all(|w| w[0] <= w[1])
        }
        _ => false,
    }
}

/// Membership in the closure of `Z`, allowing violations up to `tol`.
/// Returns the first offending index on failure.
pub fn check_closed_feasible(z: &[f64], tol: f64) -> Result<(), PriorError> {
    if z.is_empty() {
        return Err(PriorError::Infeasible { index: 0 });
    }
    if z[0] < -tol {
        return Err(PriorError::Infeasible { index: 0 });
    }
    if let Some(i) = z.windows(2).position(|w| w[1] - w[0] < -tol) {
        return Err(PriorError::Infeasible { index: i + 1 });
    }
    if z[z.len() - 1] > 1.0 + tol {
        return Err(PriorError::Infeasible { index: z.len() - 1 });
    }
    Ok(())
}

/// The transformed-solution curve `s(r) = s_lo(r) + width * zeta(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCurve<'a> {
    chart: CanonicalChart,
    basis: HatBasis,
    z: &'a [f64],
}

impl TransformedCurve<'_> {
    pub fn zeta(&self, r: f64) -> f64 {
        self.basis.support(r).map(|j| self.z[j] * self.basis.phi(j, r)).sum()
    }

    pub fn s(&self, r: f64) -> f64 {
        self.chart.s_lo(r) + self.chart.width() * self.zeta(r)
    }

    /// Right derivative `ds/dr`.
    pub fn ds_dr(&self, r: f64) -> f64 {
        let zp: f64 = self
            .basis
            .support(r)
            .map(|j| self.z[j] * self.basis.phi_prime(j, r))
            .sum();
        self.chart.s_lo_slope(r) + self.chart.width() * zp
    }

    /// The point `(x, y)` on the pushed-forward curve.
    pub fn xy(&self, r: f64) -> Result<(f64, f64), ChartError> {
        self.chart.inverse(r, self.s(r))
    }
}

/// Builds `s(r)` from coefficients in the (closed) constraint set.
pub fn s_from_zeta<'a>(
    chart: &CanonicalChart,
    basis: &HatBasis,
    z: &'a [f64],
) -> Result<TransformedCurve<'a>, PriorError> {
    basis.check_len(z)?;
    check_closed_feasible(z, FEASIBILITY_TOL)?;
    Ok(TransformedCurve {
        chart: *chart,
        basis: *basis,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit3() -> HatBasis {
        // knots 0, 0.5, 1
        HatBasis::new(0.0, 1.0, 3).unwrap()
    }

    #[test]
    fn hat_values_and_slopes() {
        let b = unit3();
        let h = b.spacing();
        for j in 0..3 {
            let t = b.knot(j);
            assert_eq!(b.phi(j, t), 1.0);
            assert_eq!(b.phi(j, t + h), 0.0);
            assert_eq!(b.phi(j, t - h), 0.0);
            assert_eq!(b.phi_prime(j, t - h / 2.0), 1.0 / h);
            assert_eq!(b.phi_prime(j, t + h / 2.0), -1.0 / h);
        }
        // right derivative at the apex and the left edge, left at the end
        assert_eq!(b.phi_prime(1, 0.5), -2.0);
        assert_eq!(b.phi_prime(1, 0.0), 2.0);
        assert_eq!(b.phi_prime(1, 1.0), -2.0);
        assert_eq!(b.phi_prime(2, 1.0), 2.0);
    }

    #[test]
    fn zeta_examples() {
        let b = unit3();
        let z = [0.2, 0.4, 0.6];
        assert_eq!(b.zeta(&z, 0.5).unwrap(), 0.4);
        assert!(libm::fabs(b.zeta(&z, 0.25).unwrap() - 0.3) < 1e-15);
        assert!(libm::fabs(b.zeta_prime(&z, 0.25).unwrap() - 0.2 / 0.5) < 1e-15);
        let c = [0.7; 3];
        for r in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!(libm::fabs(b.zeta(&c, r).unwrap() - 0.7) < 1e-15);
        }
        assert_eq!(b.zeta_prime(&c, 0.3).unwrap(), 0.0);
        assert_eq!(
            b.zeta(&[0.1, 0.2], 0.5),
            Err(PriorError::LengthMismatch {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn feasibility_examples() {
        assert!(is_feasible(&[0.1, 0.1, 0.9]));
        assert!(!is_feasible(&[0.0, 0.5, 1.0]));
        assert!(!is_feasible(&[0.3, 0.2, 0.9]));
        assert!(!is_feasible(&[0.3, 0.4, 1.1]));
        assert!(!is_feasible(&[]));
        assert!(check_closed_feasible(&[0.0, 0.5, 1.0], 0.0).is_ok());
        assert_eq!(
            check_closed_feasible(&[0.3, 0.2, 0.9], 1e-9),
            Err(PriorError::Infeasible { index: 1 })
        );
    }

    #[test]
    fn envelope_curves() {
        let b = HatBasis::new(1.0, 2.0, 5).unwrap();
        let chart = CanonicalChart::first_order(1.0, 5.0).unwrap();
        let zeros = [0.0; 5];
        let ones = [1.0; 5];
        let lo = s_from_zeta(&chart, &b, &zeros).unwrap();
        let hi = s_from_zeta(&chart, &b, &ones).unwrap();
        for r in [1.0, 1.3, 2.0] {
            assert!(libm::fabs(lo.s(r) - libm::log(r)) < 1e-15);
            assert!(libm::fabs(hi.s(r) - chart.s_hi(r)) < 1e-15);
        }
        let chart = CanonicalChart::second_order(5.0, 10.0).unwrap();
        let b = HatBasis::new(-0.3, -0.2, 5).unwrap();
        let hi = s_from_zeta(&chart, &b, &ones).unwrap();
        assert!(libm::fabs(hi.s(-0.25) - (-0.1 + 0.25)) < 1e-15);
        assert!(s_from_zeta(&chart, &b, &[0.5, 0.4, 0.6, 0.7, 0.8]).is_err());
    }
}
