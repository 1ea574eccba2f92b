use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use super::poly::BivariatePoly;
use super::LieError;

/// Infinitesimal generator `xi(x,y) d/dx + eta(x,y) d/dy` with polynomial
/// coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyVectorField {
    pub xi: BivariatePoly,
    pub eta: BivariatePoly,
}

impl PolyVectorField {
    pub fn new(xi: BivariatePoly, eta: BivariatePoly) -> Self {
        Self { xi, eta }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.xi.is_zero() && self.eta.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.xi + &other.xi, &self.eta + &other.eta)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.xi - &other.xi, &self.eta - &other.eta)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xi.scale(s), self.eta.scale(s))
    }

    /// `X p = xi * dp/dx + eta * dp/dy`.
    pub fn apply(&self, p: &BivariatePoly) -> BivariatePoly {
        &(&self.xi * &p.d_dx()) + &(&self.eta * &p.d_dy())
    }

    /// Lie bracket `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self::new(
            &self.apply(&other.xi) - &other.apply(&self.xi),
            &self.apply(&other.eta) - &other.apply(&self.eta),
        )
    }

    /// Coefficient pairs `(xi, eta)` evaluated at a point.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        (self.xi.eval(x, y), self.eta.eval(x, y))
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.xi.is_zero(), self.eta.is_zero()) {
            (true, true) => f.write_str("0"),
            (false, true) => write!(f, "({}) ∂x", self.xi),
            (true, false) => write!(f, "({}) ∂y", self.eta),
            (false, false) => write!(f, "({}) ∂x + ({}) ∂y", self.xi, self.eta),
        }
    }
}

/// Writes `target` as a linear combination of `basis`.
///
/// Returns `Ok(None)` when `target` is outside the span, and an error when
/// the basis fields are linearly dependent.
pub fn decompose(
    target: &PolyVectorField,
    basis: &[PolyVectorField],
) -> Result<Option<Vec<f64>>, LieError> {
    let mut keys: BTreeSet<(u8, (u32, u32))> = BTreeSet::new();
    for field in basis.iter().chain(core::iter::once(target)) {
        keys.extend(field.xi.terms().map(|(k, _)| (0u8, k)));
        keys.extend(field.eta.terms().map(|(k, _)| (1u8, k)));
    }
    let coeff = |field: &PolyVectorField, (comp, (dx, dy)): (u8, (u32, u32))| {
        if comp == 0 {
            field.xi.coeff(dx, dy)
        } else {
            field.eta.coeff(dx, dy)
        }
    };
    let keys: Vec<_> = keys.into_iter().collect();
    let k = basis.len();
    if k == 0 {
        return Ok(if target.is_zero() { Some(Vec::new()) } else { None });
    }
    // Augmented rows [basis coefficients | target coefficient].
    let mut rows: Vec<Vec<f64>> = keys
        .iter()
        .map(|&key| {
            let mut row: Vec<f64> = basis.iter().map(|f| coeff(f, key)).collect();
            row.push(coeff(target, key));
            row
        })
        .collect();
    let scale = rows
        .iter()
        .flat_map(|r| r[..k].iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(LieError::DependentFields);
    }
    // Row reduction with partial pivoting; integer data stays exact.
    for col in 0..k {
        let pivot = (col..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
            .filter(|&p| rows[p][col].abs() > 1e-12 * scale)
            .ok_or(LieError::DependentFields)?;
        rows.swap(col, pivot);
        for r in 0..rows.len() {
            if r == col || rows[r][col] == 0.0 {
                continue;
            }
            let factor = rows[r][col] / rows[col][col];
            for c in col..=k {
                let delta = factor * rows[col][c];
                rows[r][c] -= delta;
            }
            rows[r][col] = 0.0;
        }
    }
    let solution: Vec<f64> = (0..k).map(|i| rows[i][k] / rows[i][i]).collect();
    let target_scale = rows.iter().fold(1.0_f64, |m, r| m.max(r[k].abs()));
    let consistent = rows[k..].iter().all(|r| r[k].abs() <= 1e-12 * target_scale);
    Ok(consistent.then_some(solution))
}

/// Solves `w = a v1 + b v2` coefficient-wise.
pub fn span_coefficients(
    w: &PolyVectorField,
    v1: &PolyVectorField,
    v2: &PolyVectorField,
) -> Result<Option<(f64, f64)>, LieError> {
    Ok(decompose(w, &[v1.clone(), v2.clone()])?.map(|c| (c[0], c[1])))
}

/// A two-dimensional algebra written as `(A, B)` with `[A, B] = lambda A`,
/// so that `A` spans the one-dimensional ideal.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvablePair {
    pub normal: PolyVectorField,
    pub other: PolyVectorField,
    pub lambda: f64,
}

pub fn solvable_2d_order(
    v1: &PolyVectorField,
    v2: &PolyVectorField,
) -> Result<SolvablePair, LieError> {
    let bracket = v1.commutator(v2);
    let Some((a, b)) = span_coefficients(&bracket, v1, v2)? else {
        return Err(LieError::NotClosed);
    };
    // [v1, v2] = a v1 + b v2.
    let pair = if bracket.is_zero() || (a == 0.0 && b == 0.0) {
        SolvablePair {
            normal: v1.clone(),
            other: v2.clone(),
            lambda: 0.0,
        }
    } else if b == 0.0 {
        SolvablePair {
            normal: v1.clone(),
            other: v2.clone(),
            lambda: a,
        }
    } else if a == 0.0 {
        // [v2, v1] = -b v2
        SolvablePair {
            normal: v2.clone(),
            other: v1.clone(),
            lambda: -b,
        }
    } else {
        // [a v1 + b v2, v2] = a [v1, v2]
        SolvablePair {
            normal: bracket,
            other: v2.clone(),
            lambda: a,
        }
    };
    Ok(pair)
}
