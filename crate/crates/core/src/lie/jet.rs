use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;


use super::field::PolyVectorField;
use super::poly::BivariatePoly;
use super::LieError;

/// A point `(x, y, y_1, ..., y_m)` of jet space.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub x: f64,
    pub y: f64,
    pub derivs: Vec<f64>,
}

impl Jet {
    pub fn new(x: f64, y: f64, derivs: Vec<f64>) -> Self {
        Self { x, y, derivs }
    }

    pub fn order(&self) -> usize {
        self.derivs.len()
    }

    /// Coordinate `i` in the order `x, y, y_1, y_2, ...`.
    fn coord(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            k => self.derivs[k - 2],
        }
    }
}

/// Polynomial on jet space with variables `x, y, y_1, ..., y_m`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct JetPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl JetPoly {
    fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    fn from_bivariate(p: &BivariatePoly, nvars: usize) -> Self {
        let mut out = Self::zero(nvars);
        for ((dx, dy), c) in p.terms() {
            let mut exps = vec![0; nvars];
            exps[0] = dx;
            exps[1] = dy;
            out.add_term(exps, c);
        }
        out
    }

    /// The coordinate function `y_k` (k >= 1).
    fn derivative_var(k: usize, nvars: usize) -> Self {
        let mut out = Self::zero(nvars);
        let mut exps = vec![0; nvars];
        exps[k + 1] = 1;
        out.add_term(exps, 1.0);
        out
    }

    fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        let sum = self.terms.get(&exps).copied().unwrap_or(0.0) + c;
        if sum == 0.0 {
            self.terms.remove(&exps);
        } else {
            self.terms.insert(exps, sum);
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let e = a.iter().zip(b).map(|(i, j)| i + j).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.add_term(d, c * e[var] as f64);
            }
        }
        out
    }

    /// Total derivative `D_x = d/dx + y_1 d/dy + y_2 d/dy_1 + ...`.
    ///
    /// Any term involving the highest variable `y_m` would need `y_{m+1}`;
    /// callers size `nvars` so that never happens.
    fn total_derivative(&self) -> Self {
        let mut out = self.partial(0);
        // variable index j+1 holds y_j (y_0 = y); its derivative is y_{j+1}.
        for j in 0..self.nvars - 2 {
            let dp = self.partial(j + 1);
            if dp.terms.is_empty() {
                continue;
            }
            out = out.add(&dp.mul(&Self::derivative_var(j + 1, self.nvars)));
        }
        out
    }

    pub(crate) fn eval(&self, jet: &Jet) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0)
                    .fold(*c, |acc, (i, p)| acc * crate::math::powi(jet.coord(i), *p))
            })
            .sum()
    }
}

/// Symbolic `eta^(1), ..., eta^(k)` as jet polynomials on `x, y, y_1..y_k`.
pub(crate) fn prolongation(field: &PolyVectorField, k: usize) -> Vec<JetPoly> {
    let nvars = k + 2;
    let xi = JetPoly::from_bivariate(&field.xi, nvars);
    let dxi = xi.total_derivative();
    let mut current = JetPoly::from_bivariate(&field.eta, nvars);
    let mut out = Vec::with_capacity(k);
    for order in 1..=k {
        // eta^(k) = D_x eta^(k-1) - y_k D_x xi
        current = current
            .total_derivative()
            .sub(&JetPoly::derivative_var(order, nvars).mul(&dxi));
        out.push(current.clone());
    }
    out
}

/// Value of the k-th extended infinitesimal of `field` at `jet`.
pub fn extended_infinitesimal(
    field: &PolyVectorField,
    k: usize,
    jet: &Jet,
) -> Result<f64, LieError> {
    if k == 0 {
        return Ok(field.eta.eval(jet.x, jet.y));
    }
    if jet.order() < k {
        return Err(LieError::JetTooShort {
            needed: k,
            have: jet.order(),
        });
    }
    let polys = prolongation(field, k);
    Ok(polys[k - 1].eval(jet))
}
