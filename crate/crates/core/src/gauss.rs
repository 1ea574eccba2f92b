//! Exact conditioning of the standard Gaussian prior on the coefficients
//! and the whitened form of the order-cone constraints.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::prior::HatBasis;

/// Design points closer than this to a knot are rejected.
pub const KNOT_TOL: f64 = 1e-9;
/// Largest accepted condition number of `Phi Phi^T`.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative eigenvalue cutoff for the rank of `Sigma`.
pub const EIGEN_TOL: f64 = 1e-10;
/// Constraint rows with norm below this (relative) are treated as constant.
pub const DEGENERATE_ROW_TOL: f64 = 1e-10;
/// A constant row must have `g >= -SLACK_TOL` to be satisfiable.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("{design} design points but {data} data values")]
    LengthMismatch { design: usize, data: usize },
    #[error("design point {index} (r = {r}) sits on a knot")]
    KnotCollision { index: usize, r: f64 },
    #[error("design point {index} (r = {r}) is outside the knot span [{lo}, {hi}]")]
    OutsideSpan { index: usize, r: f64, lo: f64, hi: f64 },
    #[error("information matrix has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("Phi Phi^T is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("posterior covariance has rank {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("constraint {index} is violated by the data (slack {slack:e})")]
    InfeasibleData { index: usize, slack: f64 },
}

/// The linear information `Phi z = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearData {
    pub phi: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Builds the initial-condition row at `r0` followed by one derivative row
/// per design point.
pub fn assemble(
    basis: &HatBasis,
    r0: f64,
    b0: f64,
    design: &[f64],
    data: &[f64],
) -> Result<LinearData, GaussError> {
    if design.len() != data.len() {
        return Err(GaussError::LengthMismatch {
            design: design.len(),
            data: data.len(),
        });
    }
    let (lo, hi) = (basis.lo(), basis.hi());
    for (index, &r) in design.iter().enumerate() {
        if !(r >= lo && r <= hi) {
            return Err(GaussError::OutsideSpan { index, r, lo, hi });
        }
        let u = (r - lo) / basis.spacing();
        let nearest = (libm::round(u) as usize).min(basis.len() - 1);
        if libm::fabs(r - basis.knot(nearest)) < KNOT_TOL {
            return Err(GaussError::KnotCollision { index, r });
        }
    }
    let n = basis.len();
    let rows = design.len() + 1;
    let phi = DMatrix::from_fn(rows, n, |i, j| {
        if i == 0 {
            basis.phi(j, r0)
        } else {
            basis.phi_prime(j, design[i - 1])
        }
    });
    let b = DVector::from_fn(rows, |i, _| if i == 0 { b0 } else { data[i - 1] });

    let sv = phi.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > EIGEN_TOL * smax).count();
    if rank < rows {
        return Err(GaussError::RankDeficient { rank, rows });
    }
    Ok(LinearData { phi, b })
}

/// Mean and covariance of `N(0, I)` conditioned on `Phi z = b`.
pub fn condition(data: &LinearData) -> Result<(DVector<f64>, DMatrix<f64>), GaussError> {
    let phi = &data.phi;
    let gram = phi * phi.transpose();
    let eig = gram.clone().symmetric_eigen();
    let (emin, emax) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let cond = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(GaussError::IllConditioned { cond });
    }
    let chol = gram
        .cholesky()
        .ok_or(GaussError::IllConditioned { cond })?;
    let mu = phi.transpose() * chol.solve(&data.b);
    let n = phi.ncols();
    let mut sigma = DMatrix::identity(n, n) - phi.transpose() * chol.solve(phi);
    // Symmetrise away rounding so the eigensolver sees an exact
    // symmetric input.
    let st = sigma.transpose();
    sigma = (sigma + st) * 0.5;
    Ok((mu, sigma))
}

/// `Sigma = U Lambda^2 U^T` restricted to the nonzero spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub u: DMatrix<f64>,
    /// Diagonal of `Lambda` (square roots of the kept eigenvalues),
    /// in decreasing order.
    pub lambda: DVector<f64>,
    pub rho: usize,
}

/// Eigen-reduces a PSD covariance. If `expected_rank` is given a different
/// numerical rank is an error.
pub fn reduce(sigma: &DMatrix<f64>, expected_rank: Option<usize>) -> Result<Reduction, GaussError> {
    let n = sigma.nrows();
    let eig = sigma.clone().symmetric_eigen();
    let emax = eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut keep: Vec<usize> = (0..n)
        .filter(|&i| emax > 0.0 && eig.eigenvalues[i] > EIGEN_TOL * emax)
        .collect();
    keep.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let rho = keep.len();
    if let Some(expected) = expected_rank {
        if expected != rho {
            return Err(GaussError::RankMismatch {
                expected,
                found: rho,
            });
        }
    }
    let mut u = DMatrix::zeros(n, rho);
    for (col, &i) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        // Fix the sign so the largest entry is positive.
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |acc, (k, x)| if libm::fabs(*x) > acc.1 { (k, libm::fabs(*x)) } else { acc });
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        u.set_column(col, &(v * sign));
    }
    let lambda = DVector::from_iterator(rho, keep.iter().map(|&i| libm::sqrt(eig.eigenvalues[i])));
    Ok(Reduction { u, lambda, rho })
}

/// `z = mu + M z~` with the order-cone constraints written as
/// `F z~ + g >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedPolytope {
    pub mu: DVector<f64>,
    pub m: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
    pub rho: usize,
}

pub fn whiten(mu: &DVector<f64>, reduction: &Reduction) -> WhitenedPolytope {
    let n = mu.len();
    let rho = reduction.rho;
    let m = &reduction.u * DMatrix::from_diagonal(&reduction.lambda);
    let mut f = DMatrix::zeros(n + 1, rho);
    let mut g = DVector::zeros(n + 1);
    f.set_row(0, &m.row(0));
    g[0] = mu[0];
    for i in 1..n {
        f.set_row(i, &(m.row(i) - m.row(i - 1)));
        g[i] = mu[i] - mu[i - 1];
    }
    f.set_row(n, &(-m.row(n - 1)));
    g[n] = 1.0 - mu[n - 1];
    WhitenedPolytope { mu: mu.clone(), m, f, g, rho }
}

impl WhitenedPolytope {
    pub fn reconstruct(&self, zt: &DVector<f64>) -> DVector<f64> {
        &self.mu + &self.m * zt
    }

    pub fn slack(&self, zt: &DVector<f64>) -> DVector<f64> {
        &self.f * zt + &self.g
    }

    /// Splits off rows of `F` that vanish numerically. Those rows are
    /// constant in `z~`, so they are either satisfied everywhere (dropped)
    /// or nowhere (an error naming the row).
    pub fn active_constraints(&self) -> Result<(DMatrix<f64>, DVector<f64>), GaussError> {
        let norms: Vec<f64> = self.f.row_iter().map(|r| r.norm()).collect();
        let scale = norms.iter().fold(0.0_f64, |m, &v| m.max(v));
        let mut keep = Vec::new();
        for (i, &nrm) in norms.iter().enumerate() {
            if scale > 0.0 && nrm > DEGENERATE_ROW_TOL * scale {
                keep.push(i);
            } else if self.g[i] < -SLACK_TOL {
                return Err(GaussError::InfeasibleData {
                    index: i,
                    slack: self.g[i],
                });
            }
        }
        let f = DMatrix::from_fn(keep.len(), self.rho, |i, j| self.f[(keep[i], j)]);
        let g = DVector::from_fn(keep.len(), |i, _| self.g[keep[i]]);
        Ok((f, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        libm::fabs(a - b) < 1e-12
    }

    #[test]
    fn assemble_single_design_point() {
        let basis = HatBasis::new(0.0, 1.0, 3).unwrap();
        let d = assemble(&basis, 0.0, 0.0, &[0.25], &[0.7]).unwrap();
        assert_eq!(d.phi.shape(), (2, 3));
        assert_eq!(d.phi.row(0).iter().copied().collect::<Vec<_>>(), [1.0, 0.0, 0.0]);
        assert_eq!(d.phi.row(1).iter().copied().collect::<Vec<_>>(), [-2.0, 2.0, 0.0]);
        assert_eq!(d.b.as_slice(), &[0.0, 0.7]);

        let d = assemble(&basis, 0.0, 0.0, &[], &[]).unwrap();
        assert_eq!(d.phi.shape(), (1, 3));
    }

    #[test]
    fn assemble_errors() {
        let basis = HatBasis::new(0.0, 1.0, 3).unwrap();
        assert_eq!(
            assemble(&basis, 0.0, 0.0, &[0.25, 0.25], &[1.0, 1.0]),
            Err(GaussError::RankDeficient { rank: 2, rows: 3 })
        );
        assert!(matches!(
            assemble(&basis, 0.0, 0.0, &[0.5], &[1.0]),
            Err(GaussError::KnotCollision { index: 0, .. })
        ));
        assert!(matches!(
            assemble(&basis, 0.0, 0.0, &[0.3, 1.5], &[1.0, 1.0]),
            Err(GaussError::OutsideSpan { index: 1, .. })
        ));
    }

    #[test]
    fn condition_examples() {
        let data = LinearData {
            phi: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            b: DVector::from_vec(alloc::vec![2.0]),
        };
        let (mu, sigma) = condition(&data).unwrap();
        assert!(close(mu[0], 1.0) && close(mu[1], 1.0));
        assert!(close(sigma[(0, 0)], 0.5) && close(sigma[(0, 1)], -0.5));
        assert!(close(sigma[(1, 0)], -0.5) && close(sigma[(1, 1)], 0.5));

        let red = reduce(&sigma, Some(1)).unwrap();
        assert!(close(red.lambda[0], 1.0));
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert!(close(libm::fabs(red.u[(0, 0)]), s) && close(red.u[(0, 0)], -red.u[(1, 0)]));

        let full = LinearData {
            phi: DMatrix::identity(3, 3),
            b: DVector::from_vec(alloc::vec![0.1, 0.2, 0.3]),
        };
        let (mu, sigma) = condition(&full).unwrap();
        assert_eq!(mu.as_slice(), &[0.1, 0.2, 0.3]);
        assert!(sigma.iter().all(|&v| v == 0.0));
        assert_eq!(reduce(&sigma, Some(0)).unwrap().rho, 0);
        assert_eq!(
            reduce(&sigma, Some(1)),
            Err(GaussError::RankMismatch { expected: 1, found: 0 })
        );

        let eye = DMatrix::<f64>::identity(4, 4);
        let red = reduce(&eye, Some(4)).unwrap();
        assert!((red.u.transpose() * &red.u - &eye).abs().max() < 1e-14);
    }

    #[test]
    fn ill_conditioned_gram_is_rejected() {
        let data = LinearData {
            phi: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-7]),
            b: DVector::zeros(2),
        };
        assert!(matches!(condition(&data), Err(GaussError::IllConditioned { .. })));
    }

    #[test]
    fn whiten_block_pattern() {
        let mu = DVector::from_vec(alloc::vec![1.0, 1.0]);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let red = Reduction {
            u: DMatrix::from_column_slice(2, 1, &[s, -s]),
            lambda: DVector::from_vec(alloc::vec![1.0]),
            rho: 1,
        };
        let w = whiten(&mu, &red);
        let expected_f = [s, -2.0 * s, s];
        for (a, b) in w.f.iter().zip(expected_f) {
            assert!(close(*a, b));
        }
        assert_eq!(w.g.as_slice(), &[1.0, 0.0, 0.0]);

        let red0 = Reduction {
            u: DMatrix::zeros(2, 0),
            lambda: DVector::zeros(0),
            rho: 0,
        };
        let w = whiten(&DVector::from_vec(alloc::vec![0.2, 0.5]), &red0);
        assert_eq!(w.f.shape(), (3, 0));
        assert_eq!(w.g.as_slice(), &[0.2, 0.3, 0.5]);
    }

    #[test]
    fn constant_rows_are_dropped_or_rejected() {
        let w = WhitenedPolytope {
            mu: DVector::zeros(2),
            m: DMatrix::zeros(2, 1),
            f: DMatrix::from_column_slice(3, 1, &[1e-18, 1.0, -1.0]),
            g: DVector::from_vec(alloc::vec![0.0, 0.5, 0.5]),
            rho: 1,
        };
        let (f, g) = w.active_constraints().unwrap();
        assert_eq!(f.as_slice(), &[1.0, -1.0]);
        assert_eq!(g.as_slice(), &[0.5, 0.5]);
        let bad = WhitenedPolytope {
            g: DVector::from_vec(alloc::vec![-0.1, 0.5, 0.5]),
            ..w
        };
        assert!(matches!(
            bad.active_constraints(),
            Err(GaussError::InfeasibleData { index: 0, .. })
        ));
    }
}
