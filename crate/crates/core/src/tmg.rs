//! Exact Hamiltonian Monte Carlo for a standard Gaussian restricted to
//! `{x : F x + g >= 0}`.
//!
//! Under the Hamiltonian `(|x|^2 + |v|^2) / 2` trajectories are
//! `x(t) = v sin t + x cos t`, so wall hits solve `A cos(t - phi) = -g`
//! in closed form.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Default travel time per step.
pub const DEFAULT_TRAVEL_TIME: f64 = FRAC_PI_2;
/// Default number of discarded initial steps.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Hits closer than this to the current time are ignored.
pub const HIT_SKIP: f64 = 1e-12;
/// Bounce budget for a single step.
pub const MAX_BOUNCES: usize = 10_000;
/// Minimum slack of a point returned by [`find_feasible`].
pub const MIN_START_SLACK: f64 = 1e-8;

/// Start points may sit this far outside a wall (rounding after a bounce).
pub const START_TOL: f64 = 1e-9;

const BOX_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TmgError {
    #[error("F has {rows} rows but g has {len} entries")]
    Shape { rows: usize, len: usize },
    #[error("polytope has no interior; tightest constraint {index} (slack {slack:e})")]
    Infeasible { index: usize, slack: f64 },
    #[error("start point violates constraint {index} (slack {slack:e})")]
    NotFeasible { index: usize, slack: f64 },
    #[error("trajectory bounced more than {MAX_BOUNCES} times")]
    CornerTrap,
    #[error("travel time must be positive and finite, got {0}")]
    TravelTime(f64),
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Standard Gaussian in `rho` dimensions restricted to `F x + g >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGaussianProblem {
    f: DMatrix<f64>,
    g: DVector<f64>,
    row_norm_sq: Vec<f64>,
}

impl TruncatedGaussianProblem {
    pub fn new(f: DMatrix<f64>, g: DVector<f64>) -> Result<Self, TmgError> {
        if f.nrows() != g.len() {
            return Err(TmgError::Shape {
                rows: f.nrows(),
                len: g.len(),
            });
        }
        let row_norm_sq = f.row_iter().map(|r| r.norm_squared()).collect();
        Ok(Self { f, g, row_norm_sq })
    }

    pub fn dim(&self) -> usize {
        self.f.ncols()
    }

    pub fn constraints(&self) -> usize {
        self.f.nrows()
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.f * x + &self.g
    }

    /// Smallest slack and the constraint attaining it.
    pub fn min_slack(&self, x: &DVector<f64>) -> Option<(usize, f64)> {
        let s = self.slack(x);
        s.iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// A strictly interior point, from a log-barrier solve of
/// `max t  s.t.  F x + g >= t,  t <= 1,  |x_j| <= R`.
pub fn find_feasible(problem: &TruncatedGaussianProblem) -> Result<DVector<f64>, TmgError> {
    let d = problem.dim();
    let k = problem.constraints();
    let mut x = DVector::zeros(d);
    if k == 0 {
        return Ok(x);
    }
    let slack0 = problem.slack(&x);
    let mut t = slack0.min().min(0.0) - 1.0;

    let f = &problem.f;
    let r2 = BOX_RADIUS * BOX_RADIUS;
    // Barrier objective, to be minimised; infinite outside the domain.
    let objective = |x: &DVector<f64>, t: f64, mu: f64| -> f64 {
        if t >= 1.0 || x.iter().any(|v| libm::fabs(*v) >= BOX_RADIUS) {
            return f64::INFINITY;
        }
        let s = problem.slack(x);
        let mut acc = libm::log(1.0 - t);
        for v in s.iter() {
            let d = v - t;
            if d <= 0.0 {
                return f64::INFINITY;
            }
            acc += libm::log(d);
        }
        for v in x.iter() {
            acc += libm::log(r2 - v * v);
        }
        -t - mu * acc
    };

    let mut mu = 1.0;
    while mu >= 1e-10 {
        for _ in 0..100 {
            let s = problem.slack(&x);
            let inv: Vec<f64> = s.iter().map(|v| 1.0 / (v - t)).collect();
            // gradient and Hessian in (x, t)
            let mut grad = DVector::<f64>::zeros(d + 1);
            let mut hess = DMatrix::<f64>::zeros(d + 1, d + 1);
            for (i, &w) in inv.iter().enumerate() {
                let row = f.row(i);
                for a in 0..d {
                    grad[a] -= mu * w * row[a];
                    for b in 0..=a {
                        hess[(a, b)] += mu * w * w * row[a] * row[b];
                    }
                    hess[(d, a)] -= mu * w * w * row[a];
                }
                grad[d] += mu * w;
                hess[(d, d)] += mu * w * w;
            }
            grad[d] += -1.0 + mu / (1.0 - t);
            hess[(d, d)] += mu / ((1.0 - t) * (1.0 - t));
            for a in 0..d {
                let q = r2 - x[a] * x[a];
                grad[a] += mu * 2.0 * x[a] / q;
                hess[(a, a)] += mu * 2.0 * (r2 + x[a] * x[a]) / (q * q);
            }
            for a in 0..=d {
                for b in 0..a {
                    hess[(b, a)] = hess[(a, b)];
                }
            }
            let Some(chol) = hess.cholesky() else {
                break;
            };
            let step = -chol.solve(&grad);
            let decrement = -grad.dot(&step);
            if decrement < 1e-14 {
                break;
            }
            let f0 = objective(&x, t, mu);
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let xn = &x + step.rows(0, d) * alpha;
                let tn = t + step[d] * alpha;
                if objective(&xn, tn, mu) <= f0 - 0.25 * alpha * decrement {
                    x = xn;
                    t = tn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        mu *= 0.1;
    }

    let (index, slack) = problem.min_slack(&x).expect("at least one constraint");
    if slack <= MIN_START_SLACK {
        return Err(TmgError::Infeasible { index, slack });
    }
    Ok(x)
}

/// Outcome of one trajectory, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub bounces: usize,
    /// Largest `| |x|^2 + |v|^2 - E_0 |` observed at any bounce.
    pub max_energy_drift: f64,
    /// Smallest slack seen at bounce points and at the end.
    pub min_slack: f64,
}

/// Runs the exact dynamics from `(x, v)` for `travel_time`.
pub fn evolve(
    problem: &TruncatedGaussianProblem,
    x: &DVector<f64>,
    v: &DVector<f64>,
    travel_time: f64,
) -> Result<StepReport, TmgError> {
    if !(travel_time > 0.0 && travel_time.is_finite()) {
        return Err(TmgError::TravelTime(travel_time));
    }
    if let Some((index, slack)) = problem.min_slack(x) {
        if slack < -START_TOL {
            return Err(TmgError::NotFeasible { index, slack });
        }
    }
    let mut x = x.clone();
    let mut v = v.clone();
    let energy0 = x.norm_squared() + v.norm_squared();
    let mut drift = 0.0_f64;
    let mut min_slack = f64::INFINITY;
    let mut remaining = travel_time;
    let mut bounces = 0;
    loop {
        let fx = &problem.f * &x;
        let fv = &problem.f * &v;
        let mut hit: Option<(f64, usize)> = None;
        for i in 0..problem.constraints() {
            let (a, b, g) = (fv[i], fx[i], problem.g[i]);
            // Already on or past the wall and moving outward: reflect now.
            let t = if b + g <= 0.0 && a < 0.0 {
                0.0
            } else {
                let amp = libm::hypot(a, b);
                if amp <= libm::fabs(g) || amp == 0.0 {
                    continue;
                }
                let phase = libm::atan2(a, b);
                let mut t = phase + libm::acos(-g / amp);
                t = libm::fmod(t, 2.0 * PI);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                if t < HIT_SKIP {
                    continue;
                }
                t
            };
            if t <= remaining && hit.is_none_or(|(best, _)| t < best) {
                hit = Some((t, i));
            }
        }
        let Some((t, i)) = hit else {
            let (s, c) = (libm::sin(remaining), libm::cos(remaining));
            let xn = &v * s + &x * c;
            let vn = &v * c - &x * s;
            if let Some((_, m)) = problem.min_slack(&xn) {
                min_slack = min_slack.min(m);
            }
            return Ok(StepReport {
                position: xn,
                velocity: vn,
                bounces,
                max_energy_drift: drift,
                min_slack,
            });
        };
        bounces += 1;
        if bounces > MAX_BOUNCES {
            return Err(TmgError::CornerTrap);
        }
        let (s, c) = (libm::sin(t), libm::cos(t));
        let xn = &v * s + &x * c;
        let mut vn = &v * c - &x * s;
        let row = problem.f.row(i);
        let coef = 2.0 * row.dot(&vn.transpose()) / problem.row_norm_sq[i];
        vn -= row.transpose() * coef;
        x = xn;
        v = vn;
        remaining -= t;
        drift = drift.max(libm::fabs(x.norm_squared() + v.norm_squared() - energy0));
        min_slack = min_slack.min(row.dot(&x.transpose()) + problem.g[i]);
    }
}

/// One HMC transition: fresh Gaussian velocity, then exact dynamics.
pub fn hmc_step<R: Rng + ?Sized>(
    problem: &TruncatedGaussianProblem,
    position: &DVector<f64>,
    travel_time: f64,
    rng: &mut R,
) -> Result<DVector<f64>, TmgError> {
    let v = DVector::from_fn(problem.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(evolve(problem, position, &v, travel_time)?.position)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub count: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent stream of the seeded generator; one per chain.
    pub stream: u64,
    pub travel_time: f64,
}

impl SamplerConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            burn_in: DEFAULT_BURN_IN,
            seed,
            stream: 0,
            travel_time: DEFAULT_TRAVEL_TIME,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<DVector<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub burn_in: usize,
    pub travel_time: f64,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample(problem: &TruncatedGaussianProblem, config: &SamplerConfig) -> Result<Chain, TmgError> {
    if config.count == 0 {
        return Err(TmgError::NoSamples);
    }
    if !(config.travel_time > 0.0 && config.travel_time.is_finite()) {
        return Err(TmgError::TravelTime(config.travel_time));
    }
    let mut rng = rng_for(config.seed, config.stream);
    let mut x = find_feasible(problem)?;
    for _ in 0..config.burn_in {
        x = hmc_step(problem, &x, config.travel_time, &mut rng)?;
    }
    let mut samples = Vec::with_capacity(config.count);
    for _ in 0..config.count {
        x = hmc_step(problem, &x, config.travel_time, &mut rng)?;
        samples.push(x.clone());
    }
    Ok(Chain {
        samples,
        seed: config.seed,
        stream: config.stream,
        burn_in: config.burn_in,
        travel_time: config.travel_time,
    })
}
