//! End-to-end solver: information, conditioning, sampling and the
//! push-forward of posterior curves back to `(x, y)`. Also reference
//! solutions used to judge the output.

use alloc::vec::Vec;
use core::fmt;

use crate::charts::{CanonicalChart, ChartError, OdeFamily};
use crate::gauss::{self, GaussError};
use crate::prior::{s_from_zeta, HatBasis, PriorError};
use crate::tmg::{self, SamplerConfig, TmgError, TruncatedGaussianProblem};

/// Distance below which a design point counts as sitting on a knot.
pub const COLLISION_TOL: f64 = 1e-9;
/// Default number of output grid points.
pub const DEFAULT_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub family: OdeFamily,
    /// Number of design points.
    pub n: usize,
    /// Number of hat functions.
    pub basis_size: usize,
    /// Right end of the knot span; the left end is the initial `r`.
    pub r_max: f64,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub travel_time: f64,
    pub grid_points: usize,
}

impl SolveConfig {
    /// Defaults: `N = 2n`, 200 samples, burn-in 1000, seed 0, travel time
    /// `pi/2`, 200 grid points.
    pub fn new(family: OdeFamily, n: usize, r_max: f64) -> Self {
        Self {
            family,
            n,
            basis_size: 2 * n,
            r_max,
            samples: 200,
            burn_in: tmg::DEFAULT_BURN_IN,
            seed: 0,
            travel_time: tmg::DEFAULT_TRAVEL_TIME,
            grid_points: DEFAULT_GRID,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::NoDesign);
        }
        if self.basis_size < self.n + 2 {
            return Err(ConfigError::RankLaw {
                n: self.n,
                basis_size: self.basis_size,
            });
        }
        if self.samples == 0 {
            return Err(ConfigError::NoSamples);
        }
        if !(self.travel_time > 0.0 && self.travel_time.is_finite()) {
            return Err(ConfigError::TravelTime(self.travel_time));
        }
        if self.grid_points < 2 {
            return Err(ConfigError::Grid(self.grid_points));
        }
        if !self.r_max.is_finite() {
            return Err(ConfigError::Range {
                r0: f64::NAN,
                r_max: self.r_max,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("need at least one design point")]
    NoDesign,
    #[error("rank law needs N >= n + 2, got n = {n}, N = {basis_size}")]
    RankLaw { n: usize, basis_size: usize },
    #[error("need at least one sample")]
    NoSamples,
    #[error("travel time must be positive, got {0}")]
    TravelTime(f64),
    #[error("output grid needs at least 2 points, got {0}")]
    Grid(usize),
    #[error("r_max = {r_max} must exceed the initial r = {r0}")]
    Range { r0: f64, r_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Reduction,
    Information,
    Prior,
    Conditioning,
    Sampling,
    PushForward,
    Reference,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Reduction => "reduction",
            Stage::Information => "information",
            Stage::Prior => "prior",
            Stage::Conditioning => "conditioning",
            Stage::Sampling => "sampling",
            Stage::PushForward => "push-forward",
            Stage::Reference => "reference",
            Stage::Metrics => "metrics",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Chart { stage: Stage, source: ChartError },
    #[error("prior: {0}")]
    Prior(#[from] PriorError),
    #[error("conditioning: {0}")]
    Gauss(#[from] GaussError),
    #[error("sampling: {0}")]
    Tmg(#[from] TmgError),
    #[error("reference: {0}")]
    Reference(&'static str),
    #[error("metrics: {0}")]
    Metrics(&'static str),
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Chart { stage, .. } => *stage,
            PipelineError::Prior(_) => Stage::Prior,
            PipelineError::Gauss(_) => Stage::Conditioning,
            PipelineError::Tmg(_) => Stage::Sampling,
            PipelineError::Reference(_) => Stage::Reference,
            PipelineError::Metrics(_) => Stage::Metrics,
        }
    }
}

fn at(stage: Stage) -> impl Fn(ChartError) -> PipelineError {
    move |source| PipelineError::Chart { stage, source }
}

/// `n` equally spaced points in `(r0, r_max]`, each moved to the midpoint
/// of the interval below it if it lands on a knot.
pub fn design_points(
    r0: f64,
    r_max: f64,
    n: usize,
    basis: &HatBasis,
) -> Result<Vec<f64>, PipelineError> {
    if n == 0 {
        return Err(ConfigError::NoDesign.into());
    }
    if !(r_max > r0) {
        return Err(ConfigError::Range { r0, r_max }.into());
    }
    let h = basis.spacing();
    Ok((1..=n)
        .map(|i| {
            let r = if i == n {
                r_max
            } else {
                r0 + (r_max - r0) * i as f64 / n as f64
            };
            let j = libm::round((r - basis.lo()) / h);
            let j = (j.max(0.0) as usize).min(basis.len() - 1);
            if libm::fabs(r - basis.knot(j)) < COLLISION_TOL {
                let below = if j == 0 { 0 } else { j - 1 };
                basis.knot(below) + h / 2.0
            } else {
                r
            }
        })
        .collect())
}

/// Posterior samples of the solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEnsemble {
    /// Output `r` grid.
    pub grid: Vec<f64>,
    /// `s(r)` on the grid, one row per sample.
    pub rs_curves: Vec<Vec<f64>>,
    /// `(x, y)` on the grid, one row per sample.
    pub xy_curves: Vec<Vec<(f64, f64)>>,
    /// Hat coefficients `z`, one row per sample.
    pub coefficients: Vec<Vec<f64>>,
    pub basis: HatBasis,
    pub chart: CanonicalChart,
    pub design: Vec<f64>,
    /// Conditioned slopes `zeta'(r_i)`.
    pub slopes: Vec<f64>,
    pub config: SolveConfig,
}

impl PosteriorEnsemble {
    pub fn len(&self) -> usize {
        self.rs_curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rs_curves.is_empty()
    }

    /// Number of curves with some `zeta = (s - s_lo)/width` outside
    /// `[-tol, 1 + tol]`.
    pub fn envelope_violations(&self, tol: f64) -> usize {
        let w = self.chart.width();
        self.rs_curves
            .iter()
            .filter(|curve| {
                curve.iter().zip(&self.grid).any(|(&s, &r)| {
                    let zeta = (s - self.chart.s_lo(r)) / w;
                    !(zeta >= -tol && zeta <= 1.0 + tol)
                })
            })
            .count()
    }

    /// Number of curves whose `x` is not strictly increasing along the grid.
    pub fn non_monotone_curves(&self) -> usize {
        self.xy_curves
            .iter()
            .filter(|c| c.windows(2).any(|w| !(w[1].0 > w[0].0)))
            .count()
    }

    /// Largest `|zeta'(r_i) - b_i|` over samples and design points.
    pub fn max_interpolation_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for z in &self.coefficients {
            for (&r, &b) in self.design.iter().zip(&self.slopes) {
                let zp = self.basis.zeta_prime(z, r).unwrap_or(f64::NAN);
                let e = libm::fabs(zp - b);
                worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
            }
        }
        worst
    }
}

/// Runs the whole pipeline.
pub fn solve(config: &SolveConfig) -> Result<PosteriorEnsemble, PipelineError> {
    config.validate()?;
    let family = &config.family;
    let chart = family.chart().map_err(at(Stage::Config))?;
    let r0 = family.r0().map_err(at(Stage::Config))?;
    if !(config.r_max > r0) {
        return Err(ConfigError::Range {
            r0,
            r_max: config.r_max,
        }
        .into());
    }
    let integrand = family.integrand().map_err(at(Stage::Reduction))?;

    let basis = HatBasis::new(r0, config.r_max, config.basis_size)?;
    let design = design_points(r0, config.r_max, config.n, &basis)?;
    let g = integrand
        .information(&design)
        .map_err(at(Stage::Information))?;
    let slopes = design
        .iter()
        .zip(&g)
        .map(|(&r, &gv)| family.zeta_slope(r, gv))
        .collect::<Result<Vec<_>, _>>()
        .map_err(at(Stage::Information))?;

    let data = gauss::assemble(&basis, r0, 0.0, &design, &slopes)?;
    let (mu, sigma) = gauss::condition(&data)?;
    let reduction = gauss::reduce(&sigma, Some(config.basis_size - config.n - 1))?;
    let poly = gauss::whiten(&mu, &reduction);
    let (f, gvec) = poly.active_constraints()?;
    let problem = TruncatedGaussianProblem::new(f, gvec)?;
    let chain = tmg::sample(
        &problem,
        &SamplerConfig {
            count: config.samples,
            burn_in: config.burn_in,
            seed: config.seed,
            stream: 0,
            travel_time: config.travel_time,
        },
    )?;

    let m = config.grid_points;
    let grid: Vec<f64> = (0..m)
        .map(|k| {
            if k == m - 1 {
                config.r_max
            } else {
                r0 + (config.r_max - r0) * k as f64 / (m - 1) as f64
            }
        })
        .collect();
    let mut rs_curves = Vec::with_capacity(chain.samples.len());
    let mut xy_curves = Vec::with_capacity(chain.samples.len());
    let mut coefficients = Vec::with_capacity(chain.samples.len());
    for zt in &chain.samples {
        let z: Vec<f64> = poly.reconstruct(zt).iter().copied().collect();
        let curve = s_from_zeta(&chart, &basis, &z)?;
        let mut rs = Vec::with_capacity(m);
        let mut xy = Vec::with_capacity(m);
        for &r in &grid {
            rs.push(curve.s(r));
            xy.push(curve.xy(r).map_err(at(Stage::PushForward))?);
        }
        rs_curves.push(rs);
        xy_curves.push(xy);
        coefficients.push(z);
    }
    Ok(PosteriorEnsemble {
        grid,
        rs_curves,
        xy_curves,
        coefficients,
        basis,
        chart,
        design,
        slopes,
        config: config.clone(),
    })
}

/// Exact solution of `y' = y/x + x/y`, `y(1) = 1`: `x sqrt(1 + 2 ln x)`.
pub fn reference_first_order(x: f64) -> Result<f64, PipelineError> {
    let rad = 1.0 + 2.0 * libm::log(x);
    if !(x > 0.0 && rad >= 0.0) {
        return Err(PipelineError::Reference("x below exp(-1/2)"));
    }
    Ok(x * libm::sqrt(rad))
}

/// Right-hand side of the second order example as a first order system.
fn second_order_rhs(x: f64, state: [f64; 2]) -> Option<[f64; 2]> {
    let [y, p] = state;
    if !(p >= 0.0) || x == y {
        return None;
    }
    let acc = -(2.0 * p * (p + 1.0) + p * libm::sqrt(p)) / (x - y);
    Some([p, acc])
}

/// Dormand-Prince 5(4) with dense stops at every grid point.
/// Returns `(x, y)` at each requested `x >= x0`, which must be sorted.
pub fn reference_second_order(
    x0: f64,
    y0: f64,
    y0_prime: f64,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64)>, PipelineError> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    const MAX_STEPS: usize = 10_000_000;

    if !(tol > 0.0) {
        return Err(PipelineError::Reference("tolerance must be positive"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.first().is_some_and(|&g| g < x0) {
        return Err(PipelineError::Reference("grid must be sorted and start at or after x0"));
    }
    let fail = || PipelineError::Reference("integrator left the domain of the ODE");
    let mut x = x0;
    let mut state = [y0, y0_prime];
    let mut h: f64 = 1e-3;
    let mut out = Vec::with_capacity(grid.len());
    let mut steps = 0;
    for &target in grid {
        while x < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(PipelineError::Reference("step budget exhausted"));
            }
            let step = h.min(target - x);
            let mut k = [[0.0; 2]; 7];
            k[0] = second_order_rhs(x, state).ok_or_else(fail)?;
            let mut ok = true;
            for s in 1..7 {
                let mut st = state;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for d in 0..2 {
                        st[d] += step * A[s - 1][j] * kj[d];
                    }
                }
                match second_order_rhs(x + C[s] * step, st) {
                    Some(v) => k[s] = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                h = step * 0.25;
                if h < 1e-14 {
                    return Err(fail());
                }
                continue;
            }
            let mut hi = state;
            let mut lo = state;
            for (s, ks) in k.iter().enumerate() {
                for d in 0..2 {
                    hi[d] += step * B5[s] * ks[d];
                    lo[d] += step * B4[s] * ks[d];
                }
            }
            let mut err = 0.0;
            for d in 0..2 {
                let sc = tol + tol * libm::fabs(state[d]).max(libm::fabs(hi[d]));
                let e = (hi[d] - lo[d]) / sc;
                err += e * e;
            }
            let err = libm::sqrt(err / 2.0);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                let clipped = step == target - x && step < h;
                x = if step == target - x { target } else { x + step };
                state = hi;
                // A grid-clipped step must not shrink the next one.
                h = if clipped { h.max(step * factor) } else { step * factor };
            } else {
                h = step * factor;
            }
        }
        out.push((target, state[0]));
    }
    Ok(out)
}

/// `points` equally spaced `x` values covered by every curve.
pub fn common_x_grid(curves: &[Vec<(f64, f64)>], points: usize) -> Result<Vec<f64>, PipelineError> {
    if curves.is_empty() || curves.iter().any(|c| c.is_empty()) {
        return Err(PipelineError::Metrics("empty ensemble"));
    }
    if points < 2 {
        return Err(PipelineError::Metrics("grid needs at least 2 points"));
    }
    let lo = curves.iter().map(|c| c[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves
        .iter()
        .map(|c| c[c.len() - 1].0)
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(PipelineError::Metrics("curves share no x-range"));
    }
    Ok((0..points)
        .map(|k| {
            if k == points - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (points - 1) as f64
            }
        })
        .collect())
}

/// Linear interpolation of `y` at `x` along a curve with increasing `x`.
pub fn interpolate_y(curve: &[(f64, f64)], x: f64) -> f64 {
    let n = curve.len();
    if n == 1 {
        return curve[0].1;
    }
    let i = curve.partition_point(|p| p.0 < x).clamp(1, n - 1);
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Each curve resampled at `xs`, one row per curve.
pub fn resample(curves: &[Vec<(f64, f64)>], xs: &[f64]) -> Vec<Vec<f64>> {
    curves
        .iter()
        .map(|c| xs.iter().map(|&x| interpolate_y(c, x)).collect())
        .collect()
}

/// Pointwise mean over rows.
pub fn pointwise_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.first().map_or(0, Vec::len);
    (0..m)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64)
        .collect()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = libm::floor(pos) as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        values[i] + (values[i + 1] - values[i]) * frac
    } else {
        values[n - 1]
    }
}

/// RMS distance between the posterior mean curve and a reference over the
/// common x-grid of the ensemble (`DEFAULT_GRID` points).
pub fn rmse<R>(ensemble: &PosteriorEnsemble, reference: R) -> Result<f64, PipelineError>
where
    R: FnOnce(&[f64]) -> Result<Vec<f64>, PipelineError>,
{
    rmse_xy(&ensemble.xy_curves, reference)
}

pub fn rmse_xy<R>(curves: &[Vec<(f64, f64)>], reference: R) -> Result<f64, PipelineError>
where
    R: FnOnce(&[f64]) -> Result<Vec<f64>, PipelineError>,
{
    let xs = common_x_grid(curves, DEFAULT_GRID)?;
    let mean = pointwise_mean(&resample(curves, &xs));
    let refv = reference(&xs)?;
    if refv.len() != xs.len() {
        return Err(PipelineError::Metrics("reference length mismatch"));
    }
    let ss: f64 = mean.iter().zip(&refv).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(libm::sqrt(ss / xs.len() as f64))
}
