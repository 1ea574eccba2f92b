use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use liepnm_core::charts::CanonicalChart;
use liepnm_core::expr::Expression;
use liepnm_core::lie::{
    decompose, scaling_generator, second_order_generators, solvable_2d_order, symmetry_residual,
    HomogeneousFirstOrder, Jet, OdeSurface, PolyVectorField, SecondOrderExample,
};
use liepnm_core::pipeline::{
    common_x_grid, pointwise_mean, quantile, resample, solve, PipelineError, PosteriorEnsemble,
    Stage,
};
use liepnm_core::tmg::{self, SamplerConfig, TruncatedGaussianProblem};
use nalgebra::{DMatrix, DVector};

use crate::config::{self, load_config, FamilyTag};
use crate::svg::{self, PlotData};
use crate::table::{sample_columns, Table, TableError};

/// Residual bound for `verify-symmetry` to report success.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] config::ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("failed at stage {source}")]
    Pipeline {
        stage: Stage,
        source: PipelineError,
    },
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: TableError },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for usage and configuration problems, 3 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Usage(_)
            | CliError::Input { .. }
            | CliError::Table { .. } => 2,
            CliError::Pipeline { stage, .. } if *stage == Stage::Config => 2,
            _ => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(source: PipelineError) -> Self {
        CliError::Pipeline {
            stage: source.stage(),
            source,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn rs_table(e: &PosteriorEnsemble) -> Table {
    let mut header = vec!["r".to_string()];
    header.extend(sample_columns("s_sample", e.len()));
    let mut cols: Vec<&[f64]> = vec![&e.grid];
    cols.extend(e.rs_curves.iter().map(Vec::as_slice));
    Table::from_columns(header, &cols)
}

/// Sample curves resampled on the x-range shared by all of them.
pub fn xy_table(e: &PosteriorEnsemble) -> Result<Table, CliError> {
    let xs = common_x_grid(&e.xy_curves, e.grid.len())?;
    let ys = resample(&e.xy_curves, &xs);
    let mut header = vec!["x".to_string()];
    header.extend(sample_columns("y_sample", e.len()));
    let mut cols: Vec<&[f64]> = vec![&xs];
    cols.extend(ys.iter().map(Vec::as_slice));
    Ok(Table::from_columns(header, &cols))
}

fn band(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mean = pointwise_mean(rows);
    let m = mean.len();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    for k in 0..m {
        let mut col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        lo.push(quantile(&mut col, 0.05));
        hi.push(quantile(&mut col, 0.95));
    }
    (mean, lo, hi)
}

/// Pointwise mean and 5%/95% quantiles in both coordinate systems, row `i`
/// pairing the i-th r-grid point with the i-th common x-grid point.
pub fn summary_table(e: &PosteriorEnsemble, xy: &Table) -> Table {
    let (s_mean, s_lo, s_hi) = band(&e.rs_curves);
    let xs = xy.column_at(0);
    let ys: Vec<Vec<f64>> = (1..xy.header.len()).map(|j| xy.column_at(j)).collect();
    let (y_mean, y_lo, y_hi) = band(&ys);
    let header = ["r", "s_mean", "s_q05", "s_q95", "x", "y_mean", "y_q05", "y_q95"]
        .map(String::from)
        .to_vec();
    Table::from_columns(
        header,
        &[&e.grid, &s_mean, &s_lo, &s_hi, &xs, &y_mean, &y_lo, &y_hi],
    )
}

fn envelope(chart: &CanonicalChart, grid: &[f64]) -> Vec<Vec<f64>> {
    vec![
        grid.iter().map(|&r| chart.s_lo(r)).collect(),
        grid.iter().map(|&r| chart.s_hi(r)).collect(),
    ]
}

pub fn cmd_solve(path: &Path, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let run = load_config(path)?;
    let ensemble = solve(&run.solve)?;
    fs::create_dir_all(&run.out_dir).map_err(io_err(&run.out_dir))?;

    let rs = rs_table(&ensemble);
    let xy = xy_table(&ensemble)?;
    let summary = summary_table(&ensemble, &xy);
    let mut written = Vec::new();
    for (name, table) in [
        ("ensemble_rs.csv", &rs),
        ("ensemble_xy.csv", &xy),
        ("summary.csv", &summary),
    ] {
        let p = run.out_dir.join(name);
        write_file(&p, table.to_csv_string().as_bytes())?;
        written.push(p);
    }
    if run.plot {
        let data = PlotData {
            x_label: "r".into(),
            y_label: "s".into(),
            abscissa: ensemble.grid.clone(),
            samples: ensemble.rs_curves.clone(),
            envelope: envelope(&ensemble.chart, &ensemble.grid),
            reference: None,
        };
        let p = run.out_dir.join("posterior.svg");
        write_file(&p, svg::render(&data).as_bytes())?;
        written.push(p);
    }
    let _ = writeln!(
        out,
        "{} samples, {} design points, N = {}",
        ensemble.len(),
        ensemble.design.len(),
        ensemble.basis.len()
    );
    for p in &written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(written)
}

/// Deterministic jets spread over a region where the family's ODE is regular.
fn jets(tag: FamilyTag) -> Vec<Jet> {
    (0..100)
        .map(|i| {
            let t = i as f64;
            match tag {
                FamilyTag::FirstOrder => {
                    let x = 1.0 + 4.0 * (0.5 + 0.5 * (t * 0.37).sin());
                    let r = 0.4 + 2.0 * (0.5 + 0.5 * (t * 0.61).cos());
                    Jet::new(x, r * x, vec![])
                }
                FamilyTag::SecondOrder => {
                    let x = 5.0 + 5.0 * (0.5 + 0.5 * (t * 0.37).sin());
                    let y = -12.0 + 4.0 * (0.5 + 0.5 * (t * 0.11).cos());
                    let y1 = 0.05 + 3.0 * (t * 0.71).sin().abs();
                    Jet::new(x, y, vec![y1])
                }
            }
        })
        .collect()
}

fn combination(coeffs: &[f64]) -> String {
    let mut out = String::new();
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let name = format!("X{}", i + 1);
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        let term = if mag == 1.0 {
            name
        } else {
            format!("{mag} {name}")
        };
        if out.is_empty() {
            out = if c < 0.0 { format!("-{term}") } else { term };
        } else {
            out = format!("{out} {sign} {term}");
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

/// Prints the commutator table, the solvable ordering and symmetry residuals.
/// Returns whether every residual is below `SYMMETRY_TOL`.
pub fn cmd_verify_symmetry(
    tag: FamilyTag,
    f: Option<&str>,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let (ode, gens): (Box<dyn OdeSurface>, Vec<PolyVectorField>) = match tag {
        FamilyTag::FirstOrder => {
            let text = f.unwrap_or("1/r + r");
            let expr = Expression::parse(text)
                .map_err(|e| CliError::Usage(format!("F = {text}: {e}")))?;
            (Box::new(HomogeneousFirstOrder::new(expr)), vec![scaling_generator()])
        }
        FamilyTag::SecondOrder => {
            if f.is_some() {
                return Err(CliError::Usage("--F applies to the first_order family only".into()));
            }
            (Box::new(SecondOrderExample), second_order_generators().to_vec())
        }
    };
    let w = |out: &mut dyn Write, s: String| {
        let _ = writeln!(out, "{s}");
    };
    w(out, format!("family {}", tag.name()));
    for (i, g) in gens.iter().enumerate() {
        w(out, format!("X{} = {g}", i + 1));
    }
    w(out, "commutators".into());
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let bracket = gens[i].commutator(&gens[j]);
            let text = match decompose(&bracket, &gens) {
                Ok(Some(c)) => combination(&c),
                Ok(None) => format!("{bracket} (outside the algebra)"),
                Err(e) => return Err(CliError::Runtime(e.to_string())),
            };
            w(out, format!("  [X{}, X{}] = {text}", i + 1, j + 1));
        }
    }
    if gens.len() >= 2 {
        let pair = solvable_2d_order(&gens[0], &gens[1])
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let normal = if pair.normal == gens[0] {
            "X1".to_string()
        } else if pair.normal == gens[1] {
            "X2".to_string()
        } else {
            pair.normal.to_string()
        };
        w(
            out,
            format!("solvable ordering of (X1, X2): ideal {normal}, lambda = {}", pair.lambda),
        );
    }
    let jets = jets(tag);
    w(out, format!("residuals over {} on-surface jets", jets.len()));
    let mut ok = true;
    for (i, g) in gens.iter().enumerate() {
        let r = symmetry_residual(ode.as_ref(), g, &jets)
            .map_err(|e| CliError::Runtime(format!("X{}: {e}", i + 1)))?;
        let pass = r < SYMMETRY_TOL;
        ok &= pass;
        w(
            out,
            format!("  X{}: {r:e} {}", i + 1, if pass { "ok" } else { "FAILED" }),
        );
    }
    Ok(ok)
}

/// Reads rows `f_1 ... f_d g` describing `f . x + g >= 0`, separated by
/// whitespace or commas, `#` comments allowed.
pub fn read_constraints(text: &str, dims: usize) -> Result<(DMatrix<f64>, DVector<f64>), CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let values = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Usage(format!("line {}: bad number `{t}`", i + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dims + 1 {
            return Err(CliError::Usage(format!(
                "line {}: expected {} numbers (coefficients then offset), found {}",
                i + 1,
                dims + 1,
                values.len()
            )));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::Usage("constraint file has no rows".into()));
    }
    let f = DMatrix::from_fn(rows.len(), dims, |i, j| rows[i][j]);
    let g = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[dims]));
    Ok((f, g))
}

pub struct TmgArgs<'a> {
    pub dims: usize,
    pub constraints: &'a Path,
    pub count: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub travel_time: f64,
    pub out: &'a Path,
}

/// Samples `N(0, I)` restricted to the polytope and writes one row per draw;
/// prints per-coordinate mean and variance.
pub fn cmd_sample_tmg(args: &TmgArgs<'_>, out: &mut dyn Write) -> Result<(), CliError> {
    if args.dims == 0 {
        return Err(CliError::Usage("dims must be at least 1".into()));
    }
    if args.count == 0 {
        return Err(CliError::Usage("count must be at least 1".into()));
    }
    if !(args.travel_time > 0.0 && args.travel_time.is_finite()) {
        return Err(CliError::Usage("travel time must be positive".into()));
    }
    let text = fs::read_to_string(args.constraints).map_err(|source| CliError::Input {
        path: args.constraints.to_path_buf(),
        source,
    })?;
    let (f, g) = read_constraints(&text, args.dims)?;
    let problem =
        TruncatedGaussianProblem::new(f, g).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = SamplerConfig {
        burn_in: args.burn_in,
        travel_time: args.travel_time,
        ..SamplerConfig::new(args.count, args.seed)
    };
    let chain = tmg::sample(&problem, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;

    let header: Vec<String> = (0..args.dims).map(|j| format!("x_{j}")).collect();
    let mut table = Table::new(header);
    table.rows = chain.samples.iter().map(|x| x.iter().copied().collect()).collect();
    write_file(args.out, table.to_csv_string().as_bytes())?;

    let n = chain.samples.len() as f64;
    let _ = writeln!(out, "{} samples, seed {}", chain.samples.len(), args.seed);
    for j in 0..args.dims {
        let mean = chain.samples.iter().map(|x| x[j]).sum::<f64>() / n;
        let var = if chain.samples.len() > 1 {
            chain.samples.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let _ = writeln!(out, "x_{j} mean {mean:.6} variance {var:.6}");
    }
    Ok(())
}

/// Sorts the columns of an ensemble table into plot layers. Columns named
/// `*_sample_*` are samples, `lower`/`upper` the envelope and `reference`
/// the exact curve; the first column is the abscissa.
pub fn plot_data(table: &Table) -> Result<PlotData, CliError> {
    let first = table.header[0].clone();
    let mut data = PlotData {
        y_label: match first.as_str() {
            "r" => "s".into(),
            "x" => "y".into(),
            _ => String::new(),
        },
        x_label: first,
        abscissa: table.column_at(0),
        ..PlotData::default()
    };
    for (j, name) in table.header.iter().enumerate().skip(1) {
        let col = table.column_at(j);
        if name.contains("_sample_") {
            data.samples.push(col);
        } else if name == "lower" || name == "upper" {
            data.envelope.push(col);
        } else if name == "reference" {
            data.reference = Some(col);
        }
    }
    if data.samples.is_empty() {
        return Err(CliError::Usage("ensemble has no sample columns".into()));
    }
    Ok(data)
}

pub fn cmd_export_plot(
    ensemble: &Path,
    out_svg: &Path,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let file = fs::File::open(ensemble).map_err(|source| CliError::Input {
        path: ensemble.to_path_buf(),
        source,
    })?;
    let table = Table::read_from(file).map_err(|source| CliError::Table {
        path: ensemble.to_path_buf(),
        source,
    })?;
    let mut data = plot_data(&table)?;
    if let Some(path) = config {
        if data.x_label != "r" {
            return Err(CliError::Usage(
                "the envelope can only be drawn over an r column".into(),
            ));
        }
        let run = load_config(path)?;
        let chart = run.solve.family.chart().map_err(|e| CliError::Usage(e.to_string()))?;
        data.envelope = envelope(&chart, &data.abscissa);
    }
    write_file(out_svg, svg::render(&data).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_read_naturally() {
        assert_eq!(combination(&[-1.0, 0.0, 0.0]), "-X1");
        assert_eq!(combination(&[0.0, 2.0, -1.0]), "2 X2 - X3");
        assert_eq!(combination(&[0.0, 0.0]), "0");
    }

    #[test]
    fn constraint_rows_parse() {
        let (f, g) = read_constraints("# x >= -1\n1, 1\n-1 1\n", 1).unwrap();
        assert_eq!(f.nrows(), 2);
        assert_eq!(g[1], 1.0);
        assert!(matches!(read_constraints("1 2 3\n", 1), Err(CliError::Usage(_))));
        assert!(matches!(read_constraints("# none\n", 1), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Runtime("x".into()).exit_code(), 3);
        let e: CliError = PipelineError::Metrics("m").into();
        assert_eq!(e.exit_code(), 3);
    }
}
