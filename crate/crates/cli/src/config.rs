//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use liepnm_core::charts::{ChartError, OdeFamily};
use liepnm_core::expr::{Expression, ParseError};
use liepnm_core::pipeline::{self, SolveConfig};

pub const KEYS: [&str; 15] = [
    "family",
    "F",
    "x0",
    "xT",
    "y0",
    "y0_prime",
    "n",
    "N",
    "r_max",
    "samples",
    "burn_in",
    "seed",
    "travel_time",
    "out_dir",
    "plot",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` already set on line {first}")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    Value {
        line: usize,
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("line {line}: unknown family `{name}` (expected first_order or second_order)")]
    Family { line: usize, name: String },
    #[error("line {line}: F: {source}")]
    Expression { line: usize, source: ParseError },
    #[error("`{key}` does not apply to the {family} family")]
    NotApplicable { key: &'static str, family: &'static str },
    #[error("domain: {0}")]
    Domain(#[from] ChartError),
    #[error(transparent)]
    Solve(#[from] pipeline::ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    FirstOrder,
    SecondOrder,
}

impl FamilyTag {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "first_order" | "first-order" => Some(FamilyTag::FirstOrder),
            "second_order" | "second-order" => Some(FamilyTag::SecondOrder),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::FirstOrder => "first_order",
            FamilyTag::SecondOrder => "second_order",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solve: SolveConfig,
    pub out_dir: PathBuf,
    pub plot: bool,
}

struct Entries<'a> {
    map: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &'static str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn required(&self, key: &'static str) -> Result<(usize, &'a str), ConfigError> {
        self.raw(key).ok_or(ConfigError::Missing(key))
    }

    fn parse<T>(&self, key: &'static str, line: usize, value: &str) -> Result<T, ConfigError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        value.parse::<T>().map_err(|e| ConfigError::Value {
            line,
            key,
            value: value.to_string(),
            reason: e.to_string(),
        })
    }

    fn number(&self, key: &'static str) -> Result<f64, ConfigError> {
        let (line, v) = self.required(key)?;
        let x: f64 = self.parse(key, line, v)?;
        if !x.is_finite() {
            return Err(ConfigError::Value {
                line,
                key,
                value: v.to_string(),
                reason: "not finite".into(),
            });
        }
        Ok(x)
    }

    fn optional<T>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|(line, v)| self.parse(key, line, v))
            .transpose()
    }
}

fn entries(text: &str) -> Result<Entries<'_>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        if let Some(&(first, _)) = map.get(known) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
                first,
            });
        }
        map.insert(known, (line, value));
    }
    Ok(Entries { map })
}

fn parse_bool(line: usize, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value {
            line,
            key: "plot",
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

/// Parses and validates a configuration. Relative `out_dir` values are
/// resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let e = entries(text)?;
    let (line, name) = e.required("family")?;
    let tag = FamilyTag::parse(name).ok_or_else(|| ConfigError::Family {
        line,
        name: name.to_string(),
    })?;
    let x0 = e.number("x0")?;
    let x_t = e.number("xT")?;
    let y0 = e.number("y0")?;
    let family = match tag {
        FamilyTag::FirstOrder => {
            if e.raw("y0_prime").is_some() {
                return Err(ConfigError::NotApplicable {
                    key: "y0_prime",
                    family: tag.name(),
                });
            }
            let (line, text) = e.required("F")?;
            let f = Expression::parse(text)
                .map_err(|source| ConfigError::Expression { line, source })?;
            OdeFamily::FirstOrderHomogeneous { f, x0, x_t, y0 }
        }
        FamilyTag::SecondOrder => {
            if e.raw("F").is_some() {
                return Err(ConfigError::NotApplicable {
                    key: "F",
                    family: tag.name(),
                });
            }
            OdeFamily::SecondOrderExample {
                x0,
                x_t,
                y0,
                y0_prime: e.number("y0_prime")?,
            }
        }
    };
    family.chart()?;
    family.r0()?;

    let (line, n_text) = e.required("n")?;
    let n: usize = e.parse("n", line, n_text)?;
    let mut solve = SolveConfig::new(family, n, e.number("r_max")?);
    if let Some(big_n) = e.optional("N")? {
        solve.basis_size = big_n;
    }
    if let Some(v) = e.optional("samples")? {
        solve.samples = v;
    }
    if let Some(v) = e.optional("burn_in")? {
        solve.burn_in = v;
    }
    if let Some(v) = e.optional("seed")? {
        solve.seed = v;
    }
    if e.raw("travel_time").is_some() {
        solve.travel_time = e.number("travel_time")?;
    }
    solve.validate()?;

    let out_dir = match e.raw("out_dir") {
        Some((_, dir)) => base.join(dir),
        None => base.to_path_buf(),
    };
    let plot = match e.raw("plot") {
        Some((line, v)) => parse_bool(line, v)?,
        None => false,
    };
    Ok(RunConfig {
        solve,
        out_dir,
        plot,
    })
}

/// Reads `path` and parses it, resolving `out_dir` against the current
/// directory.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, Path::new("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST: &str = "\
# first order run
family = first_order
F = 1/r + r
x0 = 1
xT = 5
y0 = 1
n = 10
r_max = 2.05
seed = 7   # trailing comment
plot = true
";

    #[test]
    fn parses_a_full_config() {
        let c = parse_config(FIRST, Path::new("/tmp")).unwrap();
        assert_eq!(c.solve.n, 10);
        assert_eq!(c.solve.basis_size, 20);
        assert_eq!(c.solve.seed, 7);
        assert_eq!(c.solve.samples, 200);
        assert!(c.plot);
        assert_eq!(c.out_dir, Path::new("/tmp"));
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |extra: &str| parse_config(&format!("{FIRST}{extra}\n"), Path::new("."));
        assert!(matches!(bad("N = 11"), Err(ConfigError::Solve(pipeline::ConfigError::RankLaw { .. }))));
        assert!(matches!(bad("colour = red"), Err(ConfigError::UnknownKey { line: 11, .. })));
        assert!(matches!(bad("seed = 1"), Err(ConfigError::Duplicate { first: 9, .. })));
        assert!(matches!(bad("samples = many"), Err(ConfigError::Value { key: "samples", .. })));
        assert!(matches!(bad("y0_prime = 1"), Err(ConfigError::NotApplicable { .. })));
        assert!(matches!(bad("just words"), Err(ConfigError::Syntax { .. })));
        let missing = FIRST.replace("r_max = 2.05\n", "");
        assert!(matches!(parse_config(&missing, Path::new(".")), Err(ConfigError::Missing("r_max"))));
        let expr = FIRST.replace("1/r + r", "1/r +");
        assert!(matches!(parse_config(&expr, Path::new(".")), Err(ConfigError::Expression { line: 3, .. })));
    }
}
