//! Scenario files: model parameters plus analysis settings in the flat
//! `key = value` format.

use std::fmt;
use std::str::FromStr;

use virodyn::model::{params_from_entries, parse_kv, KvEntry};
use virodyn::{InteriorBranch, ModelParams, Param, State};

/// A configuration problem, reported with the offending line when known.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<virodyn::Error> for ConfigError {
    fn from(e: virodyn::Error) -> Self {
        match e {
            virodyn::Error::Parse { line, message } => ConfigError::at(line, message),
            other => ConfigError::new(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Analysis {
    /// Equilibrium branches with critical points and domain curves.
    Sweep { param: Param, grid: Vec<f64> },
    /// Critical points only.
    CriticalPoints { param: Param, grid: Vec<f64> },
    RegionMap {
        b_range: (f64, f64),
        beta_range: (f64, f64),
        resolution: (usize, usize),
    },
    Equilibria,
    Integrate {
        inits: Vec<State>,
        t_end: f64,
        dt: f64,
        /// Horizon for a Lyapunov exponent estimate from the first start.
        lyapunov: Option<f64>,
    },
    /// Orbits from every start, then a refined cycle seeded by the first.
    Cycle { inits: Vec<State>, t_end: f64, dt: f64 },
    /// Cycle branch born at a Hopf point of an interior equilibrium.
    CycleBranch {
        param: Param,
        branch: InteriorBranch,
        hopf_bracket: (f64, f64),
        range: (f64, f64),
        max_period: f64,
        max_points: usize,
        ds_max: f64,
    },
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Sweep { .. } => "sweep",
            Analysis::CriticalPoints { .. } => "critical_points",
            Analysis::RegionMap { .. } => "region_map",
            Analysis::Equilibria => "equilibria",
            Analysis::Integrate { .. } => "integrate",
            Analysis::Cycle { .. } => "cycle",
            Analysis::CycleBranch { .. } => "cycle_branch",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Figure the scenario reproduces, if any.
    pub figure: Option<String>,
    pub params: ModelParams,
    pub analysis: Analysis,
    pub out: Option<String>,
    /// The text the config was parsed from.
    pub source: String,
}

/// Settings not read yet, consumed key by key.
struct Rest {
    entries: Vec<KvEntry>,
    last_line: usize,
}

impl Rest {
    fn take(&mut self, key: &str) -> Option<KvEntry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(i))
    }

    fn required(&mut self, key: &str) -> Result<KvEntry, ConfigError> {
        self.take(key)
            .ok_or_else(|| ConfigError::at(self.last_line, format!("missing setting `{key}`")))
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T, ConfigError> {
        match self.take(key) {
            Some(e) => e
                .value
                .parse()
                .map_err(|_| ConfigError::at(e.line, format!("cannot parse `{}` for `{key}`", e.value))),
            None => default.ok_or_else(|| ConfigError::at(self.last_line, format!("missing setting `{key}`"))),
        }
    }
}

fn numbers(e: &KvEntry, sep: char) -> Result<Vec<f64>, ConfigError> {
    e.value
        .split(sep)
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::at(e.line, format!("`{}` is not a number in `{}`", s.trim(), e.key)))
        })
        .collect()
}

fn range(e: &KvEntry) -> Result<(f64, f64), ConfigError> {
    match numbers(e, ':')?[..] {
        [lo, hi] if lo < hi => Ok((lo, hi)),
        _ => Err(ConfigError::at(e.line, format!("`{}` expects `lo:hi` with lo < hi", e.key))),
    }
}

/// `lo:hi:n`, n evenly spaced values inclusive.
fn grid(e: &KvEntry) -> Result<Vec<f64>, ConfigError> {
    let v = numbers(e, ':')?;
    match v[..] {
        [lo, hi, n] if lo < hi && n >= 1.0 && n.fract() == 0.0 => Ok(virodyn::bifurcation::linspace(lo, hi, n as usize)),
        _ => Err(ConfigError::at(e.line, format!("`{}` expects `lo:hi:n` with lo < hi and integer n >= 1", e.key))),
    }
}

/// States separated by `;`, components by `,`.
fn states(e: &KvEntry) -> Result<Vec<State>, ConfigError> {
    e.value
        .split(';')
        .map(|chunk| {
            let c = numbers(
                &KvEntry {
                    line: e.line,
                    key: e.key.clone(),
                    value: chunk.to_string(),
                },
                ',',
            )?;
            match c[..] {
                [x, y, v, z] => Ok(State::new(x, y, v, z)),
                _ => Err(ConfigError::at(e.line, format!("`{}` needs four components per state", e.key))),
            }
        })
        .collect()
}

fn positive(e: Option<KvEntry>, key: &str, value: f64, line: usize) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::at(e.map_or(line, |e| e.line), format!("`{key}` must be positive")))
    }
}

fn interior_branch(e: &KvEntry) -> Result<InteriorBranch, ConfigError> {
    match e.value.as_str() {
        "E_minus" => Ok(InteriorBranch::EMinus),
        "E_im" => Ok(InteriorBranch::EIm),
        "E_plus" => Ok(InteriorBranch::EPlus),
        other => Err(ConfigError::at(e.line, format!("unknown interior branch `{other}`"))),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = parse_kv(text)?;
        let last_line = entries.iter().map(|e| e.line).max().unwrap_or(0);
        let (params, rest) = params_from_entries(&entries)?;
        let mut rest = Rest { entries: rest, last_line };
        let figure = rest.take("figure").map(|e| e.value);
        let out = rest.take("out").map(|e| e.value);
        let kind = rest.required("analysis")?;
        let param = |rest: &mut Rest| -> Result<Param, ConfigError> {
            match rest.take("param") {
                Some(e) => e.value.parse().map_err(|_| ConfigError::at(e.line, format!("unknown parameter `{}`", e.value))),
                None => Ok(Param::B),
            }
        };
        let analysis = match kind.value.as_str() {
            "sweep" | "critical_points" => {
                let param = param(&mut rest)?;
                let grid = grid(&rest.required("grid")?)?;
                if kind.value == "sweep" {
                    Analysis::Sweep { param, grid }
                } else {
                    Analysis::CriticalPoints { param, grid }
                }
            }
            "region_map" => {
                let b_range = range(&rest.required("b_range")?)?;
                let beta_range = range(&rest.required("beta_range")?)?;
                let res = rest.required("resolution")?;
                let n = numbers(&res, ',')?;
                let resolution = match n[..] {
                    [a, b] if a >= 2.0 && b >= 2.0 && a.fract() == 0.0 && b.fract() == 0.0 => (a as usize, b as usize),
                    _ => return Err(ConfigError::at(res.line, "`resolution` expects `nb,nbeta`, each an integer >= 2")),
                };
                Analysis::RegionMap {
                    b_range,
                    beta_range,
                    resolution,
                }
            }
            "equilibria" => Analysis::Equilibria,
            "integrate" | "cycle" => {
                let inits = states(&rest.required("init")?)?;
                let t_end: f64 = rest.parse("t_end", None)?;
                let t_end = positive(None, "t_end", t_end, last_line)?;
                let dt: f64 = rest.parse("dt", Some(0.1))?;
                let dt = positive(None, "dt", dt, last_line)?;
                if kind.value == "integrate" {
                    let lyapunov = match rest.take("lyapunov_horizon") {
                        Some(e) => {
                            let h = numbers(&e, ',')?[0];
                            Some(positive(Some(e), "lyapunov_horizon", h, last_line)?)
                        }
                        None => None,
                    };
                    Analysis::Integrate { inits, t_end, dt, lyapunov }
                } else {
                    Analysis::Cycle { inits, t_end, dt }
                }
            }
            "cycle_branch" => {
                let param = param(&mut rest)?;
                let branch = interior_branch(&rest.required("hopf_branch")?)?;
                let hopf_bracket = range(&rest.required("hopf_bracket")?)?;
                let range = range(&rest.required("range")?)?;
                let max_period = rest.parse("max_period", Some(1e4))?;
                let max_points = rest.parse("max_points", Some(2000))?;
                let ds_max = rest.parse("ds_max", Some(0.05))?;
                Analysis::CycleBranch {
                    param,
                    branch,
                    hopf_bracket,
                    range,
                    max_period,
                    max_points,
                    ds_max,
                }
            }
            other => return Err(ConfigError::at(kind.line, format!("unknown analysis `{other}`"))),
        };
        if let Some(e) = rest.entries.first() {
            return Err(ConfigError::at(e.line, format!("unknown setting `{}` for analysis `{}`", e.key, analysis.kind())));
        }
        Ok(ScenarioConfig {
            figure,
            params,
            analysis,
            out,
            source: text.to_string(),
        })
    }
}
