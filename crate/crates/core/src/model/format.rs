//! Flat `name = value` text format for parameter sets.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Keys are `lambda, K, beta, gamma, b, delta, beta_y, beta_v, beta_z, c, epsilon`.

use std::fmt::Write as _;

use super::{Clearance, ModelParams, Param};
use crate::error::{Error, Result};

/// One `key = value` assignment with its 1-based source line.
#[derive(Clone, Debug, PartialEq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits text into assignments. Duplicate keys are rejected.
pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>> {
    let mut out: Vec<KvEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `name = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key or value".into(),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.push(KvEntry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

fn parse_f64(e: &KvEntry) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| Error::Parse {
        line: e.line,
        message: format!("`{}` is not a number for `{}`", e.value, e.key),
    })
}

/// Builds parameters from entries. Non-parameter keys are returned untouched
/// so callers can layer their own settings on the same file.
pub fn params_from_entries(entries: &[KvEntry]) -> Result<(ModelParams, Vec<KvEntry>)> {
    let mut values: [Option<f64>; 10] = [None; 10];
    let mut epsilon = None;
    let mut rest = Vec::new();
    for e in entries {
        if e.key == "epsilon" {
            let n = parse_f64(e)?;
            let c = match n {
                n if n == 0.0 => Clearance::Linear,
                n if n == 1.0 => Clearance::Quadratic,
                _ => {
                    return Err(Error::Parse {
                        line: e.line,
                        message: format!("epsilon must be 0 or 1, got {}", e.value),
                    })
                }
            };
            epsilon = Some(c);
        } else if let Some(i) = Param::ALL.iter().position(|p| p.name() == e.key) {
            values[i] = Some(parse_f64(e)?);
        } else {
            rest.push(e.clone());
        }
    }
    let last = entries.iter().map(|e| e.line).max().unwrap_or(0);
    let get = |i: usize| {
        values[i].ok_or_else(|| Error::Parse {
            line: last,
            message: format!("missing parameter `{}`", Param::ALL[i].name()),
        })
    };
    let params = ModelParams {
        lambda: get(0)?,
        k: get(1)?,
        beta: get(2)?,
        gamma: get(3)?,
        b: get(4)?,
        delta: get(5)?,
        beta_y: get(6)?,
        beta_v: get(7)?,
        beta_z: get(8)?,
        c: get(9)?,
        epsilon: epsilon.ok_or_else(|| Error::Parse {
            line: last,
            message: "missing parameter `epsilon`".into(),
        })?,
    };
    params.validate()?;
    Ok((params, rest))
}

/// Parses a complete parameter file; unknown keys are errors.
pub fn params_from_kv(text: &str) -> Result<ModelParams> {
    let entries = parse_kv(text)?;
    let (params, rest) = params_from_entries(&entries)?;
    if let Some(e) = rest.first() {
        return Err(Error::Parse {
            line: e.line,
            message: format!("unknown parameter `{}`", e.key),
        });
    }
    Ok(params)
}

/// Writes parameters with round-trip exact float formatting.
pub fn params_to_kv(p: &ModelParams) -> String {
    let mut s = String::new();
    for q in Param::ALL {
        let _ = writeln!(s, "{} = {:?}", q.name(), p.get(q));
    }
    let _ = writeln!(s, "epsilon = {}", p.epsilon.exponent());
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# linear clearance, bistable setting
lambda = 0.36
K = 1
beta = 0.11
gamma = 1
b = 9.5
delta = 0.2
beta_y = 0.48
beta_v = 0.16
beta_z = 0.6
c = 0.036   # immune clearance
epsilon = 0
";

    #[test]
    fn parses_sample() {
        let p = params_from_kv(SAMPLE).unwrap();
        assert_eq!(p.c, 0.036);
        assert_eq!(p.epsilon, Clearance::Linear);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = SAMPLE.replace("delta = 0.2", "delta = zero");
        match params_from_kv(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("epsilon = 0", "epsilon = 2");
        assert!(matches!(params_from_kv(&bad), Err(Error::Parse { line: 12, .. })));
        let bad = format!("{SAMPLE}mu = 1\n");
        assert!(matches!(params_from_kv(&bad), Err(Error::Parse { line: 13, .. })));
        let bad = SAMPLE.replace("K = 1", "K 1");
        assert!(matches!(params_from_kv(&bad), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_key() {
        let bad = SAMPLE.replace("beta_v = 0.16\n", "");
        let err = params_from_kv(&bad).unwrap_err();
        assert!(err.to_string().contains("beta_v"));
    }

    #[test]
    fn json_uses_table_symbols() {
        let p = params_from_kv(SAMPLE).unwrap();
        let js = serde_json::to_value(p).unwrap();
        assert_eq!(js["K"], 1.0);
        assert_eq!(js["epsilon"], 0);
        let back: ModelParams = serde_json::from_value(js).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn kv_round_trip(lambda in 0.0..5.0f64, b in 1.0..100.0f64, c in 0.0..3.0f64, eps in 0u8..2) {
            let mut p = params_from_kv(SAMPLE).unwrap();
            p.lambda = lambda;
            p.b = b;
            p.c = c;
            p.epsilon = Clearance::try_from(eps).unwrap();
            prop_assert_eq!(params_from_kv(&params_to_kv(&p)).unwrap(), p);
        }
    }
}
