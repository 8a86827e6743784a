//! Parsing of `--state`, `--test` and rational arguments.
//!
//! A state is either a JSON state document (inline or a file path) or a
//! builtin of the form `builtin:name(key=value,...)`:
//!
//! | name           | keys                                          |
//! |----------------|-----------------------------------------------|
//! | `tracial`      | `N`                                           |
//! | `block`        | `N`                                           |
//! | `pure`         | `N`, one of `seed`, `bits`, `pattern`         |
//! | `tensor_power` | `N`, `p` (diag(p, 1−p)) or `diag` (`a;b;...`) |
//! | `measure`      | `N`, `f` = `uniform` \| `f1` \| `f2`          |
//!
//! `N` falls back to `--depth`.

use std::collections::BTreeMap;
use std::path::Path;

use num_rational::Rational64;
use qrandlab::linalg::DensityOperator;
use qrandlab::serial::{MatrixSpec, StateDocument, StateSpec, TestDocument};
use qrandlab::states::{BitSource, BuiltinDensity};

use crate::error::CliError;

pub fn parse_state(arg: &str, depth: Option<usize>) -> Result<StateDocument, CliError> {
    if let Some(rest) = arg.strip_prefix("builtin:") {
        let (spec, n) = parse_builtin(rest, depth)?;
        return Ok(StateDocument::new(spec, n)?);
    }
    let text = read_inline_or_file(arg)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("state document: {e}")))
}

/// Accepts a bare test document or any JSON object with a `test` field
/// (the output of `build-test`).
pub fn parse_test(arg: &str) -> Result<TestDocument, CliError> {
    let text = read_inline_or_file(arg)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("test document: {e}")))?;
    if let Some(inner) = value.get_mut("test") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("test document: {e}")))
}

fn read_inline_or_file(arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(Path::new(arg))
            .map_err(|e| CliError::Io(format!("{arg}: {e}")))
    }
}

fn parse_builtin(text: &str, depth: Option<usize>) -> Result<(StateSpec, usize), CliError> {
    let bad = |msg: String| CliError::Usage(format!("builtin state '{text}': {msg}"));
    let (name, params) = match text.find('(') {
        Some(i) => {
            let inner = text[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| bad("missing ')'".into()))?;
            (&text[..i], inner)
        }
        None => (text, ""),
    };
    let mut kv = BTreeMap::new();
    for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got '{part}'")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |k: &str| kv.remove(k);

    let n = match take("N") {
        Some(v) => v.parse().map_err(|_| bad(format!("N = '{v}'")))?,
        None => depth.ok_or_else(|| bad("no N and no --depth".into()))?,
    };
    let spec = match name.trim() {
        "tracial" => StateSpec::Tracial,
        "block" => StateSpec::Block,
        "pure" => {
            let source = if let Some(s) = take("seed") {
                BitSource::Seeded {
                    seed: s.parse().map_err(|_| bad(format!("seed = '{s}'")))?,
                }
            } else if let Some(bits) = take("bits") {
                BitSource::Explicit { bits }
            } else if let Some(pattern) = take("pattern") {
                BitSource::Periodic { pattern }
            } else {
                BitSource::Seeded { seed: 0 }
            };
            StateSpec::Pure { source }
        }
        "tensor_power" => {
            let diag: Vec<f64> = if let Some(p) = take("p") {
                let p: f64 = p.parse().map_err(|_| bad(format!("p = '{p}'")))?;
                vec![p, 1.0 - p]
            } else if let Some(d) = take("diag") {
                d.split(';')
                    .map(|x| x.trim().parse().map_err(|_| bad(format!("diag entry '{x}'"))))
                    .collect::<Result<_, _>>()?
            } else {
                return Err(bad("needs p or diag".into()));
            };
            let factor = DensityOperator::diagonal(diag)?;
            StateSpec::TensorPower {
                factor: MatrixSpec::from_density(&factor),
            }
        }
        "measure" => {
            let density = match take("f").as_deref() {
                Some("uniform") => BuiltinDensity::Uniform,
                Some("f1") => BuiltinDensity::F1,
                Some("f2") | None => BuiltinDensity::F2,
                Some(other) => return Err(bad(format!("unknown density '{other}'"))),
            };
            StateSpec::Measure { density }
        }
        other => return Err(bad(format!("unknown constructor '{other}'"))),
    };
    if let Some(k) = kv.keys().next() {
        return Err(bad(format!("unused parameter '{k}'")));
    }
    Ok((spec, n))
}

/// `p/q`, an integer, or a terminating decimal such as `0.25`, read exactly.
pub fn parse_rational(text: &str) -> Result<Rational64, CliError> {
    let bad = || CliError::Usage(format!("not a rational: '{text}'"));
    let t = text.trim();
    if t.contains('/') {
        return t.parse().map_err(|_| bad());
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let negative = int.starts_with('-');
    let whole: i64 = if int.is_empty() || int == "-" {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = whole.abs() * den + part;
    Ok(Rational64::new(if negative { -num } else { num }, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_with_parameters() {
        let doc = parse_state("builtin:tensor_power(p=0.9, N=12)", None).unwrap();
        assert_eq!(doc.n_max, 12);
        assert!(matches!(doc.spec, StateSpec::TensorPower { .. }));
        let doc = parse_state("builtin:pure(pattern=01)", Some(6)).unwrap();
        assert_eq!(
            doc.spec,
            StateSpec::Pure {
                source: BitSource::Periodic { pattern: "01".into() }
            }
        );
    }

    #[test]
    fn builtin_errors_are_usage_errors() {
        assert!(matches!(parse_state("builtin:tracial", None), Err(CliError::Usage(_))));
        assert!(matches!(parse_state("builtin:nope(N=3)", None), Err(CliError::Usage(_))));
        assert!(matches!(parse_state("builtin:block(N=3,x=1)", None), Err(CliError::Usage(_))));
    }

    #[test]
    fn state_document_roundtrip_inline() {
        let doc = parse_state("builtin:measure(f=f1,N=8)", None).unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(parse_state(&json, None).unwrap(), doc);
    }

    #[test]
    fn rationals_are_exact() {
        assert_eq!(parse_rational("1/2").unwrap(), Rational64::new(1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), Rational64::new(1, 4));
        assert_eq!(parse_rational("3").unwrap(), Rational64::from_integer(3));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational64::new(-1, 2));
        assert!(parse_rational("abc").is_err());
    }
}
