//! Parameter sweeps: one independent run per value of a config path.

use crate::runner::{run, RunManifest, RunOptions};
use crate::scenario::{ConfigError, ScenarioConfig};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("axis must look like `path.to.key=v1,v2,...` (got '{0}')")]
    BadAxis(String),
    #[error("config has no key '{0}'")]
    MissingKey(String),
    #[error("cannot parse axis value '{value}': {message}")]
    BadValue { value: String, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A config path and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: Vec<String>,
    pub values: Vec<toml::Value>,
    /// Values as written on the command line, used for labels.
    pub labels: Vec<String>,
}

/// Parses a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> Result<toml::Value, SweepError> {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => Ok(t.remove("v").expect("key present")),
        Err(_) if !text.is_empty() && text.chars().all(|c| c.is_alphanumeric() || "-_".contains(c)) => {
            Ok(toml::Value::String(text.to_string()))
        }
        Err(e) => Err(SweepError::BadValue { value: text.to_string(), message: e.to_string() }),
    }
}

/// Splits on commas outside brackets and braces.
fn split_values(s: &str) -> Vec<String> {
    let (mut out, mut cur, mut depth) = (Vec::new(), String::new(), 0i32);
    for c in s.chars() {
        match c {
            '[' | '{' => depth += 1,
            ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self, SweepError> {
        let (path, values) = spec.split_once('=').ok_or_else(|| SweepError::BadAxis(spec.to_string()))?;
        let path: Vec<String> = path.trim().split('.').map(str::to_string).collect();
        if path.iter().any(String::is_empty) {
            return Err(SweepError::BadAxis(spec.to_string()));
        }
        let labels = split_values(values);
        let values = labels.iter().map(|v| parse_value(v)).collect::<Result<_, _>>()?;
        Ok(Self { path, values, labels })
    }
}

/// Returns `base` with `path` set to `value`.
pub fn apply(base: &ScenarioConfig, path: &[String], value: &toml::Value) -> Result<ScenarioConfig, SweepError> {
    let mut doc: toml::Table = toml::from_str(&base.to_toml()?).map_err(ConfigError::from)?;
    let key = path.join(".");
    let (last, parents) = path.split_last().ok_or_else(|| SweepError::MissingKey(key.clone()))?;
    let mut table = &mut doc;
    for p in parents {
        table = match table.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => return Err(SweepError::MissingKey(key)),
        };
    }
    table.insert(last.clone(), value.clone());
    let text = toml::to_string(&doc).map_err(ConfigError::from)?;
    Ok(ScenarioConfig::from_toml(&text)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMember {
    pub label: String,
    pub dir: PathBuf,
    pub manifest: Option<RunManifest>,
    pub error: Option<String>,
}

pub const COMPARISON_HEADER: &str =
    "label,status,steps,violations,f0,f_final,eps_dissipation,entropy_final,theta_min,theta_inf,theta_hat_inf";

pub fn comparison_csv(members: &[SweepMember]) -> String {
    let mut s = format!("{COMPARISON_HEADER}\n");
    for m in members {
        let row = match &m.manifest {
            Some(r) => {
                let x = &r.summary;
                let ti = x.theta_infinity.map_or(String::new(), |t| format!("{:e}", t.theta_inf));
                format!(
                    "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{ti},{:e}",
                    csv_field(&m.label),
                    if r.passed() { "ok" } else { "violations" },
                    x.steps,
                    x.violations,
                    x.f0,
                    x.f_final,
                    x.eps_dissipation,
                    x.entropy_final,
                    x.theta_min,
                    x.theta_hat_infinity
                )
            }
            None => format!("{},failed,,,,,,,,,", csv_field(&m.label)),
        };
        s.push_str(&row);
        s.push('\n');
    }
    s
}

/// Quotes a CSV field when it contains a separator or quote.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Directory-safe form of a label: runs of other characters become one `_`.
fn sanitize(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_alphanumeric() || "-.".contains(c) {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').chars().take(48).collect()
}

/// An error with its chain of causes on one line.
fn describe(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut cur = e.source();
    while let Some(c) = cur {
        s.push_str(": ");
        s.push_str(&c.to_string());
        cur = c.source();
    }
    s
}

/// Runs every member concurrently, each in `out_dir/<index>_<label>`, and
/// writes `comparison.csv`. Failed members are recorded, not fatal. An axis
/// with no values gives a single run of `base` directly in `out_dir`.
pub fn sweep(base: &ScenarioConfig, axis: Option<&Axis>, out_dir: &Path) -> Result<Vec<SweepMember>, SweepError> {
    let mut jobs: Vec<(String, PathBuf, Result<ScenarioConfig, String>)> = Vec::new();
    match axis.filter(|a| !a.values.is_empty()) {
        None => jobs.push(("base".into(), out_dir.to_path_buf(), Ok(base.clone()))),
        Some(a) => {
            for (i, (v, label)) in a.values.iter().zip(&a.labels).enumerate() {
                let mut cfg = apply(base, &a.path, v).map_err(|e| describe(&e));
                if let Ok(c) = cfg.as_mut() {
                    c.name = format!("{}[{}={}]", base.name, a.path.join("."), label);
                }
                jobs.push((label.clone(), out_dir.join(format!("{i:02}_{}", sanitize(label))), cfg));
            }
        }
    }
    let members: Vec<SweepMember> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(label, dir, cfg)| {
                s.spawn(move || {
                    let result = cfg.and_then(|c| {
                        run(&c, &RunOptions { out_dir: Some(dir.clone()), ..Default::default() }).map_err(|e| describe(&e))
                    });
                    let (manifest, error) = match result {
                        Ok(o) => (Some(o.manifest), None),
                        Err(e) => (None, Some(e)),
                    };
                    SweepMember { label, dir, manifest, error }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep member panicked")).collect()
    });
    std::fs::create_dir_all(out_dir).map_err(|source| SweepError::Io { path: out_dir.to_path_buf(), source })?;
    let path = out_dir.join("comparison.csv");
    std::fs::write(&path, comparison_csv(&members)).map_err(|source| SweepError::Io { path, source })?;
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("solver.eps_reg=0,1e-6,1e-4").unwrap();
        assert_eq!(a.path, ["solver", "eps_reg"]);
        assert_eq!(a.values, vec![toml::Value::Integer(0), toml::Value::Float(1e-6), toml::Value::Float(1e-4)]);
        let k = Axis::parse(r#"material.kappa={ variant = "Constant", k0 = 1.0 },{ variant = "DebyeLike", k0 = 1.0, xi_d = 1.0 }"#)
            .unwrap();
        assert_eq!(k.values.len(), 2);
        assert!(Axis::parse("noequals").is_err());
    }

    #[test]
    fn apply_sets_nested_values() {
        let base = builtin("trivial").unwrap();
        let c = apply(&base, &["solver".into(), "eps_reg".into()], &toml::Value::Float(1e-6)).unwrap();
        assert_eq!(c.solver.eps_reg, 1e-6);
        // integers are accepted for float fields
        let c = apply(&base, &["solver".into(), "eps_reg".into()], &toml::Value::Integer(0)).unwrap();
        assert_eq!(c.solver.eps_reg, 0.0);
        assert!(apply(&base, &["solver".into(), "nope".into()], &toml::Value::Integer(0)).is_err());
    }

    #[test]
    fn labels_are_quoted_and_sanitized() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("1e-6"), "1e-6");
        assert_eq!(sanitize(r#"{ variant = "Constant", k0 = 1.0 }"#), "variant_Constant_k0_1.0");
    }

    #[test]
    fn failed_members_do_not_stop_the_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let base = builtin("trivial").unwrap();
        let axis = Axis::parse("material.diffusivity=1.0,-1.0").unwrap();
        let members = sweep(&base, Some(&axis), dir.path()).unwrap();
        assert!(members[0].manifest.as_ref().is_some_and(|m| m.passed()));
        assert!(members[1].error.as_deref().is_some_and(|e| e.contains("diffusivity")));
        let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("-1.0,failed"));
    }
}
