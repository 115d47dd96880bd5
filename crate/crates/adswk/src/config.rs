//! Sectioned plain-text configuration.
//!
//! The format is a flat `[section]` / `key = value` document with `#`
//! comments. Parsing is total: every rejection carries the line and
//! column it happened at, and validation runs before anything else so a
//! bad file never starts a partial run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{label}:{line}:{col}: {msg}")]
    Syntax { label: String, line: usize, col: usize, msg: String },
    #[error("{label}: {msg}")]
    Invalid { label: String, msg: String },
    #[error("cannot read {label}: {source}")]
    Io {
        label: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    label: String,
    raw: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

/// Known keys per section; anything else is rejected at validation with
/// the location of the offending line.
const REGISTRY: &[(&str, &[&str])] = &[
    ("model", &["family", "n"]),
    (
        "integrator",
        &[
            "rel_tol",
            "abs_tol",
            "max_step",
            "sample_ds",
            "cfl",
            "t_end",
            "closure",
            "closure_order",
            "sample_every",
        ],
    ),
    ("grid", &["nx", "ny", "x_min", "y_width", "cells", "gamma"]),
    (
        "spectral",
        &["n", "lambda", "sigma", "sigma_min", "sigma_max", "x_bc", "k"],
    ),
    ("experiment", &["id", "seed", "threads", "lambdas"]),
    ("output", &["dir", "formats"]),
];

impl Config {
    pub fn parse(text: &str, label: &str) -> Result<Config, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let col = line.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
            if let Some(name) = trimmed.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    label: label.to_string(),
                    line: line_no,
                    col,
                    msg: "section header is missing its closing bracket".into(),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(ConfigError::Syntax {
                        label: label.to_string(),
                        line: line_no,
                        col,
                        msg: "empty section name".into(),
                    });
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let section = current.clone().ok_or_else(|| ConfigError::Syntax {
                label: label.to_string(),
                line: line_no,
                col,
                msg: format!("`{trimmed}` appears before any [section] header"),
            })?;
            let eq = trimmed.find('=').ok_or_else(|| ConfigError::Syntax {
                label: label.to_string(),
                line: line_no,
                col,
                msg: format!("expected `key = value`, got `{trimmed}`"),
            })?;
            let key = trimmed[..eq].trim();
            let value = trimmed[eq + 1..].trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    label: label.to_string(),
                    line: line_no,
                    col,
                    msg: "empty key".into(),
                });
            }
            let entry = Entry { value: value.to_string(), line: line_no, col };
            if let Some(old) = sections.get_mut(&section).unwrap().insert(key.to_string(), entry)
            {
                return Err(ConfigError::Syntax {
                    label: label.to_string(),
                    line: line_no,
                    col,
                    msg: format!(
                        "duplicate key `{key}` in [{section}] (first set on line {})",
                        old.line
                    ),
                });
            }
        }
        Ok(Config { label: label.to_string(), raw: text.to_string(), sections })
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { label: label.clone(), source })?;
        let cfg = Config::parse(&text, &label)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The verbatim document, for manifest snapshots.
    pub fn raw_text(&self) -> &str {
        &self.raw
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> String {
        self.get_str(section, key).unwrap_or(default).to_string()
    }

    fn parse_at<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| ConfigError::Syntax {
                label: self.label.clone(),
                line: e.line,
                col: e.col,
                msg: format!(
                    "value `{}` for {section}.{key} is not a {}",
                    e.value,
                    std::any::type_name::<T>()
                ),
            }),
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parse_at::<f64>(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parse_at::<usize>(section, key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.parse_at::<u64>(section, key)?.unwrap_or(default))
    }

    /// Comma-separated float list.
    pub fn f64_list_or(
        &self,
        section: &str,
        key: &str,
        default: &[f64],
    ) -> Result<Vec<f64>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(default.to_vec()),
            Some(e) => e
                .value
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| ConfigError::Syntax {
                    label: self.label.clone(),
                    line: e.line,
                    col: e.col,
                    msg: format!("value `{}` for {section}.{key} is not a float list", e.value),
                }),
        }
    }

    /// Spatial dimension; [spectral] may override [model] for mode-only
    /// runs.
    pub fn dimension(&self) -> Result<usize, ConfigError> {
        if let Some(n) = self.parse_at::<usize>("spectral", "n")? {
            return Ok(n);
        }
        Ok(self.parse_at::<usize>("model", "n")?.unwrap_or(3))
    }

    fn invalid(&self, msg: String) -> ConfigError {
        ConfigError::Invalid { label: self.label.clone(), msg }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, entries) in &self.sections {
            let known = REGISTRY.iter().find(|(s, _)| s == name);
            let Some((_, keys)) = known else {
                let line = entries.values().map(|e| e.line).min().unwrap_or(1);
                return Err(ConfigError::Syntax {
                    label: self.label.clone(),
                    line: line.saturating_sub(1).max(1),
                    col: 1,
                    msg: format!("unknown section [{name}]"),
                });
            };
            for (key, e) in entries {
                if !keys.contains(&key.as_str()) {
                    let mut hint = String::new();
                    write!(hint, "unknown key `{key}` in [{name}]; known keys: {}", keys.join(", "))
                        .ok();
                    return Err(ConfigError::Syntax {
                        label: self.label.clone(),
                        line: e.line,
                        col: e.col,
                        msg: hint,
                    });
                }
            }
        }

        let n = self.dimension()?;
        if n < 3 {
            return Err(self.invalid(format!("dimension n = {n} must be at least 3")));
        }
        let nx = self.usize_or("grid", "nx", 128)?;
        if nx < 8 {
            return Err(self.invalid(format!("grid.nx = {nx} must be at least 8")));
        }
        let ny = self.usize_or("grid", "ny", 1)?;
        if ny < 1 {
            return Err(self.invalid("grid.ny must be positive".into()));
        }
        let x_min = self.f64_or("grid", "x_min", 0.05)?;
        if !(x_min > 0.0 && x_min < 1.0) {
            return Err(self.invalid(format!("grid.x_min = {x_min} must lie in (0, 1)")));
        }
        let cells = self.usize_or("grid", "cells", 10_000)?;
        if cells < 16 {
            return Err(self.invalid(format!("grid.cells = {cells} must be at least 16")));
        }
        let gamma = self.f64_or("grid", "gamma", 3.0)?;
        if gamma < 1.0 {
            return Err(self.invalid(format!("grid.gamma = {gamma} must be at least 1")));
        }
        for key in ["rel_tol", "abs_tol", "max_step", "sample_ds"] {
            if let Some(v) = self.parse_at::<f64>("integrator", key)? {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(self.invalid(format!("integrator.{key} = {v} must be positive")));
                }
            }
        }
        let cfl = self.f64_or("integrator", "cfl", 0.4)?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(self.invalid(format!("integrator.cfl = {cfl} must lie in (0, 1]")));
        }
        let closure = self.str_or("integrator", "closure", "indicial");
        if closure != "wall" && closure != "indicial" {
            return Err(self.invalid(format!(
                "integrator.closure = `{closure}` must be `wall` or `indicial`"
            )));
        }
        let lambda = self.f64_or("spectral", "lambda", 0.0)?;
        if !lambda.is_finite() {
            return Err(self.invalid("spectral.lambda must be finite".into()));
        }
        let bound = 0.25 * ((n - 1) as f64).powi(2);
        if closure == "indicial" && lambda >= bound {
            return Err(self.invalid(format!(
                "spectral.lambda = {lambda} is at or above the Breitenlohner-Freedman \
                 bound (n-1)^2/4 = {bound} for n = {n}; the indicial boundary closure \
                 only exists below it (use integrator.closure = wall to probe this range)"
            )));
        }
        let family = self.str_or("model", "family", "flat");
        if !["flat", "ads"].contains(&family.as_str()) {
            return Err(self.invalid(format!(
                "model.family = `{family}` must be `flat` or `ads`"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "# demo\n[model]\nfamily = flat\nn = 4 # inline\n\n[grid]\nnx = 64\n";
        let cfg = Config::parse(text, "demo").unwrap();
        assert_eq!(cfg.get_str("model", "family"), Some("flat"));
        assert_eq!(cfg.usize_or("model", "n", 0).unwrap(), 4);
        assert_eq!(cfg.usize_or("grid", "nx", 0).unwrap(), 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_with_location() {
        let text = "[model]\nfamily = flat\nbogus_key = 1\n";
        let cfg = Config::parse(text, "bad.cfg").unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("bad.cfg:3:1"), "location missing: {msg}");
        assert!(msg.contains("bogus_key"), "key missing: {msg}");
    }

    #[test]
    fn rejects_key_before_section() {
        let err = Config::parse("x = 1\n", "f").unwrap_err();
        assert!(format!("{err}").contains("f:1:1"));
    }

    #[test]
    fn rejects_duplicate_key() {
        let err = Config::parse("[grid]\nnx = 3\nnx = 4\n", "f").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("duplicate key `nx`"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn names_the_threshold_when_closure_cannot_exist() {
        let text = "[model]\nn = 4\n[spectral]\nlambda = 3.25\n";
        let cfg = Config::parse(text, "f").unwrap();
        let msg = format!("{}", cfg.validate().unwrap_err());
        assert!(msg.contains("2.25"), "bound value missing: {msg}");
        assert!(msg.contains("Breitenlohner-Freedman"), "bound name missing: {msg}");
        // the wall closure accepts the same lambda
        let text = "[model]\nn = 4\n[spectral]\nlambda = 3.25\n[integrator]\nclosure = wall\n";
        Config::parse(text, "f").unwrap().validate().unwrap();
    }

    #[test]
    fn bad_number_reports_its_own_line() {
        let text = "[grid]\nnx = sixty\n";
        let cfg = Config::parse(text, "f").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("f:2:1"), "{err}");
    }
}
