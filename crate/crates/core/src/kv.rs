//! Line-based `key = value` text format shared by problem and config files.
//!
//! Blank lines and `#` comments are ignored. Vector values are
//! comma-separated. Keys may repeat; callers decide whether that is legal.

use nalgebra::{Vector3, Vector4};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("duplicate key `{key}` on line {line}")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Entry {
    fn err(&self, msg: impl Into<String>) -> KvError {
        KvError::Value {
            line: self.line,
            key: self.key.clone(),
            msg: msg.into(),
        }
    }

    pub fn f64(&self) -> Result<f64, KvError> {
        let v: f64 = self
            .value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a number", self.value)))?;
        if !v.is_finite() {
            return Err(self.err("value must be finite"));
        }
        Ok(v)
    }

    pub fn usize(&self) -> Result<usize, KvError> {
        self.value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a nonnegative integer", self.value)))
    }

    pub fn vec(&self, len: usize) -> Result<Vec<f64>, KvError> {
        let parts: Vec<&str> = self.value.split(',').map(str::trim).collect();
        if parts.len() != len {
            return Err(self.err(format!("expected {len} comma-separated values, got {}", parts.len())));
        }
        parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("`{p}` is not a finite number")))
            })
            .collect()
    }

    pub fn vec3(&self) -> Result<Vector3<f64>, KvError> {
        let v = self.vec(3)?;
        Ok(Vector3::new(v[0], v[1], v[2]))
    }

    pub fn vec4(&self) -> Result<Vector4<f64>, KvError> {
        let v = self.vec(4)?;
        Ok(Vector4::new(v[0], v[1], v[2], v[3]))
    }
}

pub fn parse(text: &str) -> Result<Vec<Entry>, KvError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(KvError::Syntax { line })?;
        let key = k.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(KvError::Syntax { line });
        }
        out.push(Entry {
            key: key.to_string(),
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

/// Rejects repeated keys unless listed in `repeatable`.
pub fn check_unique(entries: &[Entry], repeatable: &[&str]) -> Result<(), KvError> {
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if !repeatable.contains(&e.key.as_str()) && !seen.insert(e.key.as_str()) {
            return Err(KvError::Duplicate {
                line: e.line,
                key: e.key.clone(),
            });
        }
    }
    Ok(())
}

pub fn format_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_vectors() {
        let e = parse("# header\n start.r = 1, 2,3  # trailing\n\nN=40\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].vec3().unwrap(), Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(e[1].usize().unwrap(), 40);
        assert_eq!(e[1].line, 4);
    }

    #[test]
    fn syntax_errors_carry_line() {
        assert_eq!(parse("a = 1\nbogus\n"), Err(KvError::Syntax { line: 2 }));
    }

    #[test]
    fn wrong_arity_is_an_error() {
        let e = parse("start.r = 1, 2").unwrap();
        assert!(matches!(e[0].vec3(), Err(KvError::Value { .. })));
    }

    #[test]
    fn duplicates_detected() {
        let e = parse("a = 1\na = 2").unwrap();
        assert!(check_unique(&e, &[]).is_err());
        assert!(check_unique(&e, &["a"]).is_ok());
    }
}
