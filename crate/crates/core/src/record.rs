//! Line-oriented `key=value` records shared by every report type.
//!
//! A record renders as a single line, e.g.
//! `report=quadratic_growth passed=true worst_violation=0.0000000000000000e0 ...`.
//! Floats are written with 17 significant digits so that parsing the line
//! recovers the exact `f64`; vectors are comma-separated with no spaces.

use std::fmt;

/// A single value in a [`ReportRecord`].
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Vector(Vec<f64>),
}

/// Format a float with enough digits to round-trip.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Float(v) => f.write_str(&format_float(*v)),
            Field::Int(v) => write!(f, "{v}"),
            Field::Bool(v) => write!(f, "{v}"),
            Field::Text(s) => f.write_str(s),
            Field::Vector(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| format_float(*x)).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Ordered collection of named fields, headed by a report name.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub name: String,
    pub fields: Vec<(String, Field)>,
}

impl ReportRecord {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            fields: Vec::new(),
        }
    }

    pub fn push(mut self, key: impl Into<String>, value: Field) -> Self {
        self.fields.push((key.into(), value));
        self
    }

    pub fn float(self, key: &str, v: f64) -> Self {
        self.push(key, Field::Float(v))
    }

    pub fn int(self, key: &str, v: u64) -> Self {
        self.push(key, Field::Int(v))
    }

    pub fn flag(self, key: &str, v: bool) -> Self {
        self.push(key, Field::Bool(v))
    }

    pub fn text(self, key: &str, v: impl Into<String>) -> Self {
        self.push(key, Field::Text(v.into()))
    }

    pub fn vector(self, key: &str, v: &[f64]) -> Self {
        self.push(key, Field::Vector(v.to_vec()))
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Render as one line with no trailing newline.
    pub fn to_line(&self) -> String {
        let mut line = format!("report={}", self.name);
        for (k, v) in &self.fields {
            line.push(' ');
            line.push_str(k);
            line.push('=');
            line.push_str(&v.to_string());
        }
        line
    }
}

impl fmt::Display for ReportRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}
