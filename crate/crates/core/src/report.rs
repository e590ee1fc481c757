//! Report primitives: extended reals, 17-significant-digit CSV, JSON helpers.
//!
//! CSV files use LF line endings, `.` decimal separators and 17 significant
//! digits so that values round-trip bit-exactly through the loader.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::io::Write;
use std::path::Path;

/// Extended real line value: finite or +infinity, never a sentinel float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinity => None,
        }
    }

    /// CSV text form: 17-significant-digit float or `inf`.
    pub fn to_csv_field(&self) -> String {
        match self {
            ExtReal::Finite(v) => fmt_float(*v),
            ExtReal::Infinity => "inf".to_string(),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_csv_field())
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(ExtReal::Finite)
                .ok_or_else(|| D::Error::custom("non-f64 number")),
            serde_json::Value::String(s) if s == "inf" => Ok(ExtReal::Infinity),
            other => Err(D::Error::custom(format!("invalid extended real: {other}"))),
        }
    }
}

/// 17-significant-digit decimal form; round-trips through `str::parse`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_float(s: &str) -> Option<f64> {
    if s == "inf" {
        return None;
    }
    s.parse().ok()
}

#[derive(Debug, thiserror::Error)]
pub enum IoFailure {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv at {path}:{line}")]
    Malformed { path: String, line: usize },
}

/// Writes a CSV table; every row must have the header's arity.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), IoFailure> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|source| IoFailure::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(buf.as_bytes()).map_err(|source| IoFailure::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads back a CSV table written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoFailure> {
    let text = std::fs::read_to_string(path).map_err(|source| IoFailure::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IoFailure::Malformed {
            path: path.display().to_string(),
            line: 0,
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(IoFailure::Malformed {
                path: path.display().to_string(),
                line: i + 2,
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes a JSON value with a trailing newline (stable field order comes
/// from the struct definitions).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoFailure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| IoFailure::Io {
        path: path.display().to_string(),
        source,
    })
}
