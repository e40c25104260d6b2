//! Concrete program inputs.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use super::program::Int;

/// A total array: finitely many explicit cells plus a default value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ArrayValue {
    #[serde(serialize_with = "serialize_cells")]
    pub cells: BTreeMap<Vec<Int>, Int>,
    pub default: Int,
}

/// Writes a cell map as a list of `{"index": [..], "value": v}` objects,
/// since JSON object keys must be strings.
pub fn serialize_cells<S: Serializer>(cells: &BTreeMap<Vec<Int>, Int>, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Cell<'a> {
        index: &'a [Int],
        value: Int,
    }
    let mut seq = s.serialize_seq(Some(cells.len()))?;
    for (index, value) in cells {
        seq.serialize_element(&Cell { index, value: *value })?;
    }
    seq.end()
}

impl ArrayValue {
    pub fn constant(default: Int) -> ArrayValue {
        ArrayValue {
            cells: BTreeMap::new(),
            default,
        }
    }

    pub fn get(&self, idx: &[Int]) -> Int {
        self.cells.get(idx).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, idx: Vec<Int>, v: Int) {
        self.cells.insert(idx, v);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConcreteInput {
    pub scalars: BTreeMap<String, Int>,
    pub arrays: BTreeMap<String, ArrayValue>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct InputError {
    pub line: usize,
    pub msg: String,
}

impl ConcreteInput {
    pub fn scalar(mut self, name: &str, v: Int) -> ConcreteInput {
        self.scalars.insert(name.to_string(), v);
        self
    }

    pub fn array(mut self, name: &str, a: ArrayValue) -> ConcreteInput {
        self.arrays.insert(name.to_string(), a);
        self
    }

    /// Parses `name = value`, `A[i, j] = value` and `A default value` lines.
    pub fn parse(text: &str) -> Result<ConcreteInput, InputError> {
        let mut input = ConcreteInput::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| InputError {
                line: n + 1,
                msg: msg.to_string(),
            };
            let int = |s: &str| s.trim().parse::<Int>().map_err(|_| err("expected an integer"));
            if let Some((name, v)) = line.split_once(" default ") {
                let v = int(v)?;
                input.arrays.entry(name.trim().to_string()).or_default().default = v;
            } else if let Some((lhs, v)) = line.split_once('=') {
                let v = int(v)?;
                let lhs = lhs.trim();
                let name = lhs.split('[').next().unwrap_or("").trim();
                if !is_ident(name) {
                    return Err(err("expected a variable name"));
                }
                if let Some((name, rest)) = lhs.split_once('[') {
                    let idx = rest.strip_suffix(']').ok_or_else(|| err("missing `]`"))?;
                    let idx = idx
                        .split(&[',', ']', '['][..])
                        .filter(|s| !s.trim().is_empty())
                        .map(int)
                        .collect::<Result<Vec<_>, _>>()?;
                    input.arrays.entry(name.trim().to_string()).or_default().set(idx, v);
                } else {
                    input.scalars.insert(lhs.to_string(), v);
                }
            } else {
                return Err(err("expected `name = value` or `A default value`"));
            }
        }
        Ok(input)
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for ConcreteInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in &self.scalars {
            writeln!(f, "{name} = {v}")?;
        }
        for (name, a) in &self.arrays {
            for (idx, v) in &a.cells {
                let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                writeln!(f, "{name}[{}] = {v}", idx.join(", "))?;
            }
            writeln!(f, "{name} default {}", a.default)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "n = 16\nA[3] = 1\nM[1, 2] = 5\nM[0][1] = -2\nA default 0\n# done\n";
        let input = ConcreteInput::parse(text).unwrap();
        assert_eq!(input.scalars["n"], 16);
        assert_eq!(input.arrays["A"].get(&[3]), 1);
        assert_eq!(input.arrays["M"].get(&[1, 2]), 5);
        assert_eq!(input.arrays["M"].get(&[0, 1]), -2);
        assert_eq!(input.arrays["M"].get(&[9, 9]), 0);
        assert_eq!(ConcreteInput::parse(&input.to_string()).unwrap(), input);
    }

    #[test]
    fn bad_line() {
        assert_eq!(ConcreteInput::parse("n := 3").unwrap_err().line, 1);
        assert!(ConcreteInput::parse("x = y").is_err());
    }
}
