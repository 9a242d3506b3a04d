//! Argument value types shared by flags and config files.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use steplab::{Rational, Vector};

/// A rational written as `num/den` or an integer. Decimals are refused.
#[derive(Clone, Debug, PartialEq)]
pub struct Rat(pub Rational);

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<Rational>().map(Rat).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Config values arrive as JSON after conversion from TOML. Strings and
/// integers become text for `FromStr`; floats are refused outright so that
/// `p = 0.5` cannot slip through as an approximation.
fn scalar_text(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        Value::Number(n) => Err(format!("decimal value {n} rejected, use num/den")),
        other => Err(format!("expected a string or integer, got {other}")),
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        scalar_text(&v).and_then(|s| s.parse()).map_err(D::Error::custom)
    }
}

/// Comma-separated list on the command line, string or array in a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl<T: fmt::Display> Serialize for List<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de, T: FromStr> Deserialize<'de> for List<T>
where
    T::Err: fmt::Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    let t = scalar_text(v)?;
                    t.parse::<T>().map_err(|e| format!("{t:?}: {e}"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(List)
                .map_err(D::Error::custom),
            v => scalar_text(&v).and_then(|s| s.parse()).map_err(D::Error::custom),
        }
    }
}

/// Parse a vector written either densely (`1/2,0,3`, indices counted from
/// `base`) or sparsely (`1:1/2,3:3`).
pub fn parse_vector(s: &str, base: usize) -> Result<Vector, String> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut pairs = Vec::with_capacity(parts.len());
    for (k, part) in parts.iter().enumerate() {
        let (i, v) = match part.split_once(':') {
            Some((i, v)) => (i.trim().parse::<usize>().map_err(|_| format!("bad index {i:?}"))?, v),
            None => (base + k, *part),
        };
        if i < base {
            return Err(format!("index {i} below {base}"));
        }
        let v: Rational = v.parse().map_err(|e: steplab::Error| e.to_string())?;
        pairs.push((i, v));
    }
    Ok(Vector::from_pairs(pairs))
}

/// Vectors separated by `;`.
pub fn parse_points(s: &str, base: usize) -> Result<Vec<Vector>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_vector(t, base))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_reject_decimals() {
        assert!("0.5".parse::<Rat>().is_err());
        assert_eq!("3/6".parse::<Rat>().unwrap().0, Rational::new(1, 2));
        let v: Result<Rat, _> = serde_json::from_value(serde_json::json!(0.5));
        assert!(v.is_err());
        let v: Rat = serde_json::from_value(serde_json::json!(2)).unwrap();
        assert_eq!(v.0, Rational::integer(2));
    }

    #[test]
    fn lists_from_text_and_arrays() {
        let a: List<u64> = "1, 2,3".parse().unwrap();
        assert_eq!(a.0, vec![1, 2, 3]);
        let b: List<Rat> = serde_json::from_value(serde_json::json!(["1/2", 1])).unwrap();
        assert_eq!(b.to_string(), "1/2,1/1");
    }

    #[test]
    fn dense_and_sparse_vectors() {
        let d = parse_vector("1/2,0,3", 1).unwrap();
        let s = parse_vector("1:1/2,3:3", 1).unwrap();
        assert_eq!(d, s);
        assert_eq!(parse_vector("1,1/2", 0).unwrap().get(0), Rational::one());
        assert!(parse_vector("0:1", 1).is_err());
        assert_eq!(parse_points("1;2;1/3", 1).unwrap().len(), 3);
    }
}
