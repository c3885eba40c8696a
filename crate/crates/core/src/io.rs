//! Shared JSON encoding: matrices as arrays of rows of `[re, im]` pairs,
//! floats rounded to 15 significant digits.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};

pub const SCHEMA: u32 = 1;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Round every float in a JSON tree to 15 significant digits.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialize with rounded floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format("ragged matrix rows".into()));
    }
    let m = ComplexMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter()
            .flat_map(|r| r.iter().map(|&[re, im]| c(re, im))),
    );
    crate::linalg::check_finite(&m)?;
    Ok(m)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// Rows of `[re, im]` pairs; bare numbers are read as real entries.
pub fn parse_matrix(v: &Value) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<Entry>> = serde_json::from_value(v.clone())?;
    let rows: Vec<Vec<[f64; 2]>> = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|e| match e {
                    Entry::Real(x) => [x, 0.0],
                    Entry::Complex(z) => z,
                })
                .collect()
        })
        .collect();
    matrix_from_rows(&rows)
}

/// `#[serde(with = "io::matrix")]` adapter.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        matrix_from_rows(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "io::complex")]` adapter.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c(re, im))
    }
}

/// Accepts either a bare matrix or an object with a `matrix` field.
pub fn read_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let v: Value = serde_json::from_str(text)?;
    match &v {
        Value::Array(_) => parse_matrix(&v),
        Value::Object(map) => match map.get("matrix") {
            Some(m) => parse_matrix(m),
            None => Err(Error::Format("expected a `matrix` field".into())),
        },
        _ => Err(Error::Format("expected a matrix or an object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(2f64.sqrt()), 1.41421356237310);
        assert_eq!(round_sig(-0.0), -0.0);
    }

    #[test]
    fn matrix_roundtrip() {
        let m = from_real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let text = serde_json::to_string(&matrix_rows(&m)).unwrap();
        assert_eq!(read_matrix_json(&text).unwrap(), m);
        let wrapped = format!("{{\"matrix\": {text}}}");
        assert_eq!(read_matrix_json(&wrapped).unwrap(), m);
        let real = read_matrix_json("[[1, 2, 3], [4, 5, [6, 0]]]").unwrap();
        assert_eq!(real, m);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(read_matrix_json("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }
}
