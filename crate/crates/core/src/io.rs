//! Serialization helpers: the matrix JSON format `{"n", "re", "im"}`,
//! floats that may be infinite, content hashes and CSV number formatting.

use std::fs;
use std::path::Path;

use serde::de::{self, DeserializeOwned, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::algebra::{AlgebraElement, CMatrix, C64};
use crate::error::{Error, Result};

/// Row-major real and imaginary parts of a square complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|r| (0..n).map(|c| m[(r, c)].re).collect()).collect();
        let im = (0..n).map(|r| (0..n).map(|c| m[(r, c)].im).collect()).collect();
        Self { n, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.n;
        let rows_ok = |v: &Vec<Vec<f64>>| v.len() == n && v.iter().all(|row| row.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::Serialization(format!(
                "matrix payload is not {n}x{n}"
            )));
        }
        let m = CMatrix::from_fn(n, n, |r, c| C64::new(self.re[r][c], self.im[r][c]));
        Self::check_finite(&m)?;
        Ok(m)
    }

    pub fn check_finite(m: &CMatrix) -> Result<()> {
        if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Serialization("matrix contains NaN or infinity".into()))
        }
    }
}

/// `#[serde(with = "matrix_serde")]` for `CMatrix` fields.
pub mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::check_finite(m).map_err(serde::ser::Error::custom)?;
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(de::Error::custom)
    }
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_serde::serialize(self.as_matrix(), s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = matrix_serde::deserialize(d)?;
        AlgebraElement::new(m).map_err(de::Error::custom)
    }
}

/// `f64` that serializes infinities and NaN as `"inf"`, `"-inf"`, `"nan"`.
pub mod ext_float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(special_str(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(ExtFloatVisitor)
    }

    struct ExtFloatVisitor;

    impl Visitor<'_> for ExtFloatVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }
}

/// `Option<f64>` variant of [`ext_float`]; `None` is `null`.
pub mod ext_float_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => ext_float::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "ext_float")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

fn special_str(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// CSV number with 17 significant digits; non-finite values as
/// `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        special_str(x).to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical matrix JSON encoding.
pub fn matrix_hash(m: &CMatrix) -> String {
    let json = serde_json::to_vec(&MatrixJson::from_matrix(m)).expect("finite matrix");
    sha256_hex(&json)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_pretty(value)?)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    read_json::<MatrixJson>(path)?.to_matrix()
}
