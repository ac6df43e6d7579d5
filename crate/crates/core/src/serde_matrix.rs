//! JSON layout for matrices: row-major nested arrays, complex entries as
//! `[re, im]` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMatrix, RMatrix};

pub fn complex_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn complex_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(format!("row {i} has {} entries, expected {ncols}", r.len()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn real_rows(a: &RMatrix) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn real_from_rows(rows: &[Vec<f64>]) -> Result<RMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(format!("row {i} has {} entries, expected {ncols}", r.len()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// `#[serde(with = "serde_matrix::complex")]`
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(a: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        complex_rows(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        complex_from_rows(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "serde_matrix::complex_vec")]`
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(a: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        a.iter().map(complex_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        all.iter()
            .enumerate()
            .map(|(k, rows)| {
                complex_from_rows(rows).map_err(|e| D::Error::custom(format!("element {k}: {e}")))
            })
            .collect()
    }
}

/// `#[serde(with = "serde_matrix::real")]`
pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(a: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
        real_rows(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        real_from_rows(&rows).map_err(D::Error::custom)
    }
}
