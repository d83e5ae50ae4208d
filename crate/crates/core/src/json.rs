//! Helpers for the JSON exchange formats.
//!
//! Complex numbers are written as `[re, im]` pairs and matrices as a list of
//! rows, each row a list of `[re, im]` pairs.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;

pub fn complex_to_pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

pub fn pair_to_complex(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub fn matrix_to_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_pair(m[(r, c)])).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<C64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidArgument("matrix with no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument("ragged or empty matrix rows".into()));
    }
    let mut m = DMatrix::zeros(nrows, ncols);
    for (r, row) in rows.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidArgument("non-finite matrix entry".into()));
            }
            m[(r, c)] = pair_to_complex(p);
        }
    }
    Ok(m)
}

/// serde adaptor for a single complex scalar stored as `[re, im]`.
pub mod complex_pair {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        complex_to_pair(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(pair_to_complex(<[f64; 2]>::deserialize(d)?))
    }
}

/// serde adaptor for a list of complex scalars.
pub mod complex_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| complex_to_pair(*c)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(pair_to_complex).collect())
    }
}

/// serde adaptor for a complex matrix stored as rows of `[re, im]` pairs.
pub mod complex_matrix {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<C64>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        rows_to_matrix(&rows).map_err(de::Error::custom)
    }
}
