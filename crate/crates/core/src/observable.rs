//! Operators on the physical legs of a state.

use crate::json::complex_matrix;
use crate::tensor::{apply_local_map, contract, DenseTensor};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteOperator(#[serde(with = "complex_matrix")] pub DMatrix<C64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Identity,
    /// Tensor product of single-site operators; sites not listed carry the identity.
    Product { ops: BTreeMap<String, SiteOperator> },
    /// Full operator with an output leg `s` and an input leg `s'` for every site `s`.
    Dense { tensor: DenseTensor },
}

/// Input leg id of a dense operator for site `s`.
pub fn input_leg(site: &str) -> String {
    format!("{site}'")
}

impl Observable {
    pub fn product(ops: BTreeMap<String, DMatrix<C64>>) -> Self {
        Observable::Product { ops: ops.into_iter().map(|(k, m)| (k, SiteOperator(m))).collect() }
    }

    /// `O|ket⟩`, with legs in the order of `ket`.
    pub fn apply(&self, ket: &DenseTensor) -> Result<DenseTensor> {
        match self {
            Observable::Identity => Ok(ket.clone()),
            Observable::Product { ops } => {
                let mut out = ket.clone();
                for (site, op) in ops {
                    if op.0.nrows() != op.0.ncols() {
                        return Err(Error::DimensionMismatch(format!("operator on `{site}` is not square")));
                    }
                    out = apply_local_map(&out, site, &op.0)?;
                }
                Ok(out)
            }
            Observable::Dense { tensor } => {
                let pairs: Vec<(String, String)> = ket.legs().iter().map(|l| (input_leg(&l.id), l.id.clone())).collect();
                if tensor.rank() != 2 * pairs.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "dense operator of rank {} on a state of rank {}",
                        tensor.rank(),
                        pairs.len()
                    )));
                }
                let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                contract(tensor, ket, &refs)?.permuted(&ket.leg_ids())
            }
        }
    }

    /// `⟨bra| O |ket⟩`, conjugating `bra`.
    pub fn expectation(&self, bra: &DenseTensor, ket: &DenseTensor) -> Result<C64> {
        bra.inner(&self.apply(ket)?)
    }

    /// Single-site operators, if this observable is a product (identity gives an empty map).
    pub fn site_operators(&self) -> Option<BTreeMap<String, DMatrix<C64>>> {
        match self {
            Observable::Identity => Some(BTreeMap::new()),
            Observable::Product { ops } => Some(ops.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect()),
            Observable::Dense { .. } => None,
        }
    }
}

/// A random Hermitian `n × n` matrix with entries of order one.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Product of independent random Hermitian operators on the given sites.
pub fn random_product_observable<R: Rng>(sites: &[(String, usize)], rng: &mut R) -> Observable {
    Observable::product(sites.iter().map(|(s, d)| (s.clone(), random_hermitian(*d, rng))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Leg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_and_dense_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ket = DenseTensor::from_fn(vec![Leg::new("a", 2), Leg::new("b", 3)], |i| C64::new(i[0] as f64 + 1.0, i[1] as f64)).unwrap();
        let sites = vec![("a".to_string(), 2), ("b".to_string(), 3)];
        let obs = random_product_observable(&sites, &mut rng);
        let ops = obs.site_operators().unwrap();
        let dense = DenseTensor::from_fn(
            vec![Leg::new("a", 2), Leg::new("a'", 2), Leg::new("b", 3), Leg::new("b'", 3)],
            |i| ops["a"][(i[0], i[1])] * ops["b"][(i[2], i[3])],
        )
        .unwrap();
        let dense_obs = Observable::Dense { tensor: dense };
        let x = obs.expectation(&ket, &ket).unwrap();
        let y = dense_obs.expectation(&ket, &ket).unwrap();
        assert!((x - y).norm() < 1e-12);
        assert!(x.im.abs() < 1e-12);
        assert_eq!(Observable::Identity.expectation(&ket, &ket).unwrap(), C64::new(ket.norm_sqr(), 0.0));
    }

    #[test]
    fn json_round_trip() {
        let obs = Observable::product(BTreeMap::from([("v0".to_string(), DMatrix::identity(2, 2))]));
        let text = serde_json::to_string(&obs).unwrap();
        assert_eq!(text, r#"{"kind":"product","ops":{"v0":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]}}"#);
        assert_eq!(serde_json::from_str::<Observable>(&text).unwrap(), obs);
    }
}
