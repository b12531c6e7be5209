//! Complex numbers on the wire are `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    let [re, im] = <[f64; 2]>::deserialize(d)?;
    Ok(C64::new(re, im))
}

/// Same convention for nested arrays of complex numbers.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(rows: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<Vec<[f64; 2]>> = rows
            .iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        let pairs = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect())
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}
