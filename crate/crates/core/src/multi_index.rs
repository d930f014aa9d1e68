//! Multi-indices for partial derivatives and monomials in one or two dimensions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exponents per axis. In one dimension the second slot is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(pub [u32; 2]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0]);

    pub fn new_1d(a: u32) -> Self {
        MultiIndex([a, 0])
    }

    pub fn new_2d(a: u32, b: u32) -> Self {
        MultiIndex([a, b])
    }

    pub fn order(&self) -> u32 {
        self.0[0] + self.0[1]
    }

    /// `α!` = ∏ α_j!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| (1..=a).map(f64::from).product::<f64>()).product()
    }

    /// Number of ordered index tuples collapsing to this multi-index.
    pub fn multinomial(&self) -> f64 {
        let n: f64 = (1..=self.order()).map(f64::from).product();
        n / self.factorial()
    }

    /// The ordered axis list, e.g. (2,1) -> [0,0,1].
    pub fn axes(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.order() as usize);
        for (axis, &a) in self.0.iter().enumerate() {
            v.extend(std::iter::repeat_n(axis, a as usize));
        }
        v
    }

    /// `x^α` at a point.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (axis, &a) in self.0.iter().enumerate() {
            if a > 0 {
                v *= x[axis].powi(a as i32);
            }
        }
        v
    }

    /// ∂^β applied to x^α: returns (coefficient, resulting index) or None if it vanishes.
    pub fn differentiate(&self, beta: &MultiIndex) -> Option<(f64, MultiIndex)> {
        let mut coef = 1.0;
        let mut out = [0u32; 2];
        for axis in 0..2 {
            let (a, b) = (self.0[axis], beta.0[axis]);
            if b > a {
                return None;
            }
            coef *= ((a - b + 1)..=a).map(f64::from).product::<f64>();
            out[axis] = a - b;
        }
        Some((coef, MultiIndex(out)))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex([self.0[0] + other.0[0], self.0[1] + other.0[1]])
    }

    /// All multi-indices of exactly this order in `dim` dimensions, in lexicographic
    /// order of the first exponent descending.
    pub fn of_order(dim: usize, order: u32) -> Vec<MultiIndex> {
        match dim {
            1 => vec![MultiIndex([order, 0])],
            _ => (0..=order).rev().map(|a| MultiIndex([a, order - a])).collect(),
        }
    }

    /// All multi-indices with order at most `max_order`.
    pub fn up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|k| Self::of_order(dim, k)).collect()
    }

    pub fn to_key(&self, dim: usize) -> String {
        if dim == 1 {
            format!("{}", self.0[0])
        } else {
            format!("{},{}", self.0[0], self.0[1])
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0[0], self.0[1])
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<u32>()
                .map_err(|_| Error::InvalidArgument(format!("bad multi-index '{s}'")))
        };
        match parts.as_slice() {
            [a] => Ok(MultiIndex([parse(a)?, 0])),
            [a, b] => Ok(MultiIndex([parse(a)?, parse(b)?])),
            _ => Err(Error::InvalidArgument(format!("bad multi-index '{s}'"))),
        }
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
