//! Integer bundles and the box domains they live in.

use crate::error::{Error, Result};
use crate::rat::Rat;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A bundle of indivisible items: one nonnegative multiplicity per item type.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bundle(Vec<u32>);

impl Bundle {
    pub fn new(multiplicities: Vec<u32>) -> Self {
        Bundle(multiplicities)
    }

    /// The zero bundle of dimension `len`.
    pub fn zeros(len: usize) -> Self {
        Bundle(vec![0; len])
    }

    /// The all-ones bundle `e`.
    pub fn ones(len: usize) -> Self {
        Bundle(vec![1; len])
    }

    /// The unit bundle `e^j` (0-based item index).
    pub fn unit(len: usize, item: usize) -> Self {
        let mut v = vec![0; len];
        v[item] = 1;
        Bundle(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn total_units(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &Bundle) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &Bundle) -> Bundle {
        debug_assert_eq!(self.len(), other.len());
        Bundle(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference; panics if `other` is not dominated by `self`.
    pub fn sub(&self, other: &Bundle) -> Bundle {
        debug_assert!(other.leq(self));
        Bundle(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn double(&self) -> Bundle {
        Bundle(self.0.iter().map(|&x| 2 * x).collect())
    }

    /// Componentwise minimum `m(x, y)`.
    pub fn meet(&self, other: &Bundle) -> Result<Bundle> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Bundle(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        ))
    }

    /// The 0/1 indicator of positive coordinates, `e(x)`. `e(0) = 0`.
    pub fn support_indicator(&self) -> Bundle {
        Bundle(self.0.iter().map(|&x| u32::from(x > 0)).collect())
    }

    /// Inner product with a rational vector.
    pub fn dot(&self, prices: &[Rat]) -> Rat {
        debug_assert_eq!(self.len(), prices.len());
        self.0
            .iter()
            .zip(prices)
            .filter(|(x, _)| **x > 0)
            .map(|(x, p)| p * Rat::from(*x))
            .sum()
    }
}

impl fmt::Debug for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
    }
}

/// Indicator bundle `e^S` of a set of item indices (0-based).
pub fn coalition_bundle(items: &[usize], len: usize) -> Result<Bundle> {
    let mut v = vec![0u32; len];
    for &j in items {
        if j >= len {
            return Err(Error::IndexOutOfRange {
                index: j + 1,
                max: len,
            });
        }
        v[j] = 1;
    }
    Ok(Bundle(v))
}

/// The finite box `C(limits) = { x : 0 <= x <= limits }`, with a fixed
/// lexicographic enumeration order (first coordinate most significant) and a
/// rank function matching that order. Every table and LP column indexed by a
/// box uses this order.
#[derive(Clone, Debug)]
pub struct Cube {
    limits: Bundle,
    strides: Vec<u64>,
    size: u64,
}

impl Cube {
    pub fn new(limits: Bundle) -> Self {
        let mut strides = vec![0u64; limits.len()];
        let mut size: u64 = 1;
        for j in (0..limits.len()).rev() {
            strides[j] = size;
            size = size
                .checked_mul(limits.get(j) as u64 + 1)
                .expect("box size overflow");
        }
        Cube {
            limits,
            strides,
            size,
        }
    }

    pub fn limits(&self) -> &Bundle {
        &self.limits
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &Bundle) -> bool {
        x.leq(&self.limits)
    }

    /// Rank of a member bundle in enumeration order.
    pub fn index_of(&self, x: &Bundle) -> usize {
        debug_assert!(self.contains(x));
        x.as_slice()
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| d as u64 * s)
            .sum::<u64>() as usize
    }

    /// Bundle at a given rank.
    pub fn at(&self, mut rank: u64) -> Bundle {
        debug_assert!(rank < self.size);
        let mut v = vec![0u32; self.limits.len()];
        for j in 0..v.len() {
            v[j] = (rank / self.strides[j]) as u32;
            rank %= self.strides[j];
        }
        Bundle(v)
    }

    /// Iterates all members in lexicographic order.
    pub fn iter(&self) -> CubeIter<'_> {
        CubeIter {
            cube: self,
            next: Some(Bundle::zeros(self.limits.len())),
        }
    }
}

pub struct CubeIter<'a> {
    cube: &'a Cube,
    next: Option<Bundle>,
}

impl Iterator for CubeIter<'_> {
    type Item = Bundle;

    fn next(&mut self) -> Option<Bundle> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for j in (0..succ.0.len()).rev() {
            if succ.0[j] < self.cube.limits.get(j) {
                succ.0[j] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ.0[j] = 0;
        }
        // current was the maximal element
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[u32]) -> Bundle {
        Bundle::new(v.to_vec())
    }

    #[test]
    fn meet_is_componentwise_min() {
        assert_eq!(b(&[2, 0, 1]).meet(&b(&[1, 1, 1])).unwrap(), b(&[1, 0, 1]));
        let x = b(&[3, 1, 4]);
        assert_eq!(x.meet(&x).unwrap(), x);
        assert_eq!(b(&[3, 3]).meet(&b(&[2, 2])).unwrap(), b(&[2, 2]));
        assert!(b(&[1]).meet(&b(&[1, 2])).is_err());
    }

    #[test]
    fn support_indicator_marks_positive_coordinates() {
        assert_eq!(b(&[2, 0, 5]).support_indicator(), b(&[1, 0, 1]));
        assert_eq!(b(&[0, 0]).support_indicator(), b(&[0, 0]));
        assert_eq!(b(&[1, 1]).support_indicator(), b(&[1, 1]));
    }

    #[test]
    fn coalition_bundle_builds_indicators() {
        assert_eq!(
            coalition_bundle(&[0, 1, 2], 5).unwrap(),
            b(&[1, 1, 1, 0, 0])
        );
        assert_eq!(coalition_bundle(&[], 3).unwrap(), b(&[0, 0, 0]));
        assert_eq!(coalition_bundle(&[4], 5).unwrap(), b(&[0, 0, 0, 0, 1]));
        assert!(coalition_bundle(&[5], 5).is_err());
    }

    #[test]
    fn cube_enumeration_is_lexicographic_and_ranked() {
        let cube = Cube::new(b(&[2, 1]));
        let all: Vec<Bundle> = cube.iter().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], b(&[0, 0]));
        assert_eq!(all[1], b(&[0, 1]));
        assert_eq!(all[2], b(&[1, 0]));
        assert_eq!(all[5], b(&[2, 1]));
        for (i, x) in all.iter().enumerate() {
            assert_eq!(cube.index_of(x), i);
            assert_eq!(&cube.at(i as u64), x);
        }
    }

    #[test]
    fn three_to_the_l_points_for_doubled_unit_box() {
        let cube = Cube::new(Bundle::ones(5).double());
        assert_eq!(cube.len(), 243);
    }
}
