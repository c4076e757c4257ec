use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Number of fixtures, and therefore of labels per time step.
pub const N_LABELS: usize = 5;

/// A household water end-use fixture. The declaration order is the canonical
/// label order used by every file format and matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    Toilet,
    Shower,
    Faucet,
    ClothesWasher,
    Dishwasher,
}

pub const FIXTURES: [Fixture; N_LABELS] = [
    Fixture::Toilet,
    Fixture::Shower,
    Fixture::Faucet,
    Fixture::ClothesWasher,
    Fixture::Dishwasher,
];

impl Fixture {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Fixture> {
        FIXTURES.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Toilet => "toilet",
            Fixture::Shower => "shower",
            Fixture::Faucet => "faucet",
            Fixture::ClothesWasher => "clothes_washer",
            Fixture::Dishwasher => "dishwasher",
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        FIXTURES
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown fixture '{s}'")))
    }
}

/// Active/inactive state of the five fixtures at one time step, packed into
/// the low five bits (bit `k` is fixture `k` in canonical order).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(u8);

impl LabelVector {
    pub const NONE: LabelVector = LabelVector(0);

    pub fn from_mask(mask: u8) -> Option<LabelVector> {
        (mask < (1 << N_LABELS)).then_some(LabelVector(mask))
    }

    pub fn from_bits(bits: [bool; N_LABELS]) -> LabelVector {
        let mut v = LabelVector::NONE;
        for (k, b) in bits.into_iter().enumerate() {
            v.set(k, b);
        }
        v
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn get(self, k: usize) -> bool {
        debug_assert!(k < N_LABELS);
        self.0 >> k & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, k: usize, on: bool) {
        debug_assert!(k < N_LABELS);
        if on {
            self.0 |= 1 << k;
        } else {
            self.0 &= !(1 << k);
        }
    }

    pub fn bits(self) -> [bool; N_LABELS] {
        core::array::from_fn(|k| self.get(k))
    }

    pub fn is_none(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..N_LABELS {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(if self.get(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_names() {
        let names: alloc::vec::Vec<_> = FIXTURES.iter().map(|f| f.name()).collect();
        assert_eq!(
            names,
            ["toilet", "shower", "faucet", "clothes_washer", "dishwasher"]
        );
        for (i, f) in FIXTURES.iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(f.name().parse::<Fixture>().unwrap(), *f);
        }
        assert!("bathtub".parse::<Fixture>().is_err());
    }

    #[test]
    fn label_bits() {
        let v = LabelVector::from_bits([true, false, false, true, false]);
        assert_eq!(v.mask(), 0b01001);
        assert!(v.get(0) && v.get(3) && !v.get(4));
        assert_eq!(v.count(), 2);
        assert_eq!(alloc::format!("{v}"), "1,0,0,1,0");
        assert!(LabelVector::from_mask(32).is_none());
    }
}
