//! Fixed-width bit vectors: configurations `ω ∈ {0,1}^V` and vertex subsets.
//!
//! Vertex `i` (counting from 1, as in the mathematics) lives at bit position
//! `i - 1`. All modules share this indexing. The textual form lists bit 0
//! first, so `"10"` has vertex 1 occupied and vertex 2 empty.

use std::fmt;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

type Words = SmallVec<[u64; 2]>;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Bits {
    n: usize,
    words: Words,
}

impl Bits {
    fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("bit width must be at least 1"));
        }
        Ok(Self {
            n,
            words: SmallVec::from_elem(0, n.div_ceil(64)),
        })
    }

    fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(invalid(format!("mask form needs 1 <= n <= 64, got {n}")));
        }
        if n < 64 && mask >> n != 0 {
            return Err(invalid(format!("mask {mask:#x} has bits above width {n}")));
        }
        let mut words = Words::new();
        words.push(mask);
        Ok(Self { n, words })
    }

    fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut b = Self::zeros(n)?;
        for i in indices {
            if i >= n {
                return Err(invalid(format!("bit index {i} outside width {n}")));
            }
            b.set(i, true);
        }
        Ok(b)
    }

    fn parse(s: &str) -> Result<Self> {
        let mut b = Self::zeros(s.len())?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                _ => return Err(invalid(format!("bad bit character {c:?} in {s:?}"))),
            }
        }
        Ok(b)
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.n);
        let w = &mut self.words[i >> 6];
        if v {
            *w |= 1 << (i & 63);
        } else {
            *w &= !(1 << (i & 63));
        }
    }

    #[inline]
    fn swap(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.n && j < self.n);
        let d = (self.words[i >> 6] >> (i & 63) ^ self.words[j >> 6] >> (j & 63)) & 1;
        self.words[i >> 6] ^= d << (i & 63);
        self.words[j >> 6] ^= d << (j & 63);
    }

    fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn mask(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words[0])
    }

    fn check_width(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::WidthMismatch {
                expected: self.n,
                found: other.n,
            })
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.check_width(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self { n: self.n, words })
    }

    fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut b = Self::zeros(n)?;
        for w in b.words.iter_mut() {
            *w = rng.random();
        }
        b.clear_tail();
        Ok(b)
    }

    fn clear_tail(&mut self) {
        let rem = self.n & 63;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

macro_rules! bit_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name(Bits);

        impl $name {
            /// All-zero value of width `n`.
            pub fn zeros(n: usize) -> Result<Self> {
                Bits::zeros(n).map(Self)
            }

            /// All-one value of width `n`.
            pub fn ones(n: usize) -> Result<Self> {
                Bits::from_indices(n, 0..n).map(Self)
            }

            /// Build from a `u64` mask; requires `n <= 64` and no bits above `n - 1`.
            pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
                Bits::from_mask(n, mask).map(Self)
            }

            /// Build from 0-based bit positions.
            pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
                Bits::from_indices(n, indices).map(Self)
            }

            /// Parse a `0`/`1` string, bit 0 first.
            pub fn parse(s: &str) -> Result<Self> {
                Bits::parse(s).map(Self)
            }

            /// Uniformly random value of width `n`.
            pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
                Bits::uniform(n, rng).map(Self)
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.0.n
            }

            #[inline]
            pub fn get(&self, i: usize) -> bool {
                self.0.get(i)
            }

            #[inline]
            pub fn set(&mut self, i: usize, v: bool) {
                self.0.set(i, v)
            }

            /// Number of set bits.
            pub fn count(&self) -> usize {
                self.0.count_ones()
            }

            /// The `u64` mask when the width fits in one word.
            pub fn mask(&self) -> Option<u64> {
                self.0.mask()
            }

            /// Set bit positions in increasing order.
            pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
                self.0.ones()
            }

            pub fn check_width(&self, n: usize) -> Result<()> {
                if self.0.n == n {
                    Ok(())
                } else {
                    Err(Error::WidthMismatch { expected: n, found: self.0.n })
                }
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }
    };
}

bit_newtype!(
    /// A point `ω ∈ {0,1}^V`; bit `i` holds the value at vertex `i + 1`.
    Configuration
);

bit_newtype!(
    /// A subset `S ⊆ V` stored as a bit mask of the same width as the configurations it acts on.
    SubsetMask
);

impl Configuration {
    /// Swap the values at two positions (one exclusion transposition).
    #[inline]
    pub fn swap(&mut self, i: usize, j: usize) {
        self.0.swap(i, j)
    }

    /// `σ_B(ω)`: flip every bit in `b`.
    pub fn flip(&self, b: &SubsetMask) -> Result<Configuration> {
        self.0.zip_with(&b.0, |x, y| x ^ y).map(Configuration)
    }

    /// Hamming distance.
    pub fn distance(&self, other: &Configuration) -> Result<usize> {
        self.0.zip_with(&other.0, |x, y| x ^ y).map(|b| b.count_ones())
    }

    /// The set of occupied positions.
    pub fn support(&self) -> SubsetMask {
        SubsetMask(self.0.clone())
    }

    /// Positions where `self` is 0 and `other` is 1.
    pub fn raised_in(&self, other: &Configuration) -> Result<SubsetMask> {
        self.0.zip_with(&other.0, |x, y| !x & y).map(SubsetMask)
    }
}

/// `σ_B(ω)`: flip the bits of `omega` that lie in `b`.
pub fn flip(omega: &Configuration, b: &SubsetMask) -> Result<Configuration> {
    omega.flip(b)
}

impl SubsetMask {
    /// The indicator configuration `1_S`.
    pub fn indicator(&self) -> Configuration {
        Configuration(self.0.clone())
    }

    pub fn is_empty(&self) -> bool {
        self.0.words.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.0.zip_with(&other.0, |x, y| x | y).map(SubsetMask)
    }

    pub fn intersection(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.0.zip_with(&other.0, |x, y| x & y).map(SubsetMask)
    }

    pub fn difference(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.0.zip_with(&other.0, |x, y| x & !y).map(SubsetMask)
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn is_disjoint(&self, other: &SubsetMask) -> Result<bool> {
        Ok(self.intersection(other)?.is_empty())
    }

    pub fn complement(&self) -> SubsetMask {
        let mut b = self.0.clone();
        for w in b.words.iter_mut() {
            *w = !*w;
        }
        b.clear_tail();
        SubsetMask(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flip_examples() {
        let c = |s| Configuration::parse(s).unwrap();
        let m = |s| SubsetMask::parse(s).unwrap();
        assert_eq!(flip(&c("0000"), &m("0000")).unwrap(), c("0000"));
        assert_eq!(flip(&c("1010"), &m("1111")).unwrap(), c("0101"));
        assert_eq!(flip(&c("1100"), &m("0110")).unwrap(), c("1010"));
    }

    #[test]
    fn flip_rejects_width_mismatch() {
        let c = Configuration::parse("000").unwrap();
        let m = SubsetMask::parse("0000").unwrap();
        assert!(matches!(
            flip(&c, &m),
            Err(Error::WidthMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn mask_width_rules() {
        assert!(Configuration::from_mask(3, 0b1000).is_err());
        assert!(Configuration::from_mask(0, 0).is_err());
        assert_eq!(Configuration::from_mask(64, u64::MAX).unwrap().count(), 64);
        let big = Configuration::ones(130).unwrap();
        assert_eq!(big.count(), 130);
        assert_eq!(big.mask(), None);
    }

    #[test]
    fn display_lists_bit_zero_first() {
        let c = Configuration::from_indices(4, [0, 3]).unwrap();
        assert_eq!(c.to_string(), "1001");
        assert_eq!(c.mask(), Some(0b1001));
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(n in 1usize..150, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = Configuration::uniform(n, &mut rng).unwrap();
            let b = SubsetMask::uniform(n, &mut rng).unwrap();
            prop_assert_eq!(w.flip(&b).unwrap().flip(&b).unwrap(), w.clone());
            prop_assert_eq!(w.flip(&b).unwrap().distance(&w).unwrap(), b.count());
        }

        #[test]
        fn complement_partitions(n in 1usize..150, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = SubsetMask::uniform(n, &mut rng).unwrap();
            let c = s.complement();
            prop_assert!(s.is_disjoint(&c).unwrap());
            prop_assert_eq!(s.count() + c.count(), n);
        }
    }
}
