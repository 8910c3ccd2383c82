use std::fmt;

use crate::error::{Error, Result};

/// Fixed-length packed bit vector. A set bit is a flipped spin or an error edge.
#[derive(Clone, PartialEq, Eq, Hash)]
pub(crate) struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub(crate) fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub(crate) fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub(crate) fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn xor_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub(crate) fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + b)
                }
            })
        })
    }
}

/// Ising spins stored one bit per site: bit clear = +1, bit set = −1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    bits: PackedBits,
}

impl SpinConfiguration {
    pub fn all_up(n: usize) -> Self {
        Self {
            bits: PackedBits::zeros(n),
        }
    }

    /// Builds a configuration from ±1 values; any other value is rejected.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut bits = PackedBits::zeros(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits.set(i, true),
                other => {
                    return Err(Error::InvalidState(format!(
                        "spin {i} has value {other}, expected ±1"
                    )))
                }
            }
        }
        Ok(Self { bits })
    }

    /// Low `n` bits of `mask` mark the down spins. Used to enumerate small state spaces.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        assert!(n <= 64, "mask enumeration limited to 64 sites");
        let mut bits = PackedBits::zeros(n);
        if n > 0 {
            let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            bits.words[0] = mask & keep;
        }
        Self { bits }
    }

    pub fn to_mask(&self) -> u64 {
        assert!(self.len() <= 64, "mask export limited to 64 sites");
        self.bits.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.len() == 0
    }

    /// Spin value at `i`, either +1 or −1.
    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        if self.bits.get(i) {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn is_down(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits.toggle(i);
    }

    pub fn set(&mut self, i: usize, spin: i8) {
        self.bits.set(i, spin < 0);
    }

    pub fn down_count(&self) -> usize {
        self.bits.count_ones()
    }

    /// Σσ.
    pub fn magnetization(&self) -> i64 {
        self.len() as i64 - 2 * self.down_count() as i64
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn down_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }
}

impl fmt::Debug for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len())
            .map(|i| if self.is_down(i) { '-' } else { '+' })
            .collect();
        write!(f, "SpinConfiguration({s})")
    }
}

/// A set of toric-code edges, e.g. an error frame or a correction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    bits: PackedBits,
}

impl EdgeSet {
    pub fn empty(n_edges: usize) -> Self {
        Self {
            bits: PackedBits::zeros(n_edges),
        }
    }

    /// Fails on any index ≥ `n_edges`. Repeated indices cancel in pairs.
    pub fn from_edges<I: IntoIterator<Item = usize>>(n_edges: usize, edges: I) -> Result<Self> {
        let mut set = Self::empty(n_edges);
        for e in edges {
            if e >= n_edges {
                return Err(Error::IndexOutOfRange {
                    index: e,
                    len: n_edges,
                });
            }
            set.toggle(e);
        }
        Ok(set)
    }

    /// Edges whose spin is down in `config`.
    pub fn from_configuration(config: &SpinConfiguration) -> Self {
        Self {
            bits: config.bits.clone(),
        }
    }

    pub fn to_configuration(&self) -> SpinConfiguration {
        SpinConfiguration {
            bits: self.bits.clone(),
        }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        self.bits.get(e)
    }

    #[inline]
    pub fn toggle(&mut self, e: usize) {
        self.bits.toggle(e);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn symmetric_difference(&self, other: &EdgeSet) -> EdgeSet {
        let mut out = self.clone();
        out.bits.xor_assign(&other.bits);
        out
    }

    pub fn xor_assign(&mut self, other: &EdgeSet) {
        self.bits.xor_assign(&other.bits);
    }

    /// Number of edges of `self` lying in `support`.
    pub fn overlap(&self, support: &[usize]) -> usize {
        support.iter().filter(|&&e| self.contains(e)).count()
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
