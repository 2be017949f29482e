//! Digests, predicate vectors and decoy-set cardinality.
//!
//! A [`PredicateVector`] is a per-nibble box of inclusive `[lo, hi]` ranges.
//! The decoy set it describes is every digest whose nibbles all fall inside
//! their ranges, so membership costs at most `2l` comparisons no matter how
//! large the set is.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// Largest nibble value.
pub const NIBBLE_MAX: u8 = 0x0f;

/// Primes that can divide a nonzero decoy-set cardinality.
pub const SMOOTH_PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredicateError {
    #[error("length mismatch: expected {expected} nibbles, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid hex character {0:?}")]
    InvalidHex(char),
    #[error("vector text must have an even number of hex characters, got {0}")]
    OddVectorText(usize),
    #[error("nibble value {0} out of range 0..=15")]
    NibbleOutOfRange(u8),
    #[error("digest must have an even number of nibbles for byte-granular masks, got {0}")]
    OddDigest(usize),
    #[error("hit mask has {found} bits but the digest has {expected} bytes")]
    MaskLength { expected: usize, found: usize },
    #[error("vector is not expressible as a byte-granular hit mask (byte {byte} from the right)")]
    HitMaskUnsupported { byte: usize },
}

fn hex_value(c: char) -> Result<u8, PredicateError> {
    c.to_digit(16)
        .map(|d| d as u8)
        .ok_or(PredicateError::InvalidHex(c))
}

const HEX_LOWER: &[u8; 16] = b"0123456789abcdef";

/// A hash output viewed as a sequence of nibbles, most significant first.
///
/// Nibble 0 is the first character of the conventional hex rendering.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest {
    nibbles: Vec<u8>,
}

impl Digest {
    pub fn from_nibbles(nibbles: Vec<u8>) -> Result<Self, PredicateError> {
        if let Some(&bad) = nibbles.iter().find(|&&n| n > NIBBLE_MAX) {
            return Err(PredicateError::NibbleOutOfRange(bad));
        }
        Ok(Digest { nibbles })
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let nibbles = bytes.iter().flat_map(|b| [b >> 4, b & 0x0f]).collect();
        Digest { nibbles }
    }

    /// Case-insensitive hex parse.
    pub fn from_hex(text: &str) -> Result<Self, PredicateError> {
        let nibbles = text.chars().map(hex_value).collect::<Result<Vec<_>, _>>()?;
        Ok(Digest { nibbles })
    }

    pub fn len(&self) -> usize {
        self.nibbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nibbles.is_empty()
    }

    pub fn nibbles(&self) -> &[u8] {
        &self.nibbles
    }

    /// Packs nibble pairs into bytes. Fails on an odd nibble count.
    pub fn to_bytes(&self) -> Result<Vec<u8>, PredicateError> {
        if !self.nibbles.len().is_multiple_of(2) {
            return Err(PredicateError::OddDigest(self.nibbles.len()));
        }
        Ok(self
            .nibbles
            .chunks_exact(2)
            .map(|p| (p[0] << 4) | p[1])
            .collect())
    }

    /// Lowercase hex rendering.
    pub fn to_hex(&self) -> String {
        self.nibbles
            .iter()
            .map(|&n| HEX_LOWER[n as usize] as char)
            .collect()
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digest::from_hex(s)
    }
}

/// Exact size of a decoy set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cardinality(BigUint);

impl Cardinality {
    pub fn new(value: BigUint) -> Self {
        Cardinality(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// True when no prime above 13 divides the value. Zero is reported as
    /// smooth since it carries no factorization.
    pub fn is_13_smooth(&self) -> bool {
        is_13_smooth(&self.0)
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Trial division by the primes up to 13.
pub fn is_13_smooth(value: &BigUint) -> bool {
    if value.is_zero() {
        return true;
    }
    let mut rest = value.clone();
    for p in SMOOTH_PRIMES {
        let p = BigUint::from(p);
        while (&rest % &p).is_zero() {
            rest /= &p;
        }
    }
    rest.is_one()
}

/// `16^l` as an exact integer.
pub fn output_space(nibbles: usize) -> BigUint {
    BigUint::one() << (4 * nibbles)
}

/// Inclusive per-nibble ranges describing a decoy set.
///
/// Degenerate ranges (`hi < lo`) are allowed and make the set empty.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PredicateVector {
    bounds: Vec<(u8, u8)>,
}

impl PredicateVector {
    pub fn new(bounds: Vec<(u8, u8)>) -> Result<Self, PredicateError> {
        for &(lo, hi) in &bounds {
            if lo > NIBBLE_MAX {
                return Err(PredicateError::NibbleOutOfRange(lo));
            }
            if hi > NIBBLE_MAX {
                return Err(PredicateError::NibbleOutOfRange(hi));
            }
        }
        Ok(PredicateVector { bounds })
    }

    /// The flat `(lo_1, hi_1, lo_2, hi_2, ...)` form.
    pub fn from_flat(values: &[u8]) -> Result<Self, PredicateError> {
        if !values.len().is_multiple_of(2) {
            return Err(PredicateError::OddVectorText(values.len()));
        }
        Self::new(values.chunks_exact(2).map(|p| (p[0], p[1])).collect())
    }

    /// The one-element set `{target}`.
    pub fn singleton(target: &Digest) -> Self {
        PredicateVector {
            bounds: target.nibbles().iter().map(|&n| (n, n)).collect(),
        }
    }

    /// Full-range vector: every digest of length `l` is a member.
    pub fn zk(nibbles: usize) -> Self {
        PredicateVector {
            bounds: vec![(0, NIBBLE_MAX); nibbles],
        }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn bounds(&self) -> &[(u8, u8)] {
        &self.bounds
    }

    /// Width of each range, `max(hi - lo + 1, 0)`.
    pub fn widths(&self) -> impl Iterator<Item = u32> + '_ {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if hi < lo { 0 } else { u32::from(hi - lo) + 1 })
    }

    pub fn cardinality(&self) -> Cardinality {
        let mut product = BigUint::one();
        for w in self.widths() {
            if w == 0 {
                return Cardinality(BigUint::zero());
            }
            product *= w;
        }
        Cardinality(product)
    }

    /// Membership test with a length check.
    pub fn eval(&self, digest: &Digest) -> Result<bool, PredicateError> {
        if digest.len() != self.len() {
            return Err(PredicateError::LengthMismatch {
                expected: self.len(),
                found: digest.len(),
            });
        }
        Ok(self.matches_nibbles(digest.nibbles()))
    }

    /// Membership on raw nibbles; the caller guarantees equal lengths.
    #[inline]
    pub fn matches_nibbles(&self, nibbles: &[u8]) -> bool {
        debug_assert_eq!(nibbles.len(), self.bounds.len());
        self.bounds
            .iter()
            .zip(nibbles)
            .all(|(&(lo, hi), &x)| lo <= x && x <= hi)
    }

    /// Lowercase `lo hi` pairs, one pair per nibble position.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(2 * self.bounds.len());
        for &(lo, hi) in &self.bounds {
            out.push(HEX_LOWER[lo as usize] as char);
            out.push(HEX_LOWER[hi as usize] as char);
        }
        out
    }

    /// Inverse of [`to_hex`](Self::to_hex), case-insensitive.
    pub fn from_hex(text: &str) -> Result<Self, PredicateError> {
        let values = text.chars().map(hex_value).collect::<Result<Vec<_>, _>>()?;
        if values.len() % 2 != 0 {
            return Err(PredicateError::OddVectorText(values.len()));
        }
        Self::from_flat(&values)
    }

    /// Builds the byte-granular vector used by FPGA `--hit-mask` tooling:
    /// bit `n` of the mask (from the right) pins byte `n` of the target (from
    /// the right); cleared bits leave both nibbles of that byte free.
    pub fn from_hit_mask(target: &Digest, mask: &HitMask) -> Result<Self, PredicateError> {
        if !target.len().is_multiple_of(2) {
            return Err(PredicateError::OddDigest(target.len()));
        }
        let n_bytes = target.len() / 2;
        if mask.len() != n_bytes {
            return Err(PredicateError::MaskLength {
                expected: n_bytes,
                found: mask.len(),
            });
        }
        let nib = target.nibbles();
        let mut bounds = Vec::with_capacity(target.len());
        for byte in 0..n_bytes {
            let from_right = n_bytes - 1 - byte;
            for &n in &nib[2 * byte..2 * byte + 2] {
                bounds.push(if mask.bit(from_right) {
                    (n, n)
                } else {
                    (0, NIBBLE_MAX)
                });
            }
        }
        Ok(PredicateVector { bounds })
    }

    /// Converts to `(masked digest, hit mask)` if every byte is either fully
    /// pinned or fully free. Free bytes are zeroed in the returned digest.
    pub fn to_hit_mask(&self) -> Result<(Digest, HitMask), PredicateError> {
        if !self.len().is_multiple_of(2) {
            return Err(PredicateError::OddDigest(self.len()));
        }
        let n_bytes = self.len() / 2;
        let mut nibbles = Vec::with_capacity(self.len());
        let mut bits = vec![false; n_bytes];
        for byte in 0..n_bytes {
            let from_right = n_bytes - 1 - byte;
            let pair = &self.bounds[2 * byte..2 * byte + 2];
            let pinned = pair.iter().all(|&(lo, hi)| lo == hi);
            let free = pair.iter().all(|&b| b == (0, NIBBLE_MAX));
            if pinned {
                bits[from_right] = true;
                nibbles.extend(pair.iter().map(|&(lo, _)| lo));
            } else if free {
                nibbles.extend([0, 0]);
            } else {
                return Err(PredicateError::HitMaskUnsupported { byte: from_right });
            }
        }
        Ok((Digest { nibbles }, HitMask { bits }))
    }

    /// Lookup tables for matching packed digest bytes directly.
    pub fn compile(&self) -> ByteMatcher {
        ByteMatcher::new(self)
    }
}

impl fmt::Display for PredicateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for PredicateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PredicateVector({})", self.to_hex())
    }
}

impl FromStr for PredicateVector {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PredicateVector::from_hex(s)
    }
}

/// One bit per digest byte; `bit(n)` addresses byte `n` counted from the right.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct HitMask {
    bits: Vec<bool>,
}

impl HitMask {
    /// `bits[n]` is the n-th bit from the right.
    pub fn new(bits: Vec<bool>) -> Self {
        HitMask { bits }
    }

    pub fn all(n_bytes: usize, set: bool) -> Self {
        HitMask {
            bits: vec![set; n_bytes],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, from_right: usize) -> bool {
        self.bits[from_right]
    }

    /// Parses a hex mask for a digest of `n_bytes` bytes. Leading hex digits
    /// beyond `n_bytes` bits must be zero.
    pub fn from_hex(text: &str, n_bytes: usize) -> Result<Self, PredicateError> {
        let digits = text.chars().map(hex_value).collect::<Result<Vec<_>, _>>()?;
        let mut bits = vec![false; n_bytes];
        for (i, &d) in digits.iter().rev().enumerate() {
            for b in 0..4 {
                if d >> b & 1 == 1 {
                    let pos = 4 * i + b;
                    if pos >= n_bytes {
                        return Err(PredicateError::MaskLength {
                            expected: n_bytes,
                            found: pos + 1,
                        });
                    }
                    bits[pos] = true;
                }
            }
        }
        Ok(HitMask { bits })
    }

    /// Uppercase hex with `ceil(n_bytes / 4)` digits, e.g. `C001`.
    pub fn to_hex(&self) -> String {
        let width = self.bits.len().div_ceil(4);
        (0..width)
            .rev()
            .map(|i| {
                let d = (0..4)
                    .filter(|b| self.bits.get(4 * i + b).copied().unwrap_or(false))
                    .fold(0u8, |acc, b| acc | (1 << b));
                b"0123456789ABCDEF"[d as usize] as char
            })
            .collect()
    }
}

impl fmt::Display for HitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Per-byte 256-bit membership tables compiled from a [`PredicateVector`].
///
/// A digest byte matches when both of its nibbles are inside their ranges, so
/// a lookup is one bit test per digest byte.
#[derive(Clone, Debug)]
pub struct ByteMatcher {
    tables: Vec<[u64; 4]>,
    empty: bool,
}

impl ByteMatcher {
    fn new(vector: &PredicateVector) -> Self {
        let bounds = vector.bounds();
        let mut tables = Vec::with_capacity(bounds.len().div_ceil(2));
        for pair in bounds.chunks(2) {
            let mut table = [0u64; 4];
            for byte in 0u16..256 {
                let (hi_n, lo_n) = ((byte >> 4) as u8, (byte & 0x0f) as u8);
                let ok_hi = pair[0].0 <= hi_n && hi_n <= pair[0].1;
                let ok_lo = match pair.get(1) {
                    Some(&(lo, hi)) => lo <= lo_n && lo_n <= hi,
                    None => true,
                };
                if ok_hi && ok_lo {
                    table[(byte >> 6) as usize] |= 1 << (byte & 63);
                }
            }
            tables.push(table);
        }
        ByteMatcher {
            tables,
            empty: bounds.is_empty(),
        }
    }

    /// Number of digest bytes this matcher expects.
    pub fn byte_len(&self) -> usize {
        self.tables.len()
    }

    #[inline]
    pub fn matches(&self, digest: &[u8]) -> bool {
        debug_assert_eq!(digest.len(), self.tables.len());
        if self.empty {
            return true;
        }
        self.tables
            .iter()
            .zip(digest)
            .all(|(t, &b)| t[(b >> 6) as usize] >> (b & 63) & 1 == 1)
    }
}
