//! One-way hash backends.
//!
//! Backends are stateless and registered by lowercase identifier. The
//! registry is open: a slow KDF only has to implement [`Hasher`].

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use md4::Md4;
use sha2::{Digest as _, Sha256 as Sha256Core};
use thiserror::Error;

use crate::predicate::{Digest, PredicateError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("unknown hash algorithm {0:?}")]
    UnknownAlgo(String),
    #[error("password is not valid UTF-8; {0} requires UTF-8 input")]
    InvalidUtf8(&'static str),
    #[error("digest {0:?} does not parse: {1}")]
    BadDigest(String, PredicateError),
    #[error("digest has {found} nibbles but {algo} produces {expected}")]
    DigestLength {
        algo: String,
        expected: usize,
        found: usize,
    },
}

pub trait Hasher: Send + Sync {
    /// Wire and CLI identifier, lowercase.
    fn id(&self) -> &str;

    /// Digest length `l` in nibbles.
    fn digest_nibbles(&self) -> usize;

    /// Writes the raw digest into `out`, which is exactly `l / 2` bytes.
    fn hash_into(&self, password: &[u8], out: &mut [u8]) -> Result<(), HashError>;

    fn digest_bytes(&self) -> usize {
        self.digest_nibbles() / 2
    }

    fn digest(&self, password: &[u8]) -> Result<Digest, HashError> {
        let mut out = vec![0u8; self.digest_bytes()];
        self.hash_into(password, &mut out)?;
        Ok(Digest::from_bytes(&out))
    }

    /// Parses a digest in hex and checks its length against this backend.
    fn parse_digest(&self, hex: &str) -> Result<Digest, HashError> {
        let d = Digest::from_hex(hex).map_err(|e| HashError::BadDigest(hex.to_string(), e))?;
        if d.len() != self.digest_nibbles() {
            return Err(HashError::DigestLength {
                algo: self.id().to_string(),
                expected: self.digest_nibbles(),
                found: d.len(),
            });
        }
        Ok(d)
    }
}

/// Standard reflected CRC-32 (polynomial 0xEDB88320, final XOR), rendered
/// big-endian so the hex matches the usual `crc32` output.
#[derive(Debug, Default, Clone, Copy)]
pub struct Crc32;

impl Hasher for Crc32 {
    fn id(&self) -> &str {
        "crc32"
    }

    fn digest_nibbles(&self) -> usize {
        8
    }

    #[inline]
    fn hash_into(&self, password: &[u8], out: &mut [u8]) -> Result<(), HashError> {
        out.copy_from_slice(&crc32fast::hash(password).to_be_bytes());
        Ok(())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Sha256;

impl Hasher for Sha256 {
    fn id(&self) -> &str {
        "sha256"
    }

    fn digest_nibbles(&self) -> usize {
        64
    }

    #[inline]
    fn hash_into(&self, password: &[u8], out: &mut [u8]) -> Result<(), HashError> {
        out.copy_from_slice(&Sha256Core::digest(password));
        Ok(())
    }
}

/// NT hash: MD4 over the UTF-16LE encoding of the password.
#[derive(Debug, Default, Clone, Copy)]
pub struct Ntlm;

impl Hasher for Ntlm {
    fn id(&self) -> &str {
        "ntlm"
    }

    fn digest_nibbles(&self) -> usize {
        32
    }

    fn hash_into(&self, password: &[u8], out: &mut [u8]) -> Result<(), HashError> {
        let text = std::str::from_utf8(password).map_err(|_| HashError::InvalidUtf8("ntlm"))?;
        // Candidates are capped at 256 bytes, which never exceeds 256 UTF-16 units.
        let mut stack = [0u8; 512];
        let mut heap;
        let buf: &mut [u8] = if text.len() <= 256 {
            &mut stack
        } else {
            heap = vec![0u8; 4 * text.len()];
            &mut heap
        };
        let mut n = 0;
        for unit in text.encode_utf16() {
            buf[n..n + 2].copy_from_slice(&unit.to_le_bytes());
            n += 2;
        }
        out.copy_from_slice(&Md4::digest(&buf[..n]));
        Ok(())
    }
}

/// Identity and measured speed of a backend, as reported in ACK-H.
#[derive(Debug, Clone, PartialEq)]
pub struct HashAlgoDescriptor {
    pub algo_id: String,
    pub digest_nibbles: usize,
    pub reference_rate: f64,
}

#[derive(Clone)]
pub struct Registry {
    backends: BTreeMap<String, Arc<dyn Hasher>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        r.register(Arc::new(Crc32));
        r.register(Arc::new(Sha256));
        r.register(Arc::new(Ntlm));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            backends: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, hasher: Arc<dyn Hasher>) {
        self.backends.insert(hasher.id().to_string(), hasher);
    }

    pub fn get(&self, algo_id: &str) -> Result<Arc<dyn Hasher>, HashError> {
        self.backends
            .get(algo_id)
            .cloned()
            .ok_or_else(|| HashError::UnknownAlgo(algo_id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.backends.keys().map(String::as_str)
    }

    pub fn digest(&self, algo_id: &str, password: &[u8]) -> Result<Digest, HashError> {
        self.get(algo_id)?.digest(password)
    }

    pub fn describe(&self, algo_id: &str, sample_budget: u64) -> Result<HashAlgoDescriptor, HashError> {
        let h = self.get(algo_id)?;
        Ok(HashAlgoDescriptor {
            algo_id: algo_id.to_string(),
            digest_nibbles: h.digest_nibbles(),
            reference_rate: measure_rate(h.as_ref(), sample_budget),
        })
    }
}

/// Smallest budget accepted by [`measure_rate`].
pub const MIN_RATE_BUDGET: u64 = 100_000;

/// Single-threaded hashes per second over `sample_budget` synthetic 8-digit
/// inputs. Budgets below [`MIN_RATE_BUDGET`] are raised to it.
pub fn measure_rate(hasher: &dyn Hasher, sample_budget: u64) -> f64 {
    let budget = sample_budget.max(MIN_RATE_BUDGET);
    let mut out = vec![0u8; hasher.digest_bytes()];
    let mut input = *b"00000000";
    let mut sink = 0u8;
    let start = Instant::now();
    for i in 0..budget {
        let mut v = i;
        for slot in input.iter_mut().rev() {
            *slot = b'0' + (v % 10) as u8;
            v /= 10;
        }
        // Synthetic inputs are ASCII, so no backend can reject them.
        let _ = hasher.hash_into(&input, &mut out);
        sink ^= out[0];
    }
    std::hint::black_box(sink);
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    budget as f64 / secs
}
