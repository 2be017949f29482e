//! Client-side checks on a returned candidate set.
//!
//! Nothing the server wrote is trusted: the target lookup re-hashes every
//! password whose recorded digest claims to be the target, the hit count is
//! compared against the expected `r`, and a random sample of pairs is
//! re-hashed and re-tested against the predicate.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::CandidatePair;
use crate::hashers::Hasher;
use crate::predicate::{Digest, PredicateVector};

pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;
pub const DEFAULT_SAMPLE_CAP: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("expected candidate count must be positive, got {0}")]
    NonPositiveExpected(f64),
    #[error("spot-check sample size must be at least 1")]
    EmptySample,
    #[error("z threshold must be non-negative, got {0}")]
    BadThreshold(f64),
}

/// A potfile line claiming the target digest whose password does not hash to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forgery {
    /// 1-based line in the candidate set.
    pub line: usize,
    pub password: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetLookup {
    /// Every password that re-hashes to the target, in file order. More than
    /// one means a digest collision inside the keyspace.
    pub cleartexts: Vec<Vec<u8>>,
    pub forgeries: Vec<Forgery>,
}

impl TargetLookup {
    pub fn cracked(&self) -> bool {
        !self.cleartexts.is_empty()
    }

    pub fn cleartext(&self) -> Option<&[u8]> {
        self.cleartexts.first().map(Vec::as_slice)
    }
}

pub fn chk_cs(pairs: &[CandidatePair], target: &Digest, hasher: &dyn Hasher) -> TargetLookup {
    let mut out = TargetLookup::default();
    for (i, p) in pairs.iter().enumerate() {
        if &p.digest != target {
            continue;
        }
        match hasher.digest(&p.password) {
            Ok(d) if &d == target => out.cleartexts.push(p.password.clone()),
            _ => out.forgeries.push(Forgery {
                line: i + 1,
                password: p.password.clone(),
            }),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowResult {
    pub pass: bool,
    pub z: f64,
}

/// `z = (hits - r) / sqrt(r)`; passes when `|z| <= z_threshold`.
pub fn proof_of_work(hit_count: u64, expected_r: f64, z_threshold: f64) -> Result<PowResult, VerifyError> {
    if expected_r <= 0.0 || !expected_r.is_finite() {
        return Err(VerifyError::NonPositiveExpected(expected_r));
    }
    if z_threshold.is_nan() || z_threshold < 0.0 {
        return Err(VerifyError::BadThreshold(z_threshold));
    }
    let z = (hit_count as f64 - expected_r) / expected_r.sqrt();
    Ok(PowResult {
        pass: z.abs() <= z_threshold,
        z,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpotCheck {
    pub pass: bool,
    pub sampled: usize,
    /// 1-based lines that failed re-hashing or the predicate.
    pub failures: Vec<usize>,
}

/// Re-checks `min(sample_size, pairs.len())` pairs drawn uniformly without
/// replacement.
pub fn spot_check(
    pairs: &[CandidatePair],
    vector: &PredicateVector,
    hasher: &dyn Hasher,
    sample_size: usize,
    seed: u64,
) -> Result<SpotCheck, VerifyError> {
    if sample_size == 0 {
        return Err(VerifyError::EmptySample);
    }
    let amount = sample_size.min(pairs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, pairs.len(), amount).into_vec();
    idx.sort_unstable();
    let failures: Vec<usize> = idx
        .into_iter()
        .filter(|&i| {
            let p = &pairs[i];
            let ok = hasher.digest(&p.password).is_ok_and(|d| d == p.digest)
                && vector.eval(&p.digest).unwrap_or(false);
            !ok
        })
        .map(|i| i + 1)
        .collect();
    Ok(SpotCheck {
        pass: failures.is_empty(),
        sampled: amount,
        failures,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub z_threshold: f64,
    /// `None` samples `min(1000, hits)`.
    pub sample_size: Option<usize>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            z_threshold: DEFAULT_Z_THRESHOLD,
            sample_size: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Cracked,
    NotCracked,
    FoulPlay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub lookup: TargetLookup,
    pub hit_count: u64,
    pub expected_r: f64,
    pub z_threshold: f64,
    pub pow: PowResult,
    pub spot: SpotCheck,
    pub seed: u64,
    pub partial: bool,
}

impl Verdict {
    pub fn cracked(&self) -> bool {
        self.lookup.cracked()
    }

    pub fn outcome(&self) -> Outcome {
        if !self.pow.pass || !self.spot.pass || !self.lookup.forgeries.is_empty() {
            Outcome::FoulPlay
        } else if self.cracked() {
            Outcome::Cracked
        } else {
            Outcome::NotCracked
        }
    }
}

pub fn verify(
    pairs: &[CandidatePair],
    target: &Digest,
    vector: &PredicateVector,
    hasher: &dyn Hasher,
    expected_r: f64,
    opts: &VerifyOptions,
) -> Result<Verdict, VerifyError> {
    let pow = proof_of_work(pairs.len() as u64, expected_r, opts.z_threshold)?;
    let sample = opts.sample_size.unwrap_or(DEFAULT_SAMPLE_CAP);
    let spot = spot_check(pairs, vector, hasher, sample, opts.seed)?;
    Ok(Verdict {
        lookup: chk_cs(pairs, target, hasher),
        hit_count: pairs.len() as u64,
        expected_r,
        z_threshold: opts.z_threshold,
        pow,
        spot,
        seed: opts.seed,
        partial: false,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn pass_fail(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cracked: {}", yes_no(self.cracked()))?;
        for c in &self.lookup.cleartexts {
            writeln!(f, "cleartext: {}", String::from_utf8_lossy(c))?;
        }
        if self.lookup.cleartexts.len() > 1 {
            writeln!(f, "collisions: {}", self.lookup.cleartexts.len())?;
        }
        for forged in &self.lookup.forgeries {
            writeln!(
                f,
                "forgery: line {} ({})",
                forged.line,
                String::from_utf8_lossy(&forged.password)
            )?;
        }
        writeln!(f, "hits: {}", self.hit_count)?;
        writeln!(f, "expected: {:.4}", self.expected_r)?;
        writeln!(f, "z: {:.4}", self.pow.z)?;
        writeln!(
            f,
            "proof-of-work: {} (|z| <= {})",
            pass_fail(self.pow.pass),
            self.z_threshold
        )?;
        writeln!(
            f,
            "spot-check: {} ({} sampled, {} bad)",
            pass_fail(self.spot.pass),
            self.spot.sampled,
            self.spot.failures.len()
        )?;
        if self.partial {
            writeln!(f, "partial: yes")?;
        }
        writeln!(f, "seed: {}", self.seed)?;
        let outcome = match self.outcome() {
            Outcome::Cracked => "cracked",
            Outcome::NotCracked => "not cracked, server honest",
            Outcome::FoulPlay => "foul play suspected",
        };
        writeln!(f, "verdict: {outcome}")
    }
}
