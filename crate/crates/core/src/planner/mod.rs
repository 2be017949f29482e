//! Client-side parameter calculus.
//!
//! Sizing works backwards from the number of candidates `r` the client wants
//! returned: for a keyspace of `|DS|` passwords and digests of `l` nibbles the
//! decoy set should hold `N = r * 16^l / |DS|` digests. [`smooth`] finds a
//! realizable cardinality near `N`, [`genv`] places it around the target, and
//! the free functions here report what the server can infer.

pub mod genv;
pub mod plan_file;
pub mod smooth;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use genv::{gen_v, gen_v_seeded, window_range, PlanStore};
pub use plan_file::{Plan, PlanRequest};
pub use smooth::{
    is_packable, log_distance, slots_needed, smooth_search, Exponents, SlotPacking, SmoothChoice,
    SmoothFactorization, SmoothSearcher, DEFAULT_TOLERANCE,
};

use crate::predicate::{output_space, PredicateVector};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("keyspace is empty")]
    EmptyKeyspace,
    #[error("expected candidate count r must be positive")]
    NonPositiveR,
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error("decoy-set target {0} is below 1")]
    TargetBelowOne(f64),
    #[error("tolerance {0} must be a finite non-negative number")]
    BadTolerance(f64),
    #[error("slot size {0} outside 1..=16")]
    BadSlot(u8),
    #[error("packing has {found} slots but the target has {expected} nibbles")]
    PackingLength { expected: usize, found: usize },
    #[error(
        "no packable 13-smooth cardinality within {tolerance} relative error; nearest is {} \
         ({relative_error:+.4} relative), widen the tolerance",
        nearest.value()
    )]
    WidenTolerance {
        nearest: Box<SmoothChoice>,
        relative_error: f64,
        tolerance: f64,
    },
    #[error("a vector was already generated for this target; refusing to generate another")]
    DuplicateTarget,
    #[error("the target digest is not inside the vector's ranges")]
    TargetOutsideVector,
    #[error("sorted-out count {sorted_out} must be below the keyspace size {keyspace}")]
    SortedOutOfRange { sorted_out: BigUint, keyspace: BigUint },
    #[error("plan file: {0}")]
    PlanFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn ratio(value: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(value.clone()))
}

fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Parses `12`, `0.5`, `1.5e-3` or `3/7` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<BigRational, PlanError> {
    let bad = || PlanError::BadNumber(text.to_string());
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * ten.pow(scale as u32))
    } else {
        BigRational::new(digits, ten.pow(scale.unsigned_abs()))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Inputs and result of sizing the decoy set.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanParameters {
    pub keyspace_size: BigUint,
    pub expected_candidates: BigRational,
    pub digest_nibbles: usize,
    /// `r * 16^l / |DS|`, exact.
    pub nv_target: BigRational,
}

impl PlanParameters {
    pub fn nv_target_f64(&self) -> f64 {
        to_f64(&self.nv_target)
    }
}

/// `N = r * 16^l / |DS|`.
pub fn plan_nv(keyspace_size: &BigUint, r: &BigRational, l: usize) -> Result<PlanParameters, PlanError> {
    if keyspace_size.is_zero() {
        return Err(PlanError::EmptyKeyspace);
    }
    if !r.is_positive() {
        return Err(PlanError::NonPositiveR);
    }
    let nv_target = r * ratio(&output_space(l)) / ratio(keyspace_size);
    Ok(PlanParameters {
        keyspace_size: keyspace_size.clone(),
        expected_candidates: r.clone(),
        digest_nibbles: l,
        nv_target,
    })
}

/// `|X| * |DS| / 16^l` as an exact rational.
pub fn expected_candidates_exact(vector: &PredicateVector, keyspace_size: &BigUint) -> BigRational {
    let card = vector.cardinality().into_inner();
    ratio(&(card * keyspace_size)) / ratio(&output_space(vector.len()))
}

pub fn expected_candidates(vector: &PredicateVector, keyspace_size: &BigUint) -> f64 {
    to_f64(&expected_candidates_exact(vector, keyspace_size))
}

/// Probability that an arbitrary digest falls in the decoy set.
pub fn deniability(vector: &PredicateVector) -> f64 {
    let card = vector.cardinality().into_inner();
    to_f64(&(ratio(&card) / ratio(&output_space(vector.len()))))
}

/// The server's best guess at the pre-image after discarding `sorted_out`
/// non-matching candidates: `1 / (|DS| - sorted_out)`.
pub fn guess_probability(keyspace_size: &BigUint, sorted_out: &BigUint) -> Result<f64, PlanError> {
    if sorted_out >= keyspace_size {
        return Err(PlanError::SortedOutOfRange {
            sorted_out: sorted_out.clone(),
            keyspace: keyspace_size.clone(),
        });
    }
    let remaining = keyspace_size - sorted_out;
    Ok(to_f64(&BigRational::new(BigInt::one(), BigInt::from(remaining))))
}

/// Expected candidates from cracking the same vector with several disjoint
/// keyspaces in turn.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub per_set: Vec<f64>,
    pub cumulative: f64,
    pub cumulative_exact: BigRational,
}

pub fn multi_dataset_projection(vector: &PredicateVector, sizes: &[BigUint]) -> Projection {
    let exact: Vec<BigRational> = sizes
        .iter()
        .map(|s| expected_candidates_exact(vector, s))
        .collect();
    let cumulative_exact = exact.iter().fold(BigRational::zero(), |acc, r| acc + r);
    Projection {
        per_set: exact.iter().map(to_f64).collect(),
        cumulative: to_f64(&cumulative_exact),
        cumulative_exact,
    }
}
