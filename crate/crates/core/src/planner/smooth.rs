//! Searching 13-smooth cardinalities that pack into `l` nibble slots.
//!
//! A cardinality `2^A 3^B 5^C 7^D 11^E 13^F` is usable only if its prime
//! factors can be split into `l` range widths, each at most 16. The search
//! works in log2 space as a meet-in-the-middle: every `(D, E, F)` triple is
//! matched against a table of `(B, C)` pairs sorted by the fractional part of
//! their log2, and the power of two fills the integer remainder.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::PlanError;
use crate::predicate::SMOOTH_PRIMES;

/// Largest range width of one nibble position.
pub const SLOT_CAP: u32 = 16;

/// Default maximum relative error `|value / target - 1|`.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// Prime exponents `(A, B, C, D, E, F)` for `(2, 3, 5, 7, 11, 13)`.
pub type Exponents = [u32; 6];

fn prime_log2() -> [f64; 6] {
    SMOOTH_PRIMES.map(|p| f64::from(p).log2())
}

/// `log2` of an arbitrarily large integer.
pub fn log2_big(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits <= 1000 {
        return value.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    (value >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

pub fn log2_ratio(value: &BigRational) -> f64 {
    let num = value.numer().magnitude();
    let den = value.denom().magnitude();
    log2_big(num) - log2_big(den)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SmoothFactorization {
    exponents: Exponents,
    value: BigUint,
}

impl SmoothFactorization {
    pub fn new(exponents: Exponents) -> Self {
        let mut value = BigUint::one();
        for (p, e) in SMOOTH_PRIMES.iter().zip(exponents) {
            value *= BigUint::from(*p).pow(e);
        }
        SmoothFactorization { exponents, value }
    }

    /// Factors `value` over the primes up to 13; `None` if it is zero or not
    /// 13-smooth.
    pub fn from_value(value: &BigUint) -> Option<Self> {
        if value.is_zero() {
            return None;
        }
        let mut rest = value.clone();
        let mut exponents = [0u32; 6];
        for (i, p) in SMOOTH_PRIMES.iter().enumerate() {
            let p = BigUint::from(*p);
            while (&rest % &p).is_zero() {
                rest /= &p;
                exponents[i] += 1;
            }
        }
        rest.is_one().then(|| SmoothFactorization {
            exponents,
            value: value.clone(),
        })
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn log2(&self) -> f64 {
        let logs = prime_log2();
        self.exponents
            .iter()
            .zip(logs)
            .map(|(&e, lg)| f64::from(e) * lg)
            .sum()
    }

    /// Recomputes the value from the exponents and compares.
    pub fn is_consistent(&self) -> bool {
        SmoothFactorization::new(self.exponents).value == self.value
    }
}

impl fmt::Debug for SmoothFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.exponents;
        write!(
            f,
            "{} = 2^{a}·3^{b}·5^{c}·7^{d}·11^{e}·13^{g}",
            self.value
        )
    }
}

/// Range widths for each of the `l` nibble positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SlotPacking {
    slot_sizes: Vec<u8>,
}

impl SlotPacking {
    pub fn new(slot_sizes: Vec<u8>) -> Result<Self, PlanError> {
        if let Some(&bad) = slot_sizes
            .iter()
            .find(|&&f| f == 0 || u32::from(f) > SLOT_CAP)
        {
            return Err(PlanError::BadSlot(bad));
        }
        Ok(SlotPacking { slot_sizes })
    }

    /// First-fit-decreasing over the prime factors, largest prime first, into
    /// at most `l` slots of product at most 16. Unused slots get width 1.
    pub fn first_fit_decreasing(factorization: &SmoothFactorization, l: usize) -> Option<Self> {
        let mut slots: Vec<u32> = Vec::with_capacity(l);
        for (p, &e) in SMOOTH_PRIMES.iter().zip(&factorization.exponents).rev() {
            for _ in 0..e {
                if let Some(s) = slots.iter_mut().find(|s| **s * p <= SLOT_CAP) {
                    *s *= p;
                } else if slots.len() < l {
                    slots.push(*p);
                } else {
                    return None;
                }
            }
        }
        slots.resize(l, 1);
        Some(SlotPacking {
            slot_sizes: slots.into_iter().map(|s| s as u8).collect(),
        })
    }

    pub fn slot_sizes(&self) -> &[u8] {
        &self.slot_sizes
    }

    pub fn len(&self) -> usize {
        self.slot_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_sizes.is_empty()
    }

    pub fn product(&self) -> BigUint {
        self.slot_sizes
            .iter()
            .fold(BigUint::one(), |acc, &f| acc * f)
    }
}

/// Number of slots [`SlotPacking::first_fit_decreasing`] opens for these
/// exponents, in closed form.
///
/// 13s and 11s sit alone; each 7 takes one 2 (14); 5s take one 3 each (15)
/// while 3s last, otherwise one 2 (10); leftover 3s pair up (9) and an odd
/// one takes two 2s (12); remaining 2s fill slots of four (16).
pub fn slots_needed(exponents: &Exponents) -> u64 {
    let [a, b, c, d, e, f] = exponents.map(u64::from);
    let fives_with_three = b.min(c);
    let bare_fives = c - fives_with_three;
    let loose_threes = b - fives_with_three;
    let odd_three = loose_threes % 2;
    let twos_absorbed = d + bare_fives + 2 * odd_three;
    let loose_twos = a.saturating_sub(twos_absorbed);
    e + f + d + c + loose_threes.div_ceil(2) + loose_twos.div_ceil(4)
}

pub fn is_packable(exponents: &Exponents, l: usize) -> bool {
    slots_needed(exponents) <= l as u64
}

/// A chosen cardinality together with its slot packing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothChoice {
    pub factorization: SmoothFactorization,
    pub packing: SlotPacking,
}

impl SmoothChoice {
    fn from_exponents(exponents: Exponents, l: usize) -> Self {
        let factorization = SmoothFactorization::new(exponents);
        let packing = SlotPacking::first_fit_decreasing(&factorization, l)
            .expect("search only yields packable exponents");
        SmoothChoice {
            factorization,
            packing,
        }
    }

    pub fn value(&self) -> &BigUint {
        self.factorization.value()
    }

    /// `value / target - 1`.
    pub fn relative_error(&self, target: &BigRational) -> f64 {
        let v = BigRational::from_integer(BigInt::from(self.value().clone()));
        (v / target - BigRational::one()).to_f64().unwrap_or(f64::INFINITY)
    }
}

/// True when `a` is strictly closer to `target` than `b` in log distance,
/// with ties going to the smaller value.
pub fn closer_in_log(target: &BigRational, a: &BigUint, b: &BigUint) -> bool {
    closeness(target, a, b) == Ordering::Less
}

fn closeness(target: &BigRational, a: &BigUint, b: &BigUint) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let ra = BigRational::from_integer(BigInt::from(a.clone()));
    let rb = BigRational::from_integer(BigInt::from(b.clone()));
    let a_above = ra >= *target;
    let b_above = rb >= *target;
    let by_value = a.cmp(b);
    match (a_above, b_above) {
        (true, true) => by_value,
        (false, false) => by_value.reverse(),
        _ => {
            // Opposite sides: compare target/low against high/target.
            let (low, high) = if a_above { (&rb, &ra) } else { (&ra, &rb) };
            let sq = target * target;
            let prod = low * high;
            let low_closer = match sq.cmp(&prod) {
                Ordering::Less => Ordering::Less,
                Ordering::Greater => Ordering::Greater,
                Ordering::Equal => Ordering::Less,
            };
            if a_above {
                low_closer.reverse()
            } else {
                low_closer
            }
        }
    }
}

/// Float slack used before falling back to exact comparison.
const EPS: f64 = 1e-9;

#[derive(Clone, Copy)]
struct Triple {
    d: u32,
    e: u32,
    f: u32,
    log2: f64,
}

#[derive(Clone, Copy)]
struct Pair {
    b: u32,
    c: u32,
    log2: f64,
    residue: f64,
}

/// Precomputed tables for one digest length.
pub struct SmoothSearcher {
    l: usize,
    triples: Vec<Triple>,
    pairs: Vec<Pair>,
}

struct Best {
    exponents: Exponents,
    err: f64,
}

impl SmoothSearcher {
    pub fn new(l: usize) -> Self {
        let lg = prime_log2();
        let l32 = l as u32;
        let mut triples = Vec::new();
        for f in 0..=l32 {
            for e in 0..=l32 - f {
                for d in 0..=l32 - f - e {
                    let log2 = f64::from(d) * lg[3] + f64::from(e) * lg[4] + f64::from(f) * lg[5];
                    triples.push(Triple { d, e, f, log2 });
                }
            }
        }
        triples.sort_by(|x, y| x.log2.total_cmp(&y.log2));

        let mut pairs = Vec::new();
        for c in 0..=l32 {
            for b in 0..=2 * l32 - c {
                let log2 = f64::from(b) * lg[1] + f64::from(c) * lg[2];
                pairs.push(Pair {
                    b,
                    c,
                    log2,
                    residue: log2.rem_euclid(1.0),
                });
            }
        }
        pairs.sort_by(|x, y| x.residue.total_cmp(&y.residue));
        SmoothSearcher { l, triples, pairs }
    }

    /// Cached searcher for digest length `l`.
    pub fn for_length(l: usize) -> Arc<SmoothSearcher> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SmoothSearcher>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(l)
            .or_insert_with(|| Arc::new(SmoothSearcher::new(l)))
            .clone()
    }

    pub fn digest_nibbles(&self) -> usize {
        self.l
    }

    /// Packable smooth value closest to `target` in log distance among those
    /// within `tolerance` relative error. When none qualifies, the error
    /// carries the nearest packable value overall.
    pub fn search(&self, target: &BigRational, tolerance: f64) -> Result<SmoothChoice, PlanError> {
        if *target < BigRational::one() {
            return Err(PlanError::TargetBelowOne(target.to_f64().unwrap_or(0.0)));
        }
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(PlanError::BadTolerance(tolerance));
        }
        let y = log2_ratio(target);
        let nearest = self.best(target, y, f64::NEG_INFINITY, f64::INFINITY);
        let choice = SmoothChoice::from_exponents(nearest.exponents, self.l);
        let rel = choice.relative_error(target);
        if rel.abs() <= tolerance {
            return Ok(choice);
        }
        // The log-nearest value lies outside the relative window; anything
        // inside it must then sit below the target.
        let low = (1.0 - tolerance).max(f64::MIN_POSITIVE).log2();
        let below = self.best(target, y, low - EPS, 0.0);
        if below.err.is_finite() {
            let alt = SmoothChoice::from_exponents(below.exponents, self.l);
            if alt.relative_error(target).abs() <= tolerance {
                return Ok(alt);
            }
        }
        Err(PlanError::WidenTolerance {
            nearest: Box::new(choice),
            relative_error: rel,
            tolerance,
        })
    }

    /// Exact minimizer of `|log2(value) - y|` over packable exponents whose
    /// signed error lies in `[lo, hi]`.
    fn best(&self, target: &BigRational, y: f64, lo: f64, hi: f64) -> Best {
        let l = self.l;
        let max_a = 4 * l as i64;
        let mut best = Best {
            exponents: [0; 6],
            err: f64::INFINITY,
        };
        if y >= 4.0 * l as f64 {
            // Nothing packable exceeds 16^l.
            let ex = [4 * l as u32, 0, 0, 0, 0, 0];
            let err = (4.0 * l as f64 - y).abs();
            if lo <= -err && -err <= hi {
                best = Best { exponents: ex, err };
            }
            return best;
        }

        let consider = |ex: Exponents, signed: f64, best: &mut Best| {
            if signed < lo || signed > hi {
                return;
            }
            let err = signed.abs();
            if err > best.err + EPS || !is_packable(&ex, l) {
                return;
            }
            let replace = if (err - best.err).abs() <= EPS {
                let cand = SmoothFactorization::new(ex);
                let cur = SmoothFactorization::new(best.exponents);
                closer_in_log(target, cand.value(), cur.value())
            } else {
                err < best.err
            };
            if replace {
                *best = Best { exponents: ex, err };
            }
        };

        let n_pairs = self.pairs.len();
        for t in &self.triples {
            if t.log2 > y + best.err + EPS {
                break;
            }
            let used = u64::from(t.d + t.e + t.f);
            if used > l as u64 {
                continue;
            }
            // Upper bound on log2 reachable with the slots left over.
            let cap = t.log2 + f64::from(t.d) + 4.0 * (l as u64 - used) as f64;
            if cap < y - best.err - EPS {
                continue;
            }
            let rem = y - t.log2;
            let rho = rem.rem_euclid(1.0);
            let start = self.pairs.partition_point(|p| p.residue < rho);

            let visit = |p: &Pair, best: &mut Best| {
                let base = rem - p.log2;
                for a in [base.floor() as i64, base.ceil() as i64] {
                    if a < 0 || a > max_a {
                        continue;
                    }
                    let ex = [a as u32, p.b, p.c, t.d, t.e, t.f];
                    consider(ex, a as f64 - base, best);
                }
            };

            for step in 0..n_pairs {
                let p = &self.pairs[(start + step) % n_pairs];
                let dist = (p.residue - rho).rem_euclid(1.0);
                if dist > best.err + EPS {
                    break;
                }
                visit(p, &mut best);
            }
            for step in 1..=n_pairs {
                let p = &self.pairs[(start + n_pairs - step) % n_pairs];
                let dist = (rho - p.residue).rem_euclid(1.0);
                if dist > best.err + EPS {
                    break;
                }
                visit(p, &mut best);
            }
        }

        // A power of two alone is always a candidate, including A = 0.
        for a in [y.floor() as i64, y.ceil() as i64, 0] {
            if (0..=max_a).contains(&a) {
                consider([a as u32, 0, 0, 0, 0, 0], a as f64 - y, &mut best);
            }
        }
        best
    }
}

/// Convenience wrapper over the cached [`SmoothSearcher`] for `l`.
pub fn smooth_search(target: &BigRational, l: usize, tolerance: f64) -> Result<SmoothChoice, PlanError> {
    SmoothSearcher::for_length(l).search(target, tolerance)
}

/// `|log2(value / target)|`.
pub fn log_distance(target: &BigRational, value: &BigUint) -> f64 {
    let v = BigRational::from_integer(BigInt::from(value.clone()));
    log2_ratio(&(v / target)).abs()
}
