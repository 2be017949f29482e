//! Placing range windows around a target digest.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::smooth::SlotPacking;
use super::PlanError;
use crate::predicate::{Digest, PredicateVector, NIBBLE_MAX};

/// Valid lower bounds for a window of width `width` that contains `nibble`.
pub fn window_range(nibble: u8, width: u8) -> RangeInclusive<u8> {
    debug_assert!((1..=16).contains(&width) && nibble <= NIBBLE_MAX);
    let lo_min = (nibble + 1).saturating_sub(width);
    let lo_max = nibble.min(16 - width);
    lo_min..=lo_max
}

/// Builds a vector containing `target` whose range widths are a random
/// permutation of the packing's slot sizes, each window placed uniformly
/// among the offsets that still contain the target nibble.
pub fn gen_v<R: Rng + ?Sized>(
    target: &Digest,
    packing: &SlotPacking,
    rng: &mut R,
) -> Result<PredicateVector, PlanError> {
    if packing.len() != target.len() {
        return Err(PlanError::PackingLength {
            expected: target.len(),
            found: packing.len(),
        });
    }
    let mut sizes = packing.slot_sizes().to_vec();
    sizes.shuffle(rng);
    let bounds = target
        .nibbles()
        .iter()
        .zip(&sizes)
        .map(|(&t, &f)| {
            let lo = rng.random_range(window_range(t, f));
            (lo, lo + f - 1)
        })
        .collect();
    Ok(PredicateVector::new(bounds).expect("windows stay inside 0..=15"))
}

/// [`gen_v`] driven by a ChaCha8 stream seeded with `seed`.
pub fn gen_v_seeded(target: &Digest, packing: &SlotPacking, seed: u64) -> Result<PredicateVector, PlanError> {
    gen_v(target, packing, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Holds at most one generated vector per target.
///
/// Handing the server two different vectors for one target lets it intersect
/// the decoy sets, so a second request for the same target is refused.
#[derive(Debug, Default)]
pub struct PlanStore {
    vectors: HashMap<Digest, PredicateVector>,
}

impl PlanStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn generate<R: Rng + ?Sized>(
        &mut self,
        target: &Digest,
        packing: &SlotPacking,
        rng: &mut R,
    ) -> Result<PredicateVector, PlanError> {
        if self.vectors.contains_key(target) {
            return Err(PlanError::DuplicateTarget);
        }
        let v = gen_v(target, packing, rng)?;
        self.vectors.insert(target.clone(), v.clone());
        Ok(v)
    }

    /// Records a vector produced elsewhere, e.g. loaded from a plan file.
    pub fn insert(&mut self, target: Digest, vector: PredicateVector) -> Result<(), PlanError> {
        if self.vectors.contains_key(&target) {
            return Err(PlanError::DuplicateTarget);
        }
        self.vectors.insert(target, vector);
        Ok(())
    }

    pub fn get(&self, target: &Digest) -> Option<&PredicateVector> {
        self.vectors.get(target)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target() -> Digest {
        "C6BFABA2".parse().unwrap()
    }

    #[test]
    fn window_ranges() {
        assert_eq!(window_range(7, 4), 4..=7);
        assert_eq!(window_range(0, 4), 0..=0);
        assert_eq!(window_range(15, 4), 12..=12);
        assert_eq!(window_range(6, 16), 0..=0);
        assert_eq!(window_range(9, 1), 9..=9);
    }

    #[test]
    fn fixture_vector_is_a_possible_output() {
        // Widths (4,5,2,3,7,1,1,7) in order around C6BFABA2.
        let fixture: PredicateVector = "cf26abdf9fbbaa06".parse().unwrap();
        let t = target();
        for ((&(lo, hi), &n), f) in fixture
            .bounds()
            .iter()
            .zip(t.nibbles())
            .zip([4u8, 5, 2, 3, 7, 1, 1, 7])
        {
            assert_eq!(hi - lo + 1, f);
            assert!(window_range(n, f).contains(&lo));
        }
    }

    #[test]
    fn extremes() {
        let t = target();
        let ones = SlotPacking::new(vec![1; 8]).unwrap();
        assert_eq!(gen_v_seeded(&t, &ones, 3).unwrap(), PredicateVector::singleton(&t));
        let full = SlotPacking::new(vec![16; 8]).unwrap();
        assert_eq!(gen_v_seeded(&t, &full, 3).unwrap(), PredicateVector::zk(8));
    }

    #[test]
    fn seeded_is_deterministic_and_contains_target() {
        let t = target();
        let p = SlotPacking::new(vec![14, 14, 15, 2, 1, 1, 1, 1]).unwrap();
        let a = gen_v_seeded(&t, &p, 99).unwrap();
        assert_eq!(a, gen_v_seeded(&t, &p, 99).unwrap());
        assert!(a.eval(&t).unwrap());
        assert_eq!(a.cardinality().value(), &p.product());
    }

    #[test]
    fn length_mismatch() {
        let p = SlotPacking::new(vec![1; 4]).unwrap();
        assert!(matches!(
            gen_v_seeded(&target(), &p, 0),
            Err(PlanError::PackingLength { .. })
        ));
    }

    #[test]
    fn store_refuses_second_vector() {
        let mut store = PlanStore::new();
        let p = SlotPacking::new(vec![2; 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        store.generate(&target(), &p, &mut rng).unwrap();
        assert!(matches!(
            store.generate(&target(), &p, &mut rng),
            Err(PlanError::DuplicateTarget)
        ));
        assert_eq!(store.len(), 1);
    }
}
