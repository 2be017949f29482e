//! Plan documents: everything the client decided before contacting a server.

use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    deniability, expected_candidates, parse_ratio, plan_nv, smooth_search, PlanError, PlanStore,
};
use crate::predicate::{Digest, PredicateVector};

/// File extension used for plan documents inside a plan store directory.
pub const PLAN_EXTENSION: &str = "plan";

#[derive(Clone, Debug)]
pub struct PlanRequest {
    pub algo: String,
    pub target: Digest,
    pub keyspace: String,
    pub keyspace_size: BigUint,
    /// Expected candidate count, as typed by the user.
    pub r: String,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub algo: String,
    pub target: Digest,
    pub keyspace: String,
    pub keyspace_size: BigUint,
    pub r: String,
    pub tolerance: f64,
    pub seed: u64,
    pub nv_target: f64,
    pub vector: PredicateVector,
    pub cardinality: BigUint,
    pub expected_candidates: f64,
    pub deniability: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanDoc {
    algo: String,
    target: String,
    keyspace: String,
    keyspace_size: String,
    r: String,
    tolerance: f64,
    seed: u64,
    nv_target: f64,
    vector: String,
    cardinality: String,
    expected_candidates: f64,
    deniability: f64,
}

impl Plan {
    /// Sizes the decoy set, picks a packable cardinality and places it
    /// around the target. A target below one decoy is raised to one.
    pub fn build(req: PlanRequest, store: &mut PlanStore) -> Result<Plan, PlanError> {
        let l = req.target.len();
        let r = parse_ratio(&req.r)?;
        let params = plan_nv(&req.keyspace_size, &r, l)?;
        let nv = if params.nv_target < BigRational::one() {
            BigRational::one()
        } else {
            params.nv_target.clone()
        };
        let choice = smooth_search(&nv, l, req.tolerance)?;
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let vector = store.generate(&req.target, &choice.packing, &mut rng)?;
        Ok(Plan {
            nv_target: params.nv_target_f64(),
            cardinality: vector.cardinality().into_inner(),
            expected_candidates: expected_candidates(&vector, &req.keyspace_size),
            deniability: deniability(&vector),
            vector,
            algo: req.algo,
            target: req.target,
            keyspace: req.keyspace,
            keyspace_size: req.keyspace_size,
            r: req.r,
            tolerance: req.tolerance,
            seed: req.seed,
        })
    }

    /// Records a vector chosen elsewhere. The request's `r` is only used
    /// for the reported target size.
    pub fn from_vector(
        req: PlanRequest,
        vector: PredicateVector,
        store: &mut PlanStore,
    ) -> Result<Plan, PlanError> {
        if vector.len() != req.target.len() {
            return Err(PlanError::PackingLength {
                expected: req.target.len(),
                found: vector.len(),
            });
        }
        if !vector.matches_nibbles(req.target.nibbles()) {
            return Err(PlanError::TargetOutsideVector);
        }
        let r = parse_ratio(&req.r)?;
        let params = plan_nv(&req.keyspace_size, &r, req.target.len())?;
        store.insert(req.target.clone(), vector.clone())?;
        Ok(Plan {
            nv_target: params.nv_target_f64(),
            cardinality: vector.cardinality().into_inner(),
            expected_candidates: expected_candidates(&vector, &req.keyspace_size),
            deniability: deniability(&vector),
            vector,
            algo: req.algo,
            target: req.target,
            keyspace: req.keyspace,
            keyspace_size: req.keyspace_size,
            r: req.r,
            tolerance: req.tolerance,
            seed: req.seed,
        })
    }

    pub fn to_toml(&self) -> String {
        let doc = PlanDoc {
            algo: self.algo.clone(),
            target: self.target.to_hex(),
            keyspace: self.keyspace.clone(),
            keyspace_size: self.keyspace_size.to_string(),
            r: self.r.clone(),
            tolerance: self.tolerance,
            seed: self.seed,
            nv_target: self.nv_target,
            vector: self.vector.to_hex(),
            cardinality: self.cardinality.to_string(),
            expected_candidates: self.expected_candidates,
            deniability: self.deniability,
        };
        toml::to_string(&doc).expect("plan fields are plain scalars")
    }

    /// Parses a plan and checks it is internally consistent.
    pub fn from_toml(text: &str) -> Result<Plan, PlanError> {
        let bad = |m: String| PlanError::PlanFile(m);
        let doc: PlanDoc = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let target = Digest::from_hex(&doc.target).map_err(|e| bad(format!("target: {e}")))?;
        let vector =
            PredicateVector::from_hex(&doc.vector).map_err(|e| bad(format!("vector: {e}")))?;
        if vector.len() != target.len() {
            return Err(bad(format!(
                "vector covers {} nibbles but the target has {}",
                vector.len(),
                target.len()
            )));
        }
        if !vector.matches_nibbles(target.nibbles()) {
            return Err(bad("target is not a member of the vector's decoy set".into()));
        }
        let keyspace_size: BigUint = doc
            .keyspace_size
            .parse()
            .map_err(|_| bad(format!("keyspace_size {:?}", doc.keyspace_size)))?;
        let cardinality: BigUint = doc
            .cardinality
            .parse()
            .map_err(|_| bad(format!("cardinality {:?}", doc.cardinality)))?;
        if &cardinality != vector.cardinality().value() {
            return Err(bad(format!(
                "cardinality {cardinality} disagrees with the vector ({})",
                vector.cardinality()
            )));
        }
        parse_ratio(&doc.r)?;
        Ok(Plan {
            algo: doc.algo,
            target,
            keyspace: doc.keyspace,
            keyspace_size,
            r: doc.r,
            tolerance: doc.tolerance,
            seed: doc.seed,
            nv_target: doc.nv_target,
            vector,
            cardinality,
            expected_candidates: doc.expected_candidates,
            deniability: doc.deniability,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), PlanError> {
        fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Plan, PlanError> {
        Plan::from_toml(&fs::read_to_string(path)?)
    }
}

/// Loads every `*.plan` file under `dir` into a store, so a new plan for an
/// already-planned target is refused.
pub fn load_store(dir: &Path) -> Result<PlanStore, PlanError> {
    let mut store = PlanStore::new();
    if !dir.is_dir() {
        return Ok(store);
    }
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == PLAN_EXTENSION))
        .collect();
    paths.sort();
    for path in paths {
        let plan = Plan::read(&path)
            .map_err(|e| PlanError::PlanFile(format!("{}: {e}", path.display())))?;
        store.insert(plan.target, plan.vector)?;
    }
    Ok(store)
}
