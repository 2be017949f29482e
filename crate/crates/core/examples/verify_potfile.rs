// Check a server's answer: hit count against the plan, recomputed digests
// on a sample, and the target lookup. Then do it again for a server that
// dropped half the candidates.

use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threepc::engine::{crack, CandidatePair};
use threepc::hashers::{Crc32, Hasher};
use threepc::keyspace::{KeyspaceSpec, Wordlist};
use threepc::planner::{Plan, PlanRequest, PlanStore};
use threepc::verifier::{verify, VerifyOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words: Vec<Vec<u8>> = (0..100_000)
        .map(|_| (0..10).map(|_| rng.random_range(b'!'..=b'~')).collect())
        .collect();
    let list = Arc::new(Wordlist::from_words(&words));
    let target = Crc32.digest(&words[31_337])?;
    let plan = Plan::build(
        PlanRequest {
            algo: "crc32".into(),
            target: target.clone(),
            keyspace: "wordlist:random".into(),
            keyspace_size: BigUint::from(list.len()),
            r: "1000".into(),
            tolerance: 0.05,
            seed: 11,
        },
        &mut PlanStore::new(),
    )?;

    let mut pairs: Vec<CandidatePair> = Vec::new();
    crack(&plan.vector, &KeyspaceSpec::wordlist("random", list), &Crc32, &mut pairs)?;
    let opts = VerifyOptions { seed: 1, ..VerifyOptions::default() };

    let honest = verify(&pairs, &target, &plan.vector, &Crc32, plan.expected_candidates, &opts)?;
    println!("-- honest server --\n{honest}");

    pairs.truncate(pairs.len() / 2);
    let lazy = verify(&pairs, &target, &plan.vector, &Crc32, plan.expected_candidates, &opts)?;
    println!("-- server that kept half --\n{lazy}");
    println!("outcomes: {:?} then {:?}", honest.outcome(), lazy.outcome());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
