// Brute force a six-digit PIN hashed with SHA-256, asking for about five
// decoy hits.

use num_bigint::BigUint;
use threepc::engine::{crack_parallel, CandidatePair};
use threepc::hashers::{Hasher, Sha256};
use threepc::keyspace::KeyspaceSpec;
use threepc::planner::{Plan, PlanRequest, PlanStore};
use threepc::verifier::chk_cs;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let keyspace = "mask:?d?d?d?d?d?d";
    let spec = KeyspaceSpec::mask("?d?d?d?d?d?d")?;
    let target = Sha256.digest(b"271828")?;

    let plan = Plan::build(
        PlanRequest {
            algo: "sha256".into(),
            target: target.clone(),
            keyspace: keyspace.into(),
            keyspace_size: BigUint::from(1_000_000u32),
            r: "5".into(),
            tolerance: 0.05,
            seed: 7,
        },
        &mut PlanStore::new(),
    )?;
    println!("vector {}", plan.vector.to_hex());
    println!("|X| = {}, expected hits {:.3}", plan.cardinality, plan.expected_candidates);

    let mut pairs: Vec<CandidatePair> = Vec::new();
    let report = crack_parallel(&plan.vector, &spec, &Sha256, &mut pairs, 2)?;
    println!("{} of {} PINs hit the decoy set", report.hits, report.hashed);
    for p in &pairs {
        println!("  {} {}...", String::from_utf8_lossy(&p.password), &p.digest.to_hex()[..16]);
    }
    assert_eq!(chk_cs(&pairs, &target, &Sha256).cleartext(), Some(&b"271828"[..]));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
