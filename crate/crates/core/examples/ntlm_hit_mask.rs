// Planning numbers for a nine-character alphanumeric NTLM job, and the
// proof-of-work check on the hit count the server reports.

use num_bigint::BigUint;
use threepc::hashers::Registry;
use threepc::planner::{deniability, expected_candidates};
use threepc::predicate::{HitMask, PredicateVector};
use threepc::verifier::proof_of_work;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let target = Registry::default().digest("ntlm", b"bKFQ4Q8C0")?;
    println!("ntlm(bKFQ4Q8C0) = {}", target.to_hex().to_uppercase());

    // Pin the first two bytes and the last one, leave 13 bytes free.
    let vector = PredicateVector::from_hit_mask(&target, &HitMask::from_hex("C001", 16)?)?;
    let keyspace = BigUint::from(62u32).pow(9);
    let expected = expected_candidates(&vector, &keyspace);
    println!("keyspace 62^9 = {keyspace}");
    println!("expected candidates {expected:.2}");
    println!("deniability {:.3e}", deniability(&vector));

    for reported in [806_834_341u64, 806_873_234, 806_700_000] {
        let pow = proof_of_work(reported, expected, 5.0)?;
        println!("reported {reported}: z = {:+.2} -> {}", pow.z, if pow.pass { "pass" } else { "FAIL" });
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
