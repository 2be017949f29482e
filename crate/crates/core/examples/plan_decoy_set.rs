// Size a decoy set for a dictionary job and draw a vector around the
// target.

use num_bigint::BigUint;
use num_rational::BigRational;
use threepc::hashers::{Crc32, Hasher};
use threepc::planner::{
    deniability, expected_candidates, gen_v_seeded, guess_probability, plan_nv, smooth_search, Plan, PlanRequest,
    PlanStore,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let wordlist_size = BigUint::from(14_344_391u32);
    let target = Crc32.digest(b"0BChrist")?;

    // How many digests the set must hold so about 20 words land in it.
    let params = plan_nv(&wordlist_size, &BigRational::from_integer(20.into()), target.len())?;
    println!("target set size N = {:.2}", params.nv_target_f64());

    // Closest 13-smooth size that can be spread across 8 nibbles.
    let choice = smooth_search(&params.nv_target, target.len(), 0.05)?;
    println!(
        "chosen |X| = {} (relative error {:+.4}), slots {:?}",
        choice.value(),
        choice.relative_error(&params.nv_target),
        choice.packing.slot_sizes()
    );

    let vector = gen_v_seeded(&target, &choice.packing, 42)?;
    assert!(vector.eval(&target)?);
    println!("vector {}", vector.to_hex());
    println!("expected candidates {:.2}", expected_candidates(&vector, &wordlist_size));
    println!("deniability {:.3e}", deniability(&vector));
    println!(
        "server guess after discarding 14,344,371 words: {:.3}",
        guess_probability(&wordlist_size, &BigUint::from(14_344_371u32))?
    );

    // The same steps in one call, with a store that refuses a second
    // vector for the same target.
    let mut store = PlanStore::new();
    let request = PlanRequest {
        algo: "crc32".into(),
        target: target.clone(),
        keyspace: "wordlist:rockyou".into(),
        keyspace_size: wordlist_size.clone(),
        r: "20".into(),
        tolerance: 0.05,
        seed: 42,
    };
    let plan = Plan::build(request.clone(), &mut store)?;
    println!("{}", plan.to_toml());
    assert!(Plan::build(request, &mut store).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
