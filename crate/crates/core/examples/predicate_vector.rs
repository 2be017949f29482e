// Predicate vectors: parse, evaluate, count, and convert to and from a
// hit mask.

use threepc::hashers::{Crc32, Hasher, Ntlm};
use threepc::predicate::{HitMask, PredicateVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // One (lo, hi) pair per nibble of a CRC-32 digest.
    let vector = PredicateVector::from_hex("cf26abdf9fbbaa06")?;
    println!("vector {} has {} nibbles", vector.to_hex(), vector.len());
    println!("cardinality {}", vector.cardinality().value());

    for word in ["0BChrist", "tangan", "password"] {
        let digest = Crc32.digest(word.as_bytes())?;
        println!("{word:>10} -> {} in set: {}", digest.to_hex(), vector.eval(&digest)?);
    }

    // The byte matcher answers the same question on raw digest bytes.
    let matcher = vector.compile();
    let raw = Crc32.digest(b"0BChrist")?.to_bytes()?;
    assert!(matcher.matches(&raw));

    // A hit mask pins the flagged bytes of a digest and frees the rest.
    let target = Ntlm.digest(b"bKFQ4Q8C0")?;
    let mask = HitMask::from_hex("C001", 16)?;
    let wide = PredicateVector::from_hit_mask(&target, &mask)?;
    println!("hit mask {} over {} -> {}", mask.to_hex(), target.to_hex(), wide.to_hex());
    println!("cardinality 16^26 = {}", wide.cardinality().value());
    let (back, back_mask) = wide.to_hit_mask()?;
    assert_eq!(back_mask, mask);
    assert!(wide.eval(&back)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
