// A dictionary job over CRC-32 digests. The engine returns every word whose
// digest lands in the decoy set, and only the client knows which one is
// the target.

use std::sync::Arc;

use threepc::engine::{crack, CandidatePair};
use threepc::hashers::{Crc32, Hasher};
use threepc::keyspace::{KeyspaceSpec, Wordlist};
use threepc::predicate::PredicateVector;
use threepc::verifier::chk_cs;

const WORDS: &[&str] = &[
    "123456", "tangan", "password", "hornbyneho", "iloveyou", "28707adnen", "lisa1842", "princess", "0BChrist",
    "sapphire24", "rockyou", "Kissarmy1!", "whateva89", "keno333_", "abc123", "bighottie", "0849831211", "nicole",
    "lumpibuniz", "sweep21", "577672", "daniel", "050462654", "horses33", "babygirl", "zuzuloka", "ms.jackson2008",
    "monkey", "a2gfamilymaster", "alana123456789", "lovely",
];

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let vector = PredicateVector::from_hex("cf26abdf9fbbaa06")?;
    let target = Crc32.digest(b"0BChrist")?;
    let spec = KeyspaceSpec::wordlist("demo", Arc::new(Wordlist::from_words(WORDS)));

    let mut pairs: Vec<CandidatePair> = Vec::new();
    let report = crack(&vector, &spec, &Crc32, &mut pairs)?;
    println!("hashed {} words, {} in the decoy set", report.hashed, report.hits);
    for p in &pairs {
        println!("  {:<16} {}", String::from_utf8_lossy(&p.password), p.digest.to_hex().to_uppercase());
    }

    let lookup = chk_cs(&pairs, &target, &Crc32);
    let found = lookup.cleartext().map(String::from_utf8_lossy);
    println!("target {} -> {:?}", target.to_hex().to_uppercase(), found);
    assert_eq!(pairs.len(), 20);
    assert_eq!(lookup.cleartext(), Some(&b"0BChrist"[..]));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
