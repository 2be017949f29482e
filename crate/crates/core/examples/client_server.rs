// A cracking server on localhost and a client that plans its vector
// locally, uploads a small wordlist, and streams the candidates back.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threepc::hashers::{Crc32, Hasher};
use threepc::keyspace::Wordlist;
use threepc::planner::{PlanRequest, PlanStore};
use threepc::protocol::{client_session, Server, ServerConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let server = Server::bind("127.0.0.1:0", ServerConfig { workers: 2, ..ServerConfig::default() })?.spawn()?;
    println!("server on {}", server.addr());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let words: Vec<Vec<u8>> = (0..20_000)
        .map(|_| (0..8).map(|_| rng.random_range(b'a'..=b'z')).collect())
        .collect();
    let list = Wordlist::from_words(&words);
    let target = Crc32.digest(&words[4242])?;

    let potfile = std::env::temp_dir().join(format!("threepc-example-{}.pot", std::process::id()));
    let outcome = client_session(
        server.addr(),
        PlanRequest {
            algo: "crc32".into(),
            target: target.clone(),
            keyspace: "wordlist:upload".into(),
            keyspace_size: BigUint::from(list.len()),
            r: "25".into(),
            tolerance: 0.05,
            seed: 3,
        },
        &mut PlanStore::new(),
        Some(&list.to_bytes()),
        &potfile,
    );
    let _ = std::fs::remove_file(&potfile);
    server.shutdown();
    let outcome = outcome?;

    println!("server rate {} H/s for {}", outcome.info.rate_hps, outcome.info.algo);
    println!("sent vector {}", outcome.plan.vector.to_hex());
    println!("{} candidates back from {} hashed", outcome.summary.hits, outcome.summary.hashed);
    let wire = String::from_utf8_lossy(&outcome.outbound).to_lowercase();
    println!("target digest on the wire: {}", wire.contains(&target.to_hex()));
    println!(
        "cleartext: {}",
        String::from_utf8_lossy(outcome.lookup.cleartext().ok_or("target not among candidates")?)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
