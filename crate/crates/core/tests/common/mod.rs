//! Oracles shared by the integration tests. Nothing here calls into the
//! library's hashing or matching code.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use threepc::hashers::{HashError, Hasher};
use threepc::predicate::{Digest, PredicateVector};

/// Bit-at-a-time reflected CRC-32.
pub fn crc32_bitwise(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc ^= u32::from(b);
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

pub fn crc32_nibbles(data: &[u8]) -> Vec<u8> {
    let c = crc32_bitwise(data);
    (0..8).rev().map(|i| ((c >> (4 * i)) & 0xf) as u8).collect()
}

/// Plain range test, one nibble at a time.
pub fn in_ranges(bounds: &[(u8, u8)], nibbles: &[u8]) -> bool {
    bounds.len() == nibbles.len() && bounds.iter().zip(nibbles).all(|(&(lo, hi), &n)| lo <= n && n <= hi)
}

/// CRC-32 cut to its leading `bytes` bytes, so short digests can be tested.
pub struct ShortCrc {
    pub bytes: usize,
    pub name: String,
}

impl ShortCrc {
    pub fn new(bytes: usize) -> Self {
        ShortCrc {
            bytes,
            name: format!("crc32/{}", bytes * 8),
        }
    }
}

impl Hasher for ShortCrc {
    fn id(&self) -> &str {
        &self.name
    }

    fn digest_nibbles(&self) -> usize {
        self.bytes * 2
    }

    fn hash_into(&self, password: &[u8], out: &mut [u8]) -> Result<(), HashError> {
        out.copy_from_slice(&crc32_bitwise(password).to_be_bytes()[..self.bytes]);
        Ok(())
    }
}

/// Every candidate of a mask given as explicit character sets, rightmost
/// position fastest.
pub fn expand(positions: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for chars in positions {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                chars.iter().map(move |&c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn digest_from_nibbles(n: &[u8]) -> Digest {
    Digest::from_nibbles(n.to_vec()).unwrap()
}

pub fn vector(bounds: &[(u8, u8)]) -> PredicateVector {
    PredicateVector::new(bounds.to_vec()).unwrap()
}

/// A random mask position as (mask text, characters it stands for).
pub fn small_token(rng: &mut ChaCha8Rng) -> (String, Vec<u8>) {
    let options: [(&str, &[u8]); 8] = [
        ("?d", b"0123456789"),
        ("?l", b"abcdefghijklmnopqrstuvwxyz"),
        ("?u", b"ABCDEFGHIJKLMNOPQRSTUVWXYZ"),
        ("?{d}", b"0123456789"),
        ("a", b"a"),
        ("Z", b"Z"),
        ("??", b"?"),
        ("?x41", b"A"),
    ];
    let (text, chars) = options[rng.random_range(0..options.len())];
    (text.to_string(), chars.to_vec())
}

pub fn random_mask(rng: &mut ChaCha8Rng, len: usize) -> (String, Vec<Vec<u8>>) {
    let tokens: Vec<(String, Vec<u8>)> = (0..len).map(|_| small_token(rng)).collect();
    let text = tokens.iter().map(|t| t.0.as_str()).collect();
    (text, tokens.into_iter().map(|t| t.1).collect())
}

/// The twenty candidates of the dictionary toy example.
pub const TOY1_ROWS: [(&str, &str); 20] = [
    ("tangan", "C5AEFBA5"),
    ("hornbyneho", "C3AEFBA0"),
    ("28707adnen", "C4AE9BA4"),
    ("lisa1842", "C4BECBA2"),
    ("0BChrist", "C6BFABA2"),
    ("sapphire24", "C6BFDBA2"),
    ("Kissarmy1!", "D2ADFBA6"),
    ("whateva89", "D2BE9BA3"),
    ("keno333_", "D3BDABA3"),
    ("bighottie", "D4AEABA2"),
    ("0849831211", "D4BFDBA6"),
    ("lumpibuniz", "E3ADEBA4"),
    ("sweep21", "E3BEEBA6"),
    ("577672", "E3BEFBA5"),
    ("050462654", "E5BDBBA1"),
    ("horses33", "F2BEBBA0"),
    ("zuzuloka", "F3AECBA1"),
    ("ms.jackson2008", "F3BEDBA5"),
    ("a2gfamilymaster", "F5BDDBA5"),
    ("alana123456789", "F6ADABA2"),
];

pub const TOY1_VECTOR: &str = "CF26ABDF9FBBAA06";
pub const TOY1_TARGET: &str = "C6BFABA2";
pub const ROCKYOU_SIZE: u64 = 14_344_391;

/// The brute-force toy example's vector over SHA-256.
pub const TOY2_VECTOR: &str = "7c27385c3f3f3f3f3f0c3f3f3f3f3f0c3f0c3f3f0c3f3f3f3f3f0c0c3f0c0c3f3f3f3f0c3f0c0c0c0c3f0c0c3f3f0c0c0c3f0c3f0c0c3f0c0c3f0c0c3f0c0c3f";

pub const TOY2_ROWS: [(&str, &str); 9] = [
    ("15851680", "85869d73ebe4c562cbde168898669053"),
    ("18662804", "a58bbf75d9cad8fc764cb3f364823a3b"),
    ("28251765", "b26c78a4916d348565d986d4a6926034"),
    ("36823110", "b27ccbfa99fc96dc38a445accd40d148"),
    ("37012370", "945ab8ad984bfcb38b4f36cc36b73cae"),
    ("43256891", "b23be566408ad8d2f1ac0d84330c3127"),
    ("56995169", "7366edc5bc43387536ba6f47ad2ac834"),
    ("60409880", "b689a9c7a5d539c8abfc197ae87a705e"),
    ("98509815", "b3859a5f5ccfef995bd723c35598d137"),
];

/// One random engine job and the pairs a brute-force filter finds for it.
pub struct OracleCase {
    pub label: String,
    pub hasher: Box<dyn Hasher>,
    pub vector: PredicateVector,
    pub spec: threepc::keyspace::KeyspaceSpec,
    /// (password, digest nibbles) in keyspace order.
    pub expected: Vec<(Vec<u8>, Vec<u8>)>,
}

fn random_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<u8>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let len = rng.random_range(1..=12);
        let w: Vec<u8> = (0..len).map(|_| rng.random_range(b'!'..=b'~')).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// A random instance with at most `max_size` candidates and `l` in 2..=8.
pub fn oracle_case(rng: &mut ChaCha8Rng, max_size: usize) -> OracleCase {
    use std::sync::Arc;
    use threepc::keyspace::{CorpusSource, KeyspaceSpec, Wordlist};

    let bytes = rng.random_range(1..=4usize);
    let hasher: Box<dyn Hasher> = if bytes == 4 {
        Box::new(threepc::hashers::Crc32)
    } else {
        Box::new(ShortCrc::new(bytes))
    };
    let l = bytes * 2;
    // Wide windows keep a useful share of hits at every length.
    let narrow = rng.random_bool(0.3);
    let bounds: Vec<(u8, u8)> = (0..l)
        .map(|_| {
            let w = if narrow { rng.random_range(1..=16u8) } else { rng.random_range(8..=16u8) };
            let lo = rng.random_range(0..=16 - w);
            (lo, lo + w - 1)
        })
        .collect();

    let (label, spec, candidates) = match rng.random_range(0..3) {
        0 => loop {
            let len = rng.random_range(1..=5usize);
            let (text, positions) = random_mask(rng, len);
            let size: usize = positions.iter().map(Vec::len).product();
            if size <= max_size {
                let spec = KeyspaceSpec::mask(&text).unwrap();
                break (format!("mask:{text}"), spec, expand(&positions));
            }
        },
        1 => {
            let n = rng.random_range(1..=max_size.min(5000));
            let words = random_words(rng, n);
            let list = Arc::new(Wordlist::from_words(words.iter().map(Vec::as_slice)));
            (format!("wordlist of {n}"), KeyspaceSpec::wordlist("w", list), words)
        }
        _ => loop {
            let n = rng.random_range(1..=200usize);
            let len = rng.random_range(0..=2usize);
            let (tail, positions) = random_mask(rng, len);
            let tails = expand(&positions);
            if n * tails.len() > max_size {
                continue;
            }
            let words = random_words(rng, n);
            let list = Arc::new(Wordlist::from_words(words.iter().map(Vec::as_slice)));
            let text = format!("hybrid:w:?w{tail}");
            let spec = KeyspaceSpec::parse(&text, &CorpusSource::Inline(list)).unwrap();
            let cands = words
                .iter()
                .flat_map(|w| tails.iter().map(move |t| [w.as_slice(), t].concat()))
                .collect();
            break (format!("{text} over {n} words"), spec, cands);
        },
    };

    let expected = candidates
        .into_iter()
        .filter_map(|c| {
            let d = crc32_nibbles(&c)[..l].to_vec();
            in_ranges(&bounds, &d).then_some((c, d))
        })
        .collect();
    OracleCase {
        label: format!("l={l} {label}"),
        hasher,
        vector: vector(&bounds),
        spec,
        expected,
    }
}

/// Engine output as (password, digest nibbles).
pub fn flatten(pairs: &[threepc::engine::CandidatePair]) -> Vec<(Vec<u8>, Vec<u8>)> {
    pairs
        .iter()
        .map(|p| (p.password.clone(), p.digest.nibbles().to_vec()))
        .collect()
}
