//! The cracking data set: wordlists, masks and hybrid word+mask rules.
//!
//! Every keyspace is a product of positions. A mask position is a character
//! set, a wordlist is one position holding every entry, and a hybrid mixes
//! both. Candidates are numbered in odometer order with the rightmost
//! position turning fastest, so any index range can be enumerated without
//! touching the rest of the space.

pub mod mask;
pub mod wordlist;

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

pub use mask::{format_mask, parse_mask, MaskToken};
pub use wordlist::{IngestReport, Wordlist, MAX_CANDIDATE_LEN};

#[derive(Debug, Error)]
pub enum KeyspaceError {
    #[error("invalid keyspace descriptor {0:?}; expected wordlist:<name>, mask:<tokens> or hybrid:<name>:<tokens>")]
    BadDescriptor(String),
    #[error("invalid mask {mask:?} at byte {at}")]
    BadMask { mask: String, at: usize },
    #[error("unknown mask class {0:?}")]
    UnknownClass(String),
    #[error("hybrid mask must contain exactly one ?w, found {0}")]
    WordSlots(usize),
    #[error("?w is only allowed in hybrid masks")]
    WordInMask,
    #[error("corpus name {0:?} must not contain path separators")]
    BadCorpusName(String),
    #[error("unknown corpus {0:?}")]
    UnknownCorpus(String),
    #[error("keyspace has {0} candidates, more than can be indexed")]
    TooLarge(BigUint),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Parsed descriptor text, before any corpus is loaded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Descriptor {
    Wordlist { name: String },
    Mask { tokens: Vec<MaskToken> },
    Hybrid { name: String, tokens: Vec<MaskToken> },
}

impl Descriptor {
    pub fn parse(text: &str) -> Result<Self, KeyspaceError> {
        let bad = || KeyspaceError::BadDescriptor(text.to_string());
        let (mode, rest) = text.split_once(':').ok_or_else(bad)?;
        match mode {
            "wordlist" => {
                check_name(rest)?;
                Ok(Descriptor::Wordlist { name: rest.into() })
            }
            "mask" => {
                let tokens = parse_mask(rest)?;
                if tokens.contains(&MaskToken::Word) {
                    return Err(KeyspaceError::WordInMask);
                }
                Ok(Descriptor::Mask { tokens })
            }
            "hybrid" => {
                let (name, m) = rest.split_once(':').ok_or_else(bad)?;
                check_name(name)?;
                let tokens = parse_mask(m)?;
                let words = tokens.iter().filter(|t| **t == MaskToken::Word).count();
                if words != 1 {
                    return Err(KeyspaceError::WordSlots(words));
                }
                Ok(Descriptor::Hybrid {
                    name: name.into(),
                    tokens,
                })
            }
            _ => Err(bad()),
        }
    }

    pub fn corpus_name(&self) -> Option<&str> {
        match self {
            Descriptor::Wordlist { name } | Descriptor::Hybrid { name, .. } => Some(name),
            Descriptor::Mask { .. } => None,
        }
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Wordlist { name } => write!(f, "wordlist:{name}"),
            Descriptor::Mask { tokens } => write!(f, "mask:{}", format_mask(tokens)),
            Descriptor::Hybrid { name, tokens } => {
                write!(f, "hybrid:{name}:{}", format_mask(tokens))
            }
        }
    }
}

fn check_name(name: &str) -> Result<(), KeyspaceError> {
    if name.is_empty() || name.contains(['/', '\\', ':']) || name == "." || name == ".." {
        return Err(KeyspaceError::BadCorpusName(name.to_string()));
    }
    Ok(())
}

/// Where wordlist names are looked up.
#[derive(Clone, Debug, Default)]
pub enum CorpusSource {
    /// No corpora; wordlist descriptors fail to resolve.
    #[default]
    None,
    /// `<dir>/<name>`, falling back to `<dir>/<name>.txt`.
    Dir(PathBuf),
    /// A single uploaded list that answers to any name.
    Inline(Arc<Wordlist>),
}

impl CorpusSource {
    pub fn dir(path: impl AsRef<Path>) -> Self {
        CorpusSource::Dir(path.as_ref().to_path_buf())
    }

    pub fn load(&self, name: &str) -> Result<Arc<Wordlist>, KeyspaceError> {
        check_name(name)?;
        match self {
            CorpusSource::None => Err(KeyspaceError::UnknownCorpus(name.to_string())),
            CorpusSource::Inline(w) => Ok(Arc::clone(w)),
            CorpusSource::Dir(dir) => {
                for candidate in [dir.join(name), dir.join(format!("{name}.txt"))] {
                    if candidate.is_file() {
                        return Ok(Arc::new(Wordlist::load(&candidate)?));
                    }
                }
                Err(KeyspaceError::UnknownCorpus(name.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Position {
    Chars(Vec<u8>),
    Words(Arc<Wordlist>),
}

impl Position {
    fn size(&self) -> usize {
        match self {
            Position::Chars(c) => c.len(),
            Position::Words(w) => w.len(),
        }
    }

    fn push(&self, digit: usize, buf: &mut Vec<u8>) {
        match self {
            Position::Chars(c) => buf.push(c[digit]),
            Position::Words(w) => buf.extend_from_slice(w.get(digit)),
        }
    }
}

/// A resolved keyspace ready for counting and enumeration.
#[derive(Clone, Debug)]
pub struct KeyspaceSpec {
    descriptor: Descriptor,
    positions: Vec<Position>,
    cardinality: BigUint,
}

impl KeyspaceSpec {
    pub fn resolve(descriptor: Descriptor, corpus: &CorpusSource) -> Result<Self, KeyspaceError> {
        let words = descriptor.corpus_name().map(|n| corpus.load(n)).transpose()?;
        let positions = match &descriptor {
            Descriptor::Wordlist { .. } => vec![Position::Words(words.unwrap())],
            Descriptor::Mask { tokens } | Descriptor::Hybrid { tokens, .. } => tokens
                .iter()
                .map(|t| match t {
                    MaskToken::Literal(b) => Position::Chars(vec![*b]),
                    MaskToken::Class { chars, .. } => Position::Chars(chars.clone()),
                    MaskToken::Word => Position::Words(Arc::clone(words.as_ref().unwrap())),
                })
                .collect(),
        };
        let cardinality = positions
            .iter()
            .fold(BigUint::one(), |acc, p| acc * BigUint::from(p.size()));
        Ok(KeyspaceSpec {
            descriptor,
            positions,
            cardinality,
        })
    }

    pub fn parse(text: &str, corpus: &CorpusSource) -> Result<Self, KeyspaceError> {
        Self::resolve(Descriptor::parse(text)?, corpus)
    }

    pub fn mask(tokens: &str) -> Result<Self, KeyspaceError> {
        Self::parse(&format!("mask:{tokens}"), &CorpusSource::None)
    }

    pub fn wordlist(name: &str, words: Arc<Wordlist>) -> Self {
        Self::resolve(
            Descriptor::Wordlist { name: name.into() },
            &CorpusSource::Inline(words),
        )
        .expect("inline corpus always resolves")
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    /// Exact `|DS|`.
    pub fn cardinality(&self) -> &BigUint {
        &self.cardinality
    }

    /// `|DS|` as an enumeration bound; fails beyond `u128`.
    pub fn len(&self) -> Result<u128, KeyspaceError> {
        self.cardinality
            .to_u128()
            .ok_or_else(|| KeyspaceError::TooLarge(self.cardinality.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.positions.iter().any(|p| p.size() == 0)
    }

    /// The wordlist behind a wordlist or hybrid spec.
    pub fn words(&self) -> Option<&Arc<Wordlist>> {
        self.positions.iter().find_map(|p| match p {
            Position::Words(w) => Some(w),
            Position::Chars(_) => None,
        })
    }

    /// Candidate number `index`.
    pub fn get(&self, index: u128) -> Option<Vec<u8>> {
        let mut out = None;
        self.for_each_in(index..index.saturating_add(1), |c| out = Some(c.to_vec()));
        out
    }

    /// Calls `f` on every candidate in `range`, in order. Indices past the
    /// end of the keyspace are ignored.
    pub fn for_each_in(&self, range: Range<u128>, mut f: impl FnMut(&[u8])) {
        self.try_for_each_in(range, |c| {
            f(c);
            true
        });
    }

    /// Like [`for_each_in`](Self::for_each_in) but stops as soon as `f`
    /// returns false. Returns how many candidates were visited.
    pub fn try_for_each_in(&self, range: Range<u128>, mut f: impl FnMut(&[u8]) -> bool) -> u128 {
        let Ok(total) = self.len() else {
            // Larger than u128: indices still fit, the bound check does not.
            return self.walk(range, &mut f);
        };
        let end = range.end.min(total);
        if range.start >= end {
            return 0;
        }
        self.walk(range.start..end, &mut f)
    }

    fn walk(&self, range: Range<u128>, f: &mut impl FnMut(&[u8]) -> bool) -> u128 {
        let n = self.positions.len();
        if range.is_empty() {
            return 0;
        }
        // Mixed-radix digits of the start index, rightmost least significant.
        let mut digits = vec![0usize; n];
        let mut rem = range.start;
        for (d, p) in digits.iter_mut().zip(&self.positions).rev() {
            let size = p.size() as u128;
            *d = (rem % size) as usize;
            rem /= size;
        }
        let mut buf = Vec::with_capacity(64);
        let mut starts = vec![0usize; n];
        let mut from = 0;
        let mut visited = 0u128;
        let count = range.end - range.start;
        loop {
            buf.truncate(if from < n { starts[from] } else { buf.len() });
            for k in from..n {
                starts[k] = buf.len();
                self.positions[k].push(digits[k], &mut buf);
            }
            visited += 1;
            if !f(&buf) || visited == count {
                return visited;
            }
            // Advance the odometer; `from` is the leftmost changed position.
            let mut k = n;
            loop {
                if k == 0 {
                    return visited;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < self.positions[k].size() {
                    break;
                }
                digits[k] = 0;
            }
            from = k;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        let mut all = Vec::new();
        self.for_each_in(0..u128::MAX, |c| all.push(c.to_vec()));
        all.into_iter()
    }
}

impl fmt::Display for KeyspaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.descriptor.fmt(f)
    }
}

/// Splits `0..total` into `n_parts` contiguous ranges whose sizes differ by
/// at most one, larger parts first.
pub fn partition(total: u128, n_parts: usize) -> Vec<Range<u128>> {
    let n = n_parts.max(1) as u128;
    let (base, extra) = (total / n, total % n);
    let mut start = 0;
    (0..n)
        .map(|i| {
            let len = base + u128::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> Arc<Wordlist> {
        Arc::new(Wordlist::from_words(ws))
    }

    fn strings(spec: &KeyspaceSpec) -> Vec<String> {
        spec.iter()
            .map(|c| String::from_utf8(c).unwrap())
            .collect()
    }

    #[test]
    fn cardinality_examples() {
        let alnum = KeyspaceSpec::mask(&"?{lud}".repeat(9)).unwrap();
        assert_eq!(alnum.cardinality(), &BigUint::from(13_537_086_546_263_552u64));
        assert_eq!(alnum.len().unwrap(), 62u128.pow(9));
        let pin = KeyspaceSpec::mask(&"?d".repeat(8)).unwrap();
        assert_eq!(pin.len().unwrap(), 100_000_000);

        let list: Vec<String> = (0..605_834).map(|i| format!("w{i}")).collect();
        let hybrid = KeyspaceSpec::parse(
            "hybrid:french:?w?d?s",
            &CorpusSource::Inline(Arc::new(Wordlist::from_words(&list))),
        )
        .unwrap();
        assert_eq!(hybrid.len().unwrap(), 605_834 * 10 * 32);
    }

    #[test]
    fn odometer_order() {
        let s = strings(&KeyspaceSpec::mask("?d?d").unwrap());
        let expect: Vec<String> = (0..100).map(|i| format!("{i:02}")).collect();
        assert_eq!(s, expect);
    }

    #[test]
    fn hybrid_order() {
        let spec = KeyspaceSpec::parse("hybrid:x:?w?d", &CorpusSource::Inline(words(&["ab", "cd"])))
            .unwrap();
        let s = strings(&spec);
        assert_eq!(s.len(), 20);
        assert_eq!(&s[..3], ["ab0", "ab1", "ab2"]);
        assert_eq!(&s[9..11], ["ab9", "cd0"]);
        assert_eq!(s[19], "cd9");
    }

    #[test]
    fn word_in_middle_changes_length() {
        let spec = KeyspaceSpec::parse(
            "hybrid:x:?d?w!",
            &CorpusSource::Inline(words(&["a", "long"])),
        )
        .unwrap();
        let s = strings(&spec);
        assert_eq!(&s[..3], ["0a!", "0long!", "1a!"]);
        assert_eq!(s.len(), 20);
    }

    #[test]
    fn ranges_resume_mid_space() {
        let spec = KeyspaceSpec::mask("?l?d?d").unwrap();
        let all = strings(&spec);
        let mut got = Vec::new();
        spec.for_each_in(517..1033, |c| got.push(String::from_utf8(c.to_vec()).unwrap()));
        assert_eq!(got, all[517..1033]);
        assert_eq!(spec.get(2600), None);
        assert_eq!(spec.get(2599).unwrap(), b"z99");
        assert_eq!(spec.get(2598).unwrap(), b"z98");
    }

    #[test]
    fn try_for_each_stops() {
        let spec = KeyspaceSpec::mask("?d?d").unwrap();
        let mut seen = 0;
        let visited = spec.try_for_each_in(0..100, |_| {
            seen += 1;
            seen < 5
        });
        assert_eq!((seen, visited), (5, 5));
    }

    #[test]
    fn partitions() {
        let parts = partition(100_000_000, 8);
        assert_eq!(parts.len(), 8);
        assert!(parts.iter().all(|r| r.end - r.start == 12_500_000));
        assert_eq!(partition(77, 1), vec![0..77]);
        let uneven = partition(10, 4);
        assert_eq!(uneven, vec![0..3, 3..6, 6..8, 8..10]);
        assert_eq!(partition(2, 4).iter().filter(|r| r.is_empty()).count(), 2);

        let spec = KeyspaceSpec::mask("?d?l").unwrap();
        let mut joined = Vec::new();
        for r in partition(spec.len().unwrap(), 7) {
            spec.for_each_in(r, |c| joined.push(c.to_vec()));
        }
        assert_eq!(joined, spec.iter().collect::<Vec<_>>());
    }

    #[test]
    fn descriptors() {
        for text in ["wordlist:rockyou", "mask:?d?d?d", "hybrid:french:?w?d?s"] {
            assert_eq!(Descriptor::parse(text).unwrap().to_string(), text);
        }
        for bad in [
            "rockyou",
            "wordlist:../etc/passwd",
            "wordlist:",
            "mask:?w",
            "hybrid:x:?d",
            "hybrid:x:?w?w",
            "hybrid:x",
            "brute:?d",
        ] {
            assert!(Descriptor::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn corpus_dir_resolution() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("tiny.txt"), b"one\ntwo\none\n").unwrap();
        std::fs::write(dir.path().join("exact"), b"x\n").unwrap();
        let src = CorpusSource::dir(dir.path());
        assert_eq!(KeyspaceSpec::parse("wordlist:tiny", &src).unwrap().len().unwrap(), 2);
        assert_eq!(KeyspaceSpec::parse("wordlist:exact", &src).unwrap().len().unwrap(), 1);
        assert!(matches!(
            KeyspaceSpec::parse("wordlist:missing", &src),
            Err(KeyspaceError::UnknownCorpus(_))
        ));
        assert!(matches!(
            KeyspaceSpec::parse("wordlist:tiny", &CorpusSource::None),
            Err(KeyspaceError::UnknownCorpus(_))
        ));
    }

    #[test]
    fn empty_keyspaces() {
        let spec = KeyspaceSpec::wordlist("e", Arc::new(Wordlist::from_bytes(b"")));
        assert!(spec.is_empty());
        assert_eq!(spec.len().unwrap(), 0);
        assert_eq!(spec.iter().count(), 0);
        let m = KeyspaceSpec::mask("").unwrap();
        assert_eq!(strings(&m), [""]);
    }
}
