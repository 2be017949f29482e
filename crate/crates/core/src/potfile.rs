//! Candidate set files: one `<digest-hex>:<password>` record per line.
//!
//! The digest is lowercase hex of fixed width for the algorithm, so a
//! record is split at that width and the password may itself contain `:`.
//! An incomplete set is flagged by an empty `<file>.partial` next to it.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{CandidatePair, Sink};
use crate::predicate::Digest;

#[derive(Debug, Error)]
pub enum PotfileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
}

/// Appends records to any writer.
pub struct PotfileWriter<W: Write> {
    out: W,
    written: u64,
}

impl<W: Write> PotfileWriter<W> {
    pub fn new(out: W) -> Self {
        PotfileWriter { out, written: 0 }
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    pub fn write_pair(&mut self, pair: &CandidatePair) -> io::Result<()> {
        if pair.password.contains(&b'\n') {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "password contains a newline and cannot be stored in a potfile",
            ));
        }
        self.out.write_all(pair.digest.to_hex().as_bytes())?;
        self.out.write_all(b":")?;
        self.out.write_all(&pair.password)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }
}

impl PotfileWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self, PotfileError> {
        let f = File::create(path).map_err(|e| io_err(path, e))?;
        Ok(Self::new(BufWriter::new(f)))
    }
}

impl<W: Write> Sink for PotfileWriter<W> {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        for p in batch {
            self.write_pair(p)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn format_potfile(pairs: &[CandidatePair]) -> Vec<u8> {
    let mut w = PotfileWriter::new(Vec::new());
    w.append(pairs).expect("writing to memory");
    w.into_inner()
}

/// Parses records whose digests are `nibbles` hex characters wide.
pub fn parse_potfile(data: &[u8], nibbles: usize) -> Result<Vec<CandidatePair>, PotfileError> {
    let body = data.strip_suffix(b"\n").unwrap_or(data);
    if data.is_empty() {
        return Ok(Vec::new());
    }
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 1;
            let fail = |message: String| PotfileError::Parse {
                line: line_no,
                message,
            };
            if line.len() <= nibbles || line[nibbles] != b':' {
                return Err(fail(format!(
                    "expected {nibbles} hex digits followed by ':'"
                )));
            }
            let hex = std::str::from_utf8(&line[..nibbles])
                .map_err(|_| fail("digest is not hex".into()))?;
            let digest = Digest::from_hex(hex).map_err(|e| fail(e.to_string()))?;
            Ok(CandidatePair {
                password: line[nibbles + 1..].to_vec(),
                digest,
            })
        })
        .collect()
}

pub fn read_potfile(path: &Path, nibbles: usize) -> Result<Vec<CandidatePair>, PotfileError> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    parse_potfile(&data, nibbles)
}

pub fn write_potfile(path: &Path, pairs: &[CandidatePair]) -> Result<(), PotfileError> {
    fs::write(path, format_potfile(pairs)).map_err(|e| io_err(path, e))
}

pub fn partial_marker(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

pub fn mark_partial(path: &Path) -> Result<(), PotfileError> {
    let m = partial_marker(path);
    fs::write(&m, b"").map_err(|e| io_err(&m, e))
}

pub fn clear_partial(path: &Path) -> Result<(), PotfileError> {
    let m = partial_marker(path);
    match fs::remove_file(&m) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(io_err(&m, e)),
        _ => Ok(()),
    }
}

pub fn is_partial(path: &Path) -> bool {
    partial_marker(path).exists()
}

fn io_err(path: &Path, e: io::Error) -> PotfileError {
    PotfileError::Io(path.display().to_string(), e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(hex: &str, pw: &[u8]) -> CandidatePair {
        CandidatePair {
            password: pw.to_vec(),
            digest: hex.parse().unwrap(),
        }
    }

    #[test]
    fn round_trip_with_colons_and_raw_bytes() {
        let pairs = vec![
            pair("C6BFABA2", b"0BChrist"),
            pair("c5aefba5", b"a:b::c"),
            pair("00000000", &[0xe9, b'\r', 0xff]),
        ];
        let text = format_potfile(&pairs);
        assert!(text.starts_with(b"c6bfaba2:0BChrist\n"));
        assert_eq!(parse_potfile(&text, 8).unwrap(), pairs);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_potfile(b"c6bfaba2:ok\nzzzzzzzz:bad\n", 8).unwrap_err();
        assert!(matches!(err, PotfileError::Parse { line: 2, .. }), "{err}");
        let err = parse_potfile(b"c6bfaba2:ok\nc6bfaba2\n", 8).unwrap_err();
        assert!(matches!(err, PotfileError::Parse { line: 2, .. }));
        assert!(parse_potfile(b"c6bfaba:x\n", 8).is_err());
    }

    #[test]
    fn empty_password_and_empty_file() {
        assert_eq!(parse_potfile(b"", 8).unwrap(), vec![]);
        assert_eq!(parse_potfile(b"c6bfaba2:\n", 8).unwrap()[0].password, b"");
    }

    #[test]
    fn newline_passwords_refused() {
        let mut w = PotfileWriter::new(Vec::new());
        assert!(w.write_pair(&pair("00000000", b"a\nb")).is_err());
    }

    #[test]
    fn partial_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.pot");
        write_potfile(&p, &[]).unwrap();
        assert!(!is_partial(&p));
        mark_partial(&p).unwrap();
        assert!(is_partial(&p));
        assert_eq!(partial_marker(&p), dir.path().join("out.pot.partial"));
        clear_partial(&p).unwrap();
        clear_partial(&p).unwrap();
        assert!(!is_partial(&p));
    }
}
