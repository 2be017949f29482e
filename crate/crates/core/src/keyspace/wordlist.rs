use std::collections::HashSet;
use std::fs;
use std::ops::Range;
use std::path::Path;

use super::KeyspaceError;

/// Longest accepted candidate, in bytes.
pub const MAX_CANDIDATE_LEN: usize = 256;

/// What happened to each input line during ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub lines: usize,
    pub kept: usize,
    pub empty: usize,
    pub duplicates: usize,
    pub too_long: usize,
}

/// Deduplicated candidate list stored in one contiguous buffer.
///
/// Entries are opaque bytes in first-occurrence order; entry `i` occupies
/// `data[offsets[i]..offsets[i + 1]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wordlist {
    data: Vec<u8>,
    offsets: Vec<usize>,
    report: IngestReport,
}

impl Wordlist {
    /// Splits on `\n`, strips a trailing `\r`, drops empty lines and lines
    /// longer than [`MAX_CANDIDATE_LEN`], and keeps the first occurrence of
    /// each remaining line.
    pub fn from_bytes(raw: &[u8]) -> Self {
        let mut report = IngestReport::default();
        let mut seen: HashSet<&[u8]> = HashSet::new();
        let mut data = Vec::with_capacity(raw.len());
        let mut offsets = vec![0];
        let body = raw.strip_suffix(b"\n").unwrap_or(raw);
        if !raw.is_empty() {
            for line in body.split(|&b| b == b'\n') {
                report.lines += 1;
                let line = line.strip_suffix(b"\r").unwrap_or(line);
                if line.is_empty() {
                    report.empty += 1;
                } else if line.len() > MAX_CANDIDATE_LEN {
                    report.too_long += 1;
                } else if !seen.insert(line) {
                    report.duplicates += 1;
                } else {
                    data.extend_from_slice(line);
                    offsets.push(data.len());
                }
            }
        }
        report.kept = offsets.len() - 1;
        data.shrink_to_fit();
        Wordlist {
            data,
            offsets,
            report,
        }
    }

    pub fn from_words<I, W>(words: I) -> Self
    where
        I: IntoIterator<Item = W>,
        W: AsRef<[u8]>,
    {
        let mut raw = Vec::new();
        for w in words {
            raw.extend_from_slice(w.as_ref());
            raw.push(b'\n');
        }
        Self::from_bytes(&raw)
    }

    pub fn load(path: &Path) -> Result<Self, KeyspaceError> {
        let raw = fs::read(path).map_err(|e| KeyspaceError::Io(path.display().to_string(), e))?;
        Ok(Self::from_bytes(&raw))
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, index: usize) -> &[u8] {
        &self.data[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.offsets.windows(2).map(|w| &self.data[w[0]..w[1]])
    }

    /// Byte span of entries `range` inside the packed buffer.
    pub fn byte_range(&self, range: Range<usize>) -> Range<usize> {
        self.offsets[range.start]..self.offsets[range.end]
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    /// Newline-joined entries, suitable for re-ingestion or inline upload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + self.len());
        for w in self.iter() {
            out.extend_from_slice(w);
            out.push(b'\n');
        }
        out
    }
}
