//! Wire format and drivers for the client/server exchange.
//!
//! A frame is a 4-byte big-endian payload length, a 1-byte type tag and the
//! payload. Integers inside payloads are 8-byte big-endian, strings and byte
//! blobs carry a 4-byte big-endian length prefix. One job runs per
//! connection: hash-info request, acknowledgement, job submission, zero or
//! more candidate chunks, then a done marker.

pub mod client;
pub mod server;

use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::engine::CandidatePair;
use crate::predicate::Digest;

pub use client::{
    client_session, run_job, ClientSession, HashInfo, JobSummary, PlanSource, SessionError,
    SessionOutcome,
};
pub use server::{Server, ServerConfig, ServerHandle};

/// Default cap on a single frame's payload.
pub const DEFAULT_MAX_FRAME: u32 = 64 << 20;
/// Cap on an inline corpus upload.
pub const MAX_INLINE_CORPUS: u64 = 256 << 20;

pub const TAG_HASH_INFO_REQUEST: u8 = 1;
pub const TAG_HASH_INFO_ACK: u8 = 2;
pub const TAG_JOB_SUBMIT: u8 = 3;
pub const TAG_CANDIDATE_CHUNK: u8 = 4;
pub const TAG_JOB_DONE: u8 = 5;
pub const TAG_ERROR_REPLY: u8 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    HashInfoRequest {
        algo: String,
    },
    HashInfoAck {
        algo: String,
        digest_nibbles: u64,
        rate_hps: u64,
    },
    JobSubmit {
        algo: String,
        vector_hex: String,
        keyspace: String,
        corpus: Option<Vec<u8>>,
    },
    CandidateChunk {
        pairs: Vec<CandidatePair>,
    },
    JobDone {
        hashed: u64,
        hits: u64,
        elapsed_ms: u64,
    },
    ErrorReply {
        code: String,
        text: String,
    },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::HashInfoRequest { .. } => TAG_HASH_INFO_REQUEST,
            Message::HashInfoAck { .. } => TAG_HASH_INFO_ACK,
            Message::JobSubmit { .. } => TAG_JOB_SUBMIT,
            Message::CandidateChunk { .. } => TAG_CANDIDATE_CHUNK,
            Message::JobDone { .. } => TAG_JOB_DONE,
            Message::ErrorReply { .. } => TAG_ERROR_REPLY,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::HashInfoRequest { .. } => "HashInfoRequest",
            Message::HashInfoAck { .. } => "HashInfoAck",
            Message::JobSubmit { .. } => "JobSubmit",
            Message::CandidateChunk { .. } => "CandidateChunk",
            Message::JobDone { .. } => "JobDone",
            Message::ErrorReply { .. } => "ErrorReply",
        }
    }

    pub fn error(code: ErrorCode, text: impl Into<String>) -> Self {
        Message::ErrorReply {
            code: code.as_str().to_string(),
            text: text.into(),
        }
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Message::HashInfoRequest { algo } => put_bytes(&mut p, algo.as_bytes()),
            Message::HashInfoAck {
                algo,
                digest_nibbles,
                rate_hps,
            } => {
                put_bytes(&mut p, algo.as_bytes());
                put_u64(&mut p, *digest_nibbles);
                put_u64(&mut p, *rate_hps);
            }
            Message::JobSubmit {
                algo,
                vector_hex,
                keyspace,
                corpus,
            } => {
                put_bytes(&mut p, algo.as_bytes());
                put_bytes(&mut p, vector_hex.as_bytes());
                put_bytes(&mut p, keyspace.as_bytes());
                match corpus {
                    Some(c) => {
                        put_u64(&mut p, 1);
                        put_bytes(&mut p, c);
                    }
                    None => put_u64(&mut p, 0),
                }
            }
            Message::CandidateChunk { pairs } => {
                put_u64(&mut p, pairs.len() as u64);
                for pair in pairs {
                    put_bytes(&mut p, pair.digest.to_hex().as_bytes());
                    put_bytes(&mut p, &pair.password);
                }
            }
            Message::JobDone {
                hashed,
                hits,
                elapsed_ms,
            } => {
                put_u64(&mut p, *hashed);
                put_u64(&mut p, *hits);
                put_u64(&mut p, *elapsed_ms);
            }
            Message::ErrorReply { code, text } => {
                put_bytes(&mut p, code.as_bytes());
                put_bytes(&mut p, text.as_bytes());
            }
        }
        p
    }

    /// The complete frame.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.encode_payload();
        let mut out = Vec::with_capacity(payload.len() + 5);
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.push(self.tag());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode_payload(tag: u8, payload: &[u8]) -> Result<Self, WireError> {
        let mut c = Cursor { buf: payload, pos: 0 };
        let msg = match tag {
            TAG_HASH_INFO_REQUEST => Message::HashInfoRequest { algo: c.string()? },
            TAG_HASH_INFO_ACK => Message::HashInfoAck {
                algo: c.string()?,
                digest_nibbles: c.u64()?,
                rate_hps: c.u64()?,
            },
            TAG_JOB_SUBMIT => Message::JobSubmit {
                algo: c.string()?,
                vector_hex: c.string()?,
                keyspace: c.string()?,
                corpus: match c.u64()? {
                    0 => None,
                    1 => Some(c.bytes()?.to_vec()),
                    n => return Err(WireError::Malformed(format!("corpus flag {n}"))),
                },
            },
            TAG_CANDIDATE_CHUNK => {
                let count = c.u64()?;
                // Each pair takes at least 8 bytes of length prefixes.
                if count > (payload.len() / 8) as u64 {
                    return Err(WireError::Malformed(format!("chunk claims {count} pairs")));
                }
                let mut pairs = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let hex = c.string()?;
                    let digest = Digest::from_hex(&hex)
                        .map_err(|e| WireError::Malformed(format!("digest {hex:?}: {e}")))?;
                    pairs.push(CandidatePair {
                        password: c.bytes()?.to_vec(),
                        digest,
                    });
                }
                Message::CandidateChunk { pairs }
            }
            TAG_JOB_DONE => Message::JobDone {
                hashed: c.u64()?,
                hits: c.u64()?,
                elapsed_ms: c.u64()?,
            },
            TAG_ERROR_REPLY => Message::ErrorReply {
                code: c.string()?,
                text: c.string()?,
            },
            other => return Err(WireError::UnknownTag(other)),
        };
        if c.pos != payload.len() {
            return Err(WireError::Malformed(format!(
                "{} trailing bytes",
                payload.len() - c.pos
            )));
        }
        Ok(msg)
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_be_bytes());
    out.extend_from_slice(b);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| WireError::Malformed("payload truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8], WireError> {
        let n = u32::from_be_bytes(self.take(4)?.try_into().unwrap());
        self.take(n as usize)
    }

    fn string(&mut self) -> Result<String, WireError> {
        String::from_utf8(self.bytes()?.to_vec())
            .map_err(|_| WireError::Malformed("string is not UTF-8".into()))
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    /// The peer closed the connection between frames.
    #[error("connection closed")]
    Closed,
    #[error("frame of {len} bytes exceeds the {max}-byte limit")]
    FrameTooLarge { len: u32, max: u32 },
    #[error("unknown frame type {0}")]
    UnknownTag(u8),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl WireError {
    pub fn code(&self) -> ErrorCode {
        match self {
            WireError::FrameTooLarge { .. } => ErrorCode::FrameTooLarge,
            _ => ErrorCode::MalformedFrame,
        }
    }
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()
}

/// Reads one frame. The payload of an oversized frame is not read.
pub fn read_message<R: Read>(r: &mut R, max_frame: u32) -> Result<Message, WireError> {
    let mut head = [0u8; 5];
    let mut got = 0;
    while got < head.len() {
        match r.read(&mut head[got..]) {
            Ok(0) if got == 0 => return Err(WireError::Closed),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(head[..4].try_into().unwrap());
    if len > max_frame {
        return Err(WireError::FrameTooLarge {
            len,
            max: max_frame,
        });
    }
    let tag = head[4];
    if !(TAG_HASH_INFO_REQUEST..=TAG_ERROR_REPLY).contains(&tag) {
        return Err(WireError::UnknownTag(tag));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Message::decode_payload(tag, &payload)
}

/// Error codes carried by [`Message::ErrorReply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCode {
    FrameTooLarge,
    MalformedFrame,
    OutOfOrder,
    UnknownAlgo,
    VectorLengthMismatch,
    BadVector,
    BadKeyspace,
    UnknownCorpus,
    CorpusTooLarge,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 10] = [
        ErrorCode::FrameTooLarge,
        ErrorCode::MalformedFrame,
        ErrorCode::OutOfOrder,
        ErrorCode::UnknownAlgo,
        ErrorCode::VectorLengthMismatch,
        ErrorCode::BadVector,
        ErrorCode::BadKeyspace,
        ErrorCode::UnknownCorpus,
        ErrorCode::CorpusTooLarge,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::FrameTooLarge => "frame-too-large",
            ErrorCode::MalformedFrame => "malformed-frame",
            ErrorCode::OutOfOrder => "out-of-order",
            ErrorCode::UnknownAlgo => "unknown-algo",
            ErrorCode::VectorLengthMismatch => "vector-length-mismatch",
            ErrorCode::BadVector => "bad-vector",
            ErrorCode::BadKeyspace => "bad-keyspace",
            ErrorCode::UnknownCorpus => "unknown-corpus",
            ErrorCode::CorpusTooLarge => "corpus-too-large",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == text)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_hash_info_request() {
        let f = Message::HashInfoRequest {
            algo: "crc32".into(),
        }
        .encode();
        assert_eq!(f, b"\x00\x00\x00\x09\x01\x00\x00\x00\x05crc32");
    }

    #[test]
    fn bit_exact_job_done() {
        let f = Message::JobDone {
            hashed: 100_000_000,
            hits: 9,
            elapsed_ms: 1,
        }
        .encode();
        let mut expect = vec![0, 0, 0, 24, TAG_JOB_DONE];
        expect.extend_from_slice(&100_000_000u64.to_be_bytes());
        expect.extend_from_slice(&9u64.to_be_bytes());
        expect.extend_from_slice(&1u64.to_be_bytes());
        assert_eq!(f, expect);
    }

    #[test]
    fn round_trips() {
        let msgs = [
            Message::HashInfoAck {
                algo: "sha256".into(),
                digest_nibbles: 64,
                rate_hps: 12_345_678,
            },
            Message::JobSubmit {
                algo: "crc32".into(),
                vector_hex: "cf26abdf9fbbaa06".into(),
                keyspace: "wordlist:rockyou".into(),
                corpus: Some(b"a\nb\n".to_vec()),
            },
            Message::JobSubmit {
                algo: "crc32".into(),
                vector_hex: "cf26abdf9fbbaa06".into(),
                keyspace: "mask:?d".into(),
                corpus: None,
            },
            Message::CandidateChunk {
                pairs: vec![CandidatePair {
                    password: b"a:b\xff".to_vec(),
                    digest: "c6bfaba2".parse().unwrap(),
                }],
            },
            Message::CandidateChunk { pairs: vec![] },
            Message::error(ErrorCode::OutOfOrder, "expected JobSubmit"),
        ];
        for m in msgs {
            let frame = m.encode();
            let back = read_message(&mut frame.as_slice(), DEFAULT_MAX_FRAME).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn oversized_and_unknown() {
        let frame = [0xff, 0xff, 0xff, 0xff, 1];
        assert!(matches!(
            read_message(&mut frame.as_slice(), DEFAULT_MAX_FRAME),
            Err(WireError::FrameTooLarge { .. })
        ));
        let frame = [0, 0, 0, 0, 9];
        assert!(matches!(
            read_message(&mut frame.as_slice(), DEFAULT_MAX_FRAME),
            Err(WireError::UnknownTag(9))
        ));
    }

    #[test]
    fn malformed_payloads() {
        for (tag, payload) in [
            (TAG_HASH_INFO_REQUEST, &b"\x00\x00\x00\x09crc"[..]),
            (TAG_JOB_DONE, &[0u8; 23][..]),
            (TAG_JOB_DONE, &[0u8; 25][..]),
            (TAG_CANDIDATE_CHUNK, &[0xff; 8][..]),
            (TAG_HASH_INFO_REQUEST, &b"\x00\x00\x00\x01\xff"[..]),
        ] {
            assert!(
                matches!(
                    Message::decode_payload(tag, payload),
                    Err(WireError::Malformed(_))
                ),
                "{tag} {payload:?}"
            );
        }
    }

    #[test]
    fn eof_handling() {
        assert!(matches!(
            read_message(&mut [].as_slice(), DEFAULT_MAX_FRAME),
            Err(WireError::Closed)
        ));
        assert!(matches!(
            read_message(&mut [0u8, 0].as_slice(), DEFAULT_MAX_FRAME),
            Err(WireError::Io(_))
        ));
    }

    #[test]
    fn codes_round_trip() {
        for c in ErrorCode::ALL {
            assert_eq!(ErrorCode::parse(c.as_str()), Some(c));
        }
    }
}
