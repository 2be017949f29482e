//! Client side of a job: request hash info, submit the vector, collect.

use std::io::{self, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;

use thiserror::Error;

use super::{read_message, write_message, Message, WireError, DEFAULT_MAX_FRAME};
use crate::engine::{CandidatePair, Sink};
use crate::hashers::Registry;
use crate::planner::{Plan, PlanError, PlanRequest, PlanStore};
use crate::potfile::{self, PotfileError, PotfileWriter};
use crate::predicate::PredicateVector;
use crate::verifier::{chk_cs, TargetLookup};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("cannot connect: {0}")]
    Connect(#[source] io::Error),
    #[error("connection lost after {received} candidate pairs")]
    ConnectionLost { received: u64 },
    #[error("server error {code}: {text}")]
    Server { code: String, text: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("server reports {server} digest nibbles for {algo}, expected {local}")]
    DigestLength {
        algo: String,
        server: u64,
        local: usize,
    },
    #[error("writing candidates: {0}")]
    Sink(#[source] io::Error),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Potfile(#[from] PotfileError),
    #[error(transparent)]
    Hash(#[from] crate::hashers::HashError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashInfo {
    pub algo: String,
    pub digest_nibbles: u64,
    pub rate_hps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JobSummary {
    pub hashed: u64,
    pub hits: u64,
    pub elapsed_ms: u64,
    /// Pairs actually received, which the server's `hits` should equal.
    pub received: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Fresh,
    Acked,
    Submitted,
    Done,
}

/// Copies everything written to `inner` into `log`.
struct Recorder<W> {
    inner: W,
    log: Vec<u8>,
}

impl<W: Write> Write for Recorder<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.log.extend_from_slice(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub struct ClientSession {
    reader: BufReader<TcpStream>,
    writer: Recorder<BufWriter<TcpStream>>,
    max_frame: u32,
    stage: Stage,
}

// Any transport failure mid-job counts as losing the server.
fn lost(_: io::Error, received: u64) -> SessionError {
    SessionError::ConnectionLost { received }
}

impl ClientSession {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, SessionError> {
        let stream = TcpStream::connect(addr).map_err(SessionError::Connect)?;
        Self::from_stream(stream).map_err(SessionError::Connect)
    }

    pub fn from_stream(stream: TcpStream) -> io::Result<Self> {
        let _ = stream.set_nodelay(true);
        Ok(ClientSession {
            reader: BufReader::new(stream.try_clone()?),
            writer: Recorder {
                inner: BufWriter::new(stream),
                log: Vec::new(),
            },
            max_frame: DEFAULT_MAX_FRAME,
            stage: Stage::Fresh,
        })
    }

    /// Every byte sent to the server so far.
    pub fn outbound(&self) -> &[u8] {
        &self.writer.log
    }

    fn send(&mut self, msg: &Message) -> Result<(), SessionError> {
        write_message(&mut self.writer, msg).map_err(|e| lost(e, 0))
    }

    fn recv(&mut self, received: u64) -> Result<Message, SessionError> {
        match read_message(&mut self.reader, self.max_frame) {
            Ok(Message::ErrorReply { code, text }) => Err(SessionError::Server { code, text }),
            Ok(m) => Ok(m),
            Err(WireError::Closed) => Err(SessionError::ConnectionLost { received }),
            Err(WireError::Io(e)) => Err(lost(e, received)),
            Err(e) => Err(SessionError::Protocol(e.to_string())),
        }
    }

    fn expect_stage(&self, stage: Stage, what: &str) -> Result<(), SessionError> {
        if self.stage != stage {
            return Err(SessionError::Protocol(format!("{what} is out of order")));
        }
        Ok(())
    }

    pub fn hash_info(&mut self, algo: &str) -> Result<HashInfo, SessionError> {
        self.expect_stage(Stage::Fresh, "hash-info request")?;
        self.send(&Message::HashInfoRequest { algo: algo.into() })?;
        match self.recv(0)? {
            Message::HashInfoAck {
                algo,
                digest_nibbles,
                rate_hps,
            } => {
                self.stage = Stage::Acked;
                Ok(HashInfo {
                    algo,
                    digest_nibbles,
                    rate_hps,
                })
            }
            other => Err(SessionError::Protocol(format!(
                "expected HashInfoAck, got {}",
                other.name()
            ))),
        }
    }

    pub fn submit(
        &mut self,
        algo: &str,
        vector: &PredicateVector,
        keyspace: &str,
        corpus: Option<&[u8]>,
    ) -> Result<(), SessionError> {
        self.expect_stage(Stage::Acked, "job submission")?;
        self.send(&Message::JobSubmit {
            algo: algo.into(),
            vector_hex: vector.to_hex(),
            keyspace: keyspace.into(),
            corpus: corpus.map(<[u8]>::to_vec),
        })?;
        self.stage = Stage::Submitted;
        Ok(())
    }

    /// Streams candidate chunks into `sink` until the done frame.
    pub fn collect<S: Sink>(&mut self, mut sink: S) -> Result<JobSummary, SessionError> {
        self.expect_stage(Stage::Submitted, "collecting candidates")?;
        let mut received = 0u64;
        loop {
            let msg = match self.recv(received) {
                Ok(m) => m,
                Err(e) => {
                    let _ = sink.finish();
                    return Err(e);
                }
            };
            match msg {
                Message::CandidateChunk { pairs } => {
                    received += pairs.len() as u64;
                    sink.append(&pairs).map_err(SessionError::Sink)?;
                }
                Message::JobDone {
                    hashed,
                    hits,
                    elapsed_ms,
                } => {
                    sink.finish().map_err(SessionError::Sink)?;
                    self.stage = Stage::Done;
                    return Ok(JobSummary {
                        hashed,
                        hits,
                        elapsed_ms,
                        received,
                    });
                }
                other => {
                    let _ = sink.finish();
                    return Err(SessionError::Protocol(format!(
                        "expected CandidateChunk or JobDone, got {}",
                        other.name()
                    )));
                }
            }
        }
    }
}

/// Writes to a potfile and keeps the pairs in memory.
struct Collect<'a, W: Write> {
    pot: PotfileWriter<W>,
    pairs: &'a mut Vec<CandidatePair>,
}

impl<W: Write> Sink for Collect<'_, W> {
    fn append(&mut self, batch: &[CandidatePair]) -> io::Result<()> {
        self.pot.append(batch)?;
        self.pot.finish()?;
        self.pairs.extend_from_slice(batch);
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.pot.finish()
    }
}

#[derive(Debug)]
pub struct SessionOutcome {
    pub plan: Plan,
    pub info: HashInfo,
    pub pairs: Vec<CandidatePair>,
    pub summary: JobSummary,
    pub lookup: TargetLookup,
    pub outbound: Vec<u8>,
}

/// Runs a whole job against `session`: reads hash info, plans the vector
/// locally, submits it and streams the candidates into `potfile_path`.
/// If the connection drops the potfile keeps what arrived and is marked
/// partial.
pub fn run_job(
    session: &mut ClientSession,
    registry: &Registry,
    plan_or_request: PlanSource<'_>,
    corpus: Option<&[u8]>,
    potfile_path: &Path,
) -> Result<SessionOutcome, SessionError> {
    let algo = match &plan_or_request {
        PlanSource::Plan(p) => p.algo.clone(),
        PlanSource::Request(r, _) | PlanSource::Vector(r, _, _) => r.algo.clone(),
    };
    let hasher = registry.get(&algo)?;
    let info = session.hash_info(&algo)?;
    if info.digest_nibbles != hasher.digest_nibbles() as u64 {
        return Err(SessionError::DigestLength {
            algo,
            server: info.digest_nibbles,
            local: hasher.digest_nibbles(),
        });
    }
    let plan = match plan_or_request {
        PlanSource::Plan(p) => p.clone(),
        PlanSource::Request(req, store) => Plan::build(req, store)?,
        PlanSource::Vector(req, vector, store) => Plan::from_vector(req, vector, store)?,
    };
    session.submit(&plan.algo, &plan.vector, &plan.keyspace, corpus)?;

    potfile::clear_partial(potfile_path)?;
    let mut pairs = Vec::new();
    let sink = Collect {
        pot: PotfileWriter::create(potfile_path)?,
        pairs: &mut pairs,
    };
    let summary = match session.collect(sink) {
        Ok(s) => s,
        Err(e) => {
            if matches!(e, SessionError::ConnectionLost { .. }) {
                potfile::mark_partial(potfile_path)?;
            }
            return Err(e);
        }
    };
    let lookup = chk_cs(&pairs, &plan.target, hasher.as_ref());
    Ok(SessionOutcome {
        plan,
        info,
        pairs,
        summary,
        lookup,
        outbound: session.outbound().to_vec(),
    })
}

pub enum PlanSource<'a> {
    Plan(&'a Plan),
    /// Plan in-session, after the server has answered the hash-info request.
    Request(PlanRequest, &'a mut PlanStore),
    /// Record a caller-chosen vector in-session.
    Vector(PlanRequest, PredicateVector, &'a mut PlanStore),
}

/// Connects, plans and runs one job end to end.
pub fn client_session(
    addr: impl ToSocketAddrs,
    request: PlanRequest,
    store: &mut PlanStore,
    corpus: Option<&[u8]>,
    potfile_path: &Path,
) -> Result<SessionOutcome, SessionError> {
    let mut session = ClientSession::connect(addr)?;
    run_job(
        &mut session,
        &Registry::default(),
        PlanSource::Request(request, store),
        corpus,
        potfile_path,
    )
}
